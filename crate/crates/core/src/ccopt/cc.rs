//! Round-robin cooperative coevolution over a decomposition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::es::{phase_evaluations, Covariance, subsolver_phase, SubsolverState, GENERATIONS_PER_PHASE};
use crate::decompose::DecompositionResult;
use crate::error::{Error, Result};
use crate::problem::{evaluate, BlackBox, EvaluationCounter, Phase};
use crate::scalar::Scalar;
use crate::seed;
use crate::varset::VarSet;

/// Best full solution found so far and its fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector<T> {
    pub x: Vec<T>,
    pub fitness: T,
}

impl<T: Scalar> ContextVector<T> {
    /// Replaces the context if `fitness` is not worse.
    pub fn update(&mut self, x: &[T], fitness: T) -> bool {
        if fitness <= self.fitness {
            self.x.copy_from_slice(x);
            self.fitness = fitness;
            true
        } else {
            false
        }
    }
}

/// Fitness improvement from each group's most recent activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionLedger {
    pub contributions: Vec<f64>,
}

impl ContributionLedger {
    pub fn new(groups: usize) -> Self {
        ContributionLedger {
            contributions: vec![0.0; groups],
        }
    }

    pub fn record(&mut self, group: usize, improvement: f64) {
        self.contributions[group] = improvement.max(0.0);
    }
}

/// The variables each group optimizes once shared variables are assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub active: Vec<VarSet>,
}

/// Gives every variable found in several groups to the containing group with
/// the largest contribution, the lowest index winning ties. Variables in a
/// single group stay with it.
pub fn allocate_shared(groups: &[VarSet], ledger: &ContributionLedger) -> Result<AllocationPlan> {
    if groups.len() != ledger.contributions.len() {
        return Err(Error::structure("ledger size differs from the number of groups"));
    }
    let n = groups.iter().filter_map(|g| g.as_slice().last()).max().map_or(0, |m| m + 1);
    allocate_shared_n(groups, ledger, n)
}

/// As [`allocate_shared`] for a problem of dimension `n`; fails when a
/// variable below `n` lies in no group.
pub fn allocate_shared_n(groups: &[VarSet], ledger: &ContributionLedger, n: usize) -> Result<AllocationPlan> {
    if groups.len() != ledger.contributions.len() {
        return Err(Error::structure("ledger size differs from the number of groups"));
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, g) in groups.iter().enumerate() {
        for v in g {
            owner[v] = match owner[v] {
                Some(j) if j != i && ledger.contributions[j] >= ledger.contributions[i] => Some(j),
                _ => Some(i),
            };
        }
    }
    if let Some(v) = owner.iter().position(Option::is_none) {
        return Err(Error::structure(format!("variable {v} belongs to no group")));
    }
    let active = groups
        .iter()
        .enumerate()
        .map(|(i, g)| g.iter().filter(|&v| owner[v] == Some(i)).collect())
        .collect();
    Ok(AllocationPlan { active })
}

/// Order in which groups are activated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduling {
    /// Every group once per cycle.
    #[default]
    RoundRobin,
    /// One bootstrap cycle, then always the group with the largest recorded
    /// contribution (lowest index on ties).
    Contribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CcOptions {
    pub scheduling: Scheduling,
    pub covariance: Covariance,
    /// Reallocate shared variables after every cycle; otherwise only once,
    /// after the bootstrap cycle.
    pub reallocate: bool,
    /// Subsolver generations per activation of a group.
    pub phase_generations: usize,
    /// Initial per-variable step size as a fraction of the box width.
    pub initial_step: f64,
}

impl Default for CcOptions {
    fn default() -> Self {
        CcOptions {
            scheduling: Scheduling::RoundRobin,
            covariance: Covariance::Full,
            reallocate: true,
            phase_generations: GENERATIONS_PER_PHASE,
            initial_step: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcOutcome<T> {
    pub best_x: Vec<T>,
    pub best_f: T,
    /// `(evaluations used, best fitness)` after the initial point and after
    /// every phase.
    pub trajectory: Vec<(u64, f64)>,
    pub fes_used: u64,
}

pub fn cc_optimize<T: Scalar>(
    problem: &dyn BlackBox<T>,
    decomposition: &DecompositionResult,
    budget: u64,
    seed: u64,
    options: &CcOptions,
) -> Result<CcOutcome<T>> {
    let counter = EvaluationCounter::new();
    cc_optimize_counted(problem, decomposition, budget, seed, options, &counter)
}

/// Optimizes with at most `budget` evaluations charged to `counter`. A budget
/// too small for any phase yields the evaluated initial context.
pub fn cc_optimize_counted<T: Scalar>(
    problem: &dyn BlackBox<T>,
    decomposition: &DecompositionResult,
    budget: u64,
    seed: u64,
    options: &CcOptions,
    counter: &EvaluationCounter,
) -> Result<CcOutcome<T>> {
    let n = problem.dimension();
    if !decomposition.is_consistent(n) {
        return Err(Error::structure("decomposition does not cover the problem's variables"));
    }
    if options.phase_generations == 0 {
        return Err(Error::config("phase_generations", "must be at least 1"));
    }
    if budget == 0 {
        return Err(Error::config("budget", "budget must exceed one subsolver phase"));
    }
    let groups = &decomposition.subcomponents;

    counter.set_phase(Phase::Optimization);
    let start = counter.total();
    let used = |c: &EvaluationCounter| c.total() - start;
    let mut rng = seed::rng(seed);
    let lower = problem.lower();
    let upper = problem.upper();
    let x0: Vec<T> = (0..n)
        .map(|i| {
            let (l, u) = (lower[i].to_f64_lossy(), upper[i].to_f64_lossy());
            T::of(l + (u - l) * rng.random::<f64>())
        })
        .collect();
    let f0 = evaluate(problem, &x0, counter)?;
    let mut context = ContextVector { x: x0, fitness: f0 };
    let mut state = SubsolverState::new(
        (0..n)
            .map(|i| options.initial_step * (upper[i].to_f64_lossy() - lower[i].to_f64_lossy()))
            .collect(),
        options.covariance,
    );
    let mut trajectory = vec![(used(counter), f0.to_f64_lossy())];
    let mut ledger = ContributionLedger::new(groups.len());
    let mut plan = allocate_shared_n(groups, &ledger, n)?;
    let smallest_phase = plan
        .active
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| phase_evaluations(g.len(), options.phase_generations))
        .min()
        .unwrap_or(u64::MAX);
    if budget - 1 < smallest_phase {
        return Ok(CcOutcome {
            best_f: context.fitness,
            best_x: context.x,
            trajectory,
            fes_used: used(counter),
        });
    }

    let mut cycle = 0usize;
    'run: loop {
        if cycle == 1 || (cycle > 1 && options.reallocate) {
            plan = allocate_shared_n(groups, &ledger, n)?;
        }
        let order: Vec<usize> = match options.scheduling {
            Scheduling::Contribution if cycle > 0 => vec![busiest(&ledger, &plan)],
            _ => (0..groups.len()).collect(),
        };
        for i in order {
            let active = &plan.active[i];
            let left = budget.saturating_sub(used(counter));
            if left == 0 {
                break 'run;
            }
            if active.is_empty() {
                continue;
            }
            let fes = phase_evaluations(active.len(), options.phase_generations).min(left);
            let gain = subsolver_phase(problem, active, &mut context, &mut state, fes, counter, &mut rng)?;
            ledger.record(i, gain);
            trajectory.push((used(counter), context.fitness.to_f64_lossy()));
        }
        cycle += 1;
    }

    Ok(CcOutcome {
        best_f: context.fitness,
        best_x: context.x,
        trajectory,
        fes_used: used(counter),
    })
}

// Group with the largest contribution among those owning variables.
fn busiest(ledger: &ContributionLedger, plan: &AllocationPlan) -> usize {
    let mut best = None;
    for (i, c) in ledger.contributions.iter().enumerate() {
        if plan.active[i].is_empty() {
            continue;
        }
        if best.is_none_or(|(_, b)| *c > b) {
            best = Some((i, *c));
        }
    }
    best.map_or(0, |(i, _)| i)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{GroundTruth, OverlappingProblem};

    #[test]
    fn allocation_prefers_larger_contribution_then_lower_index() {
        let groups = vec![VarSet::from([0, 1, 2]), VarSet::from([2, 3])];
        let mut ledger = ContributionLedger::new(2);
        let plan = allocate_shared(&groups, &ledger).unwrap();
        assert_eq!(plan.active, vec![VarSet::from([0, 1, 2]), VarSet::from([3])]);
        ledger.record(1, 5.0);
        let plan = allocate_shared(&groups, &ledger).unwrap();
        assert_eq!(plan.active, vec![VarSet::from([0, 1]), VarSet::from([2, 3])]);
    }

    #[test]
    fn sphere_improves_within_budget() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let truth = GroundTruth::from_subcomponents(vec![VarSet::from([0, 1, 2]), VarSet::from([3, 4, 5])]);
        let p = OverlappingProblem::with_uniform_bounds("sphere", 6, -5.0, 5.0, Arc::new(f), truth.clone()).unwrap();
        let plan = DecompositionResult {
            algorithm: "given".into(),
            seed: 0,
            fes_used: 0,
            subcomponents: truth.subcomponents.clone(),
            shared_groups: vec![VarSet::new(); 2],
            refined: true,
        };
        let out = cc_optimize(&p, &plan, 5000, 1, &CcOptions::default()).unwrap();
        assert!(out.fes_used <= 5000);
        assert!(out.best_f < 1e-6, "{}", out.best_f);
        assert_eq!(f(&out.best_x), out.best_f);
        assert!(out.trajectory.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
    }

    #[test]
    fn tiny_budget_returns_initial_context() {
        let f = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let truth = GroundTruth::from_subcomponents(vec![VarSet::from([0, 1])]);
        let p = OverlappingProblem::with_uniform_bounds("s", 2, -1.0, 1.0, Arc::new(f), truth).unwrap();
        let plan = DecompositionResult::single_group(2);
        let out = cc_optimize(&p, &plan, 10, 0, &CcOptions::default()).unwrap();
        assert_eq!(out.fes_used, 1);
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(f(&out.best_x), out.best_f);
        let err = cc_optimize(&p, &plan, 0, 0, &CcOptions::default()).unwrap_err();
        assert!(err.to_string().contains("budget must exceed one subsolver phase"));
    }

    #[test]
    fn uncovered_variable_is_rejected() {
        let groups = vec![VarSet::from([0, 2])];
        assert!(allocate_shared_n(&groups, &ContributionLedger::new(1), 3).is_err());
    }
}
