//! Evaluatable problems, function-evaluation accounting and ground truth.

use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::varset::VarSet;

/// A deterministic objective over a box. This is everything a decomposer or
/// optimizer is allowed to see.
pub trait BlackBox<T: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;
    fn lower(&self) -> &[T];
    fn upper(&self) -> &[T];
    /// Raw objective value; callers go through [`evaluate`] so the call is counted.
    fn value(&self, x: &[T]) -> T;
}

/// Objective function body shared by problems.
pub trait Objective<T: Scalar>: Send + Sync {
    fn value(&self, x: &[T]) -> T;
}

impl<T: Scalar, F> Objective<T> for F
where
    F: Fn(&[T]) -> T + Send + Sync,
{
    fn value(&self, x: &[T]) -> T {
        self(x)
    }
}

/// Which part of an experiment an evaluation is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Grouping,
    Refinement,
    Optimization,
}

impl Phase {
    const ALL: [Phase; 3] = [Phase::Grouping, Phase::Refinement, Phase::Optimization];

    fn slot(self) -> usize {
        self as usize
    }
}

/// Counts objective calls. Increments are atomic so a counter may be shared
/// by worker threads inside one run.
#[derive(Debug, Default)]
pub struct EvaluationCounter {
    total: AtomicU64,
    phases: [AtomicU64; 3],
    phase: AtomicUsize,
    out_of_bounds: AtomicU64,
}

impl EvaluationCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::Relaxed)
    }

    pub fn phase_total(&self, phase: Phase) -> u64 {
        self.phases[phase.slot()].load(Ordering::Relaxed)
    }

    /// Evaluations at points outside the box. Allowed, but recorded.
    pub fn out_of_bounds(&self) -> u64 {
        self.out_of_bounds.load(Ordering::Relaxed)
    }

    pub fn set_phase(&self, phase: Phase) {
        self.phase.store(phase.slot(), Ordering::Relaxed);
    }

    pub fn phase(&self) -> Phase {
        Phase::ALL[self.phase.load(Ordering::Relaxed)]
    }

    fn tick(&self, in_bounds: bool) {
        self.total.fetch_add(1, Ordering::Relaxed);
        self.phases[self.phase.load(Ordering::Relaxed)].fetch_add(1, Ordering::Relaxed);
        if !in_bounds {
            self.out_of_bounds.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// Evaluates `problem` at `x`, charging one evaluation to `counter`.
pub fn evaluate<T: Scalar, P: BlackBox<T> + ?Sized>(
    problem: &P,
    x: &[T],
    counter: &EvaluationCounter,
) -> Result<T> {
    let n = problem.dimension();
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    let in_bounds = x
        .iter()
        .zip(problem.lower().iter().zip(problem.upper()))
        .all(|(v, (lo, hi))| v >= lo && v <= hi);
    let f = problem.value(x);
    counter.tick(in_bounds);
    if f.is_nan() {
        return Err(Error::NanFitness {
            x: x.iter().map(|v| v.to_f64_lossy()).collect(),
        });
    }
    Ok(f)
}

/// True subcomponent structure of a generated problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subcomponents: Vec<VarSet>,
    pub shared_variables: Vec<VarSet>,
}

impl GroundTruth {
    /// Builds the truth from subcomponents, deriving the shared sets.
    pub fn from_subcomponents(subcomponents: Vec<VarSet>) -> Self {
        let mut occurrences = std::collections::HashMap::<usize, usize>::new();
        for g in &subcomponents {
            for v in g {
                *occurrences.entry(v).or_default() += 1;
            }
        }
        let shared_variables = subcomponents
            .iter()
            .map(|g| g.iter().filter(|v| occurrences[v] >= 2).collect())
            .collect();
        GroundTruth {
            subcomponents,
            shared_variables,
        }
    }

    /// Checks cover, containment and the shared-iff-repeated rule for `n` variables.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.subcomponents.len() != self.shared_variables.len() {
            return Err(Error::structure("shared_variables not aligned with subcomponents"));
        }
        let mut count = vec![0usize; n];
        for g in &self.subcomponents {
            for v in g {
                if v >= n {
                    return Err(Error::structure(format!("variable {v} out of range 0..{n}")));
                }
                count[v] += 1;
            }
        }
        if let Some(v) = count.iter().position(|&c| c == 0) {
            return Err(Error::structure(format!("variable {v} is in no subcomponent")));
        }
        for (g, s) in self.subcomponents.iter().zip(&self.shared_variables) {
            if !s.is_subset(g) {
                return Err(Error::structure("shared set not contained in its subcomponent"));
            }
            for v in g {
                if (count[v] >= 2) != s.contains(v) {
                    return Err(Error::structure(format!(
                        "variable {v} shared-flag disagrees with its occurrence count"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pairs of distinct variables that appear together in some subcomponent.
    pub fn interacts_directly(&self, a: usize, b: usize) -> bool {
        a != b
            && self
                .subcomponents
                .iter()
                .any(|g| g.contains(a) && g.contains(b))
    }
}

/// Fraction of the `n` variables that belong to two or more subcomponents.
pub fn overlapping_degree(truth: &GroundTruth, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::structure("overlapping degree of an empty problem"));
    }
    let mut count = vec![0usize; n];
    for g in &truth.subcomponents {
        for v in g {
            if v >= n {
                return Err(Error::structure(format!("variable {v} out of range 0..{n}")));
            }
            count[v] += 1;
        }
    }
    Ok(count.iter().filter(|&&c| c >= 2).count() as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Line,
    Ring,
    Complex,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conflict {
    Conforming,
    Conflicting,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "line" => Ok(Topology::Line),
            "ring" => Ok(Topology::Ring),
            "complex" => Ok(Topology::Complex),
            _ => Err(Error::config("topology", format!("unknown topology `{s}` (line | ring | complex)"))),
        }
    }
}

impl std::str::FromStr for Conflict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conforming" => Ok(Conflict::Conforming),
            "conflicting" => Ok(Conflict::Conflicting),
            _ => Err(Error::config("conflict", format!("unknown conflict mode `{s}` (conforming | conflicting)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub name: String,
    pub topology: Topology,
    pub conflict: Conflict,
    pub overlapping_degree: f64,
}

/// A box-bounded black-box problem with hidden ground-truth structure.
#[derive(Clone)]
pub struct OverlappingProblem<T: Scalar> {
    lower: Vec<T>,
    upper: Vec<T>,
    objective: Arc<dyn Objective<T>>,
    truth: GroundTruth,
    meta: ProblemMeta,
}

impl<T: Scalar> OverlappingProblem<T> {
    pub fn new(
        name: impl Into<String>,
        lower: Vec<T>,
        upper: Vec<T>,
        objective: Arc<dyn Objective<T>>,
        truth: GroundTruth,
        topology: Topology,
        conflict: Conflict,
    ) -> Result<Self> {
        let n = lower.len();
        if n == 0 {
            return Err(Error::structure("problem dimension must be positive"));
        }
        if upper.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: upper.len(),
            });
        }
        if let Some(i) = (0..n).find(|&i| lower[i].partial_cmp(&upper[i]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::structure(format!("lower bound not below upper bound at {i}")));
        }
        truth.validate(n)?;
        let od = overlapping_degree(&truth, n)?;
        Ok(OverlappingProblem {
            lower,
            upper,
            objective,
            truth,
            meta: ProblemMeta {
                name: name.into(),
                topology,
                conflict,
                overlapping_degree: od,
            },
        })
    }

    /// Problem with uniform bounds `[lo, hi]` on every variable.
    pub fn with_uniform_bounds(
        name: impl Into<String>,
        n: usize,
        lo: f64,
        hi: f64,
        objective: Arc<dyn Objective<T>>,
        truth: GroundTruth,
    ) -> Result<Self> {
        Self::new(
            name,
            vec![T::of(lo); n],
            vec![T::of(hi); n],
            objective,
            truth,
            Topology::Custom,
            Conflict::Conforming,
        )
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn meta(&self) -> &ProblemMeta {
        &self.meta
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub(crate) fn set_meta(&mut self, topology: Topology, conflict: Conflict) {
        self.meta.topology = topology;
        self.meta.conflict = conflict;
    }
}

impl<T: Scalar> BlackBox<T> for OverlappingProblem<T> {
    fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn lower(&self) -> &[T] {
        &self.lower
    }

    fn upper(&self) -> &[T] {
        &self.upper
    }

    fn value(&self, x: &[T]) -> T {
        self.objective.value(x)
    }
}

impl<T: Scalar> fmt::Debug for OverlappingProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OverlappingProblem")
            .field("meta", &self.meta)
            .field("dimension", &self.lower.len())
            .finish_non_exhaustive()
    }
}
