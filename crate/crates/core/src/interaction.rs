//! Finite-difference interaction detection between sets of variables.
//!
//! All checks share one base point, the lower corner of the box. A set `X1`
//! is perturbed from the lower bound to the box centre and a disjoint set
//! `X2` from the lower bound to the upper bound; the two sets interact when
//! the change caused by `X1` depends on where `X2` sits:
//!
//! ```text
//! d1 = f(base + X1 + X2) - f(base + X2)
//! d2 = f(base + X1)      - f(base)
//! interacting  <=>  |d1 - d2| > eps
//! ```
//!
//! `eps` scales with the four fitness magnitudes and with the unit roundoff
//! of the scalar type.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{evaluate, BlackBox, EvaluationCounter};
use crate::scalar::Scalar;
use crate::varset::VarSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionOptions {
    /// Overrides the threshold constant `k`; defaults to `ceil(sqrt(n)) + 2`.
    pub threshold_k: Option<usize>,
    /// Reuse single-set perturbation values across checks within a run.
    pub reuse_evaluations: bool,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        DetectionOptions {
            threshold_k: None,
            reuse_evaluations: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionVerdict<T> {
    pub interacting: bool,
    pub delta1: T,
    pub delta2: T,
    pub threshold_used: T,
}

/// Threshold constant `k = ceil(sqrt(n)) + 2`.
pub fn default_threshold_k(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize + 2
}

/// `gamma(k) = k u / (1 - k u)` with `u` the unit roundoff of `T`.
pub fn gamma<T: Scalar>(k: usize) -> Result<T> {
    let ku = T::of(k as f64) * T::unit_roundoff();
    if ku >= T::one() {
        return Err(Error::structure(format!("threshold constant k = {k} is too large for the scalar type")));
    }
    Ok(ku / (T::one() - ku))
}

/// Adaptive threshold `gamma(ceil(sqrt(n)) + 2) * sum |f_i|`.
pub fn adaptive_threshold<T: Scalar>(magnitudes: [T; 4], n: usize) -> Result<T> {
    if magnitudes.iter().any(|m| !m.is_finite()) {
        return Err(Error::structure("non-finite fitness in threshold"));
    }
    let g: T = gamma(default_threshold_k(n))?;
    Ok(g * magnitudes.iter().map(|m| m.abs()).sum::<T>())
}

/// Detection state for one decomposition run: the cached base point and
/// fitness, the perturbation levels and the evaluation counter.
pub struct DetectionContext<'a, T: Scalar> {
    problem: &'a dyn BlackBox<T>,
    counter: &'a EvaluationCounter,
    base_point: Vec<T>,
    base_fitness: T,
    centre: Vec<T>,
    upper: Vec<T>,
    gamma: T,
    reuse: bool,
    moved_to_centre: HashMap<VarSet, T>,
    moved_to_upper: HashMap<VarSet, T>,
    scratch: Vec<T>,
}

impl<'a, T: Scalar> DetectionContext<'a, T> {
    /// Evaluates the base point (one evaluation).
    pub fn new(
        problem: &'a dyn BlackBox<T>,
        counter: &'a EvaluationCounter,
        options: &DetectionOptions,
    ) -> Result<Self> {
        let n = problem.dimension();
        let lower = problem.lower().to_vec();
        let upper = problem.upper().to_vec();
        let two = T::of(2.0);
        let centre = lower.iter().zip(&upper).map(|(&l, &u)| (l + u) / two).collect();
        let k = options.threshold_k.unwrap_or_else(|| default_threshold_k(n));
        let gamma = gamma(k)?;
        let base_fitness = evaluate(problem, &lower, counter)?;
        Ok(DetectionContext {
            problem,
            counter,
            scratch: lower.clone(),
            base_point: lower,
            base_fitness,
            centre,
            upper,
            gamma,
            reuse: options.reuse_evaluations,
            moved_to_centre: HashMap::new(),
            moved_to_upper: HashMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.base_point.len()
    }

    pub fn base_fitness(&self) -> T {
        self.base_fitness
    }

    pub fn counter(&self) -> &EvaluationCounter {
        self.counter
    }

    pub fn fes(&self) -> u64 {
        self.counter.total()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    fn eval_moved(&mut self, to_centre: &VarSet, to_upper: &VarSet) -> Result<T> {
        for v in to_centre {
            self.scratch[v] = self.centre[v];
        }
        for v in to_upper {
            self.scratch[v] = self.upper[v];
        }
        let f = evaluate(self.problem, &self.scratch, self.counter);
        for v in to_centre.iter().chain(to_upper.iter()) {
            self.scratch[v] = self.base_point[v];
        }
        f
    }

    fn single(&mut self, set: &VarSet, upper: bool) -> Result<T> {
        let empty = VarSet::new();
        let (c, u) = if upper { (&empty, set) } else { (set, &empty) };
        if !self.reuse {
            return self.eval_moved(c, u);
        }
        let cached = if upper { self.moved_to_upper.get(set) } else { self.moved_to_centre.get(set) };
        if let Some(&f) = cached {
            return Ok(f);
        }
        let f = self.eval_moved(c, u)?;
        let cache = if upper { &mut self.moved_to_upper } else { &mut self.moved_to_centre };
        cache.insert(set.clone(), f);
        Ok(f)
    }

    /// Set-to-set check. Costs three evaluations for sets not seen before.
    pub fn set_interacts(&mut self, x1: &VarSet, x2: &VarSet) -> Result<InteractionVerdict<T>> {
        if x1.is_empty() || x2.is_empty() {
            return Err(Error::structure("interaction check on an empty set"));
        }
        if !x1.is_disjoint(x2) {
            return Err(Error::structure("interaction check on overlapping sets"));
        }
        let f_x1 = self.single(x1, false)?;
        let f_x2 = self.single(x2, true)?;
        let f_both = self.eval_moved(x1, x2)?;
        let delta1 = f_both - f_x2;
        let delta2 = f_x1 - self.base_fitness;
        let sum = self.base_fitness.abs() + f_x1.abs() + f_x2.abs() + f_both.abs();
        let threshold_used = self.gamma * sum;
        Ok(InteractionVerdict {
            interacting: (delta1 - delta2).abs() > threshold_used,
            delta1,
            delta2,
            threshold_used,
        })
    }

    fn interacts(&mut self, x1: &VarSet, x2: &VarSet) -> Result<bool> {
        Ok(self.set_interacts(x1, x2)?.interacting)
    }

    /// The seed together with every variable of `candidates` that directly
    /// interacts with it, found by recursive bisection of `candidates`.
    pub fn interact_closure(&mut self, seed: &VarSet, candidates: &VarSet) -> Result<VarSet> {
        self.interact_closure_ordered(seed, candidates, &mut |_| false)
    }

    /// As [`interact_closure`](Self::interact_closure), visiting halves in a
    /// random order. The result does not depend on the order.
    pub fn interact_closure_shuffled<R: Rng>(
        &mut self,
        seed: &VarSet,
        candidates: &VarSet,
        rng: &mut R,
    ) -> Result<VarSet> {
        self.interact_closure_ordered(seed, candidates, &mut |_| rng.random())
    }

    fn interact_closure_ordered(
        &mut self,
        seed: &VarSet,
        candidates: &VarSet,
        right_first: &mut dyn FnMut(usize) -> bool,
    ) -> Result<VarSet> {
        if candidates.is_empty() {
            return Err(Error::structure("interaction closure over an empty candidate set"));
        }
        if seed.is_empty() {
            return Err(Error::structure("interaction closure of an empty seed"));
        }
        let mut found = Vec::new();
        self.closure_rec(seed, candidates.as_slice(), &mut found, right_first)?;
        Ok(seed.union(&found.into_iter().collect()))
    }

    // Bisects the fixed candidate list so that node sets repeat across calls
    // with different seeds and their upper-moved values can be reused.
    fn closure_rec(
        &mut self,
        seed: &VarSet,
        node: &[usize],
        found: &mut Vec<usize>,
        right_first: &mut dyn FnMut(usize) -> bool,
    ) -> Result<()> {
        let effective: VarSet = VarSet::from_sorted_unchecked(node.iter().copied().filter(|&v| !seed.contains(v)).collect());
        if effective.is_empty() || !self.interacts(seed, &effective)? {
            return Ok(());
        }
        if effective.len() == 1 {
            found.push(effective.as_slice()[0]);
            return Ok(());
        }
        let (left, right) = node.split_at(node.len() / 2);
        let order = if right_first(node.len()) { [right, left] } else { [left, right] };
        for half in order {
            self.closure_rec(seed, half, found, right_first)?;
        }
        Ok(())
    }

    /// Members of `x1` that interact with the set `x2`, found by recursive
    /// bisection of `x1`.
    pub fn interact_ov(&mut self, x1: &VarSet, x2: &VarSet) -> Result<VarSet> {
        if x1.is_empty() {
            return Err(Error::structure("overlap detection on an empty group"));
        }
        if !x1.is_disjoint(x2) {
            return Err(Error::structure("overlap detection on overlapping sets"));
        }
        if x2.is_empty() {
            return Ok(VarSet::new());
        }
        let mut found = Vec::new();
        self.ov_rec(x1, x2, &mut found)?;
        Ok(found.into_iter().collect())
    }

    fn ov_rec(&mut self, node: &VarSet, x2: &VarSet, found: &mut Vec<usize>) -> Result<()> {
        if !self.interacts(node, x2)? {
            return Ok(());
        }
        if node.len() == 1 {
            found.push(node.as_slice()[0]);
            return Ok(());
        }
        let (left, right) = node.halves();
        self.ov_rec(&left, x2, found)?;
        self.ov_rec(&right, x2, found)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{GroundTruth, OverlappingProblem};
    use crate::seed;

    fn diff_chain() -> OverlappingProblem<f64> {
        let f = |x: &[f64]| (x[0] - x[1]).powi(2) + (x[1] - x[2]).powi(2);
        let truth = GroundTruth::from_subcomponents(vec![VarSet::from([0, 1]), VarSet::from([1, 2])]);
        OverlappingProblem::with_uniform_bounds("diff_chain", 3, -1.0, 1.0, Arc::new(f), truth).unwrap()
    }

    fn sphere(n: usize) -> OverlappingProblem<f64> {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let truth = GroundTruth::from_subcomponents((0..n).map(VarSet::singleton).collect());
        OverlappingProblem::with_uniform_bounds("sphere", n, -1.0, 1.0, Arc::new(f), truth).unwrap()
    }

    #[test]
    fn diff_chain_pairs() {
        let p = diff_chain();
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        let v = ctx.set_interacts(&VarSet::from([0]), &VarSet::from([1])).unwrap();
        assert!(v.interacting);
        // base (-1,-1,-1): x1 -> 0 adds 1 with x2 at -1, subtracts 1 with x2 at 1
        assert_eq!(v.delta2, 1.0);
        assert_eq!(v.delta1, -3.0);
        let v = ctx.set_interacts(&VarSet::from([0]), &VarSet::from([2])).unwrap();
        assert!(!v.interacting);
        assert_eq!(v.delta1, v.delta2);
    }

    #[test]
    fn separable_sets_never_interact() {
        let p = sphere(8);
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        let v = ctx.set_interacts(&VarSet::from([0, 3, 5]), &VarSet::from([1, 2, 7])).unwrap();
        assert!(!v.interacting);
    }

    #[test]
    fn set_check_costs_three_evaluations() {
        let p = sphere(6);
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        assert_eq!(c.total(), 1);
        ctx.set_interacts(&VarSet::from([0, 1]), &VarSet::from([2])).unwrap();
        assert_eq!(c.total(), 4);
        ctx.set_interacts(&VarSet::from([3]), &VarSet::from([4, 5])).unwrap();
        assert_eq!(c.total(), 7);
        // both single-set values are reused on a repeat
        ctx.set_interacts(&VarSet::from([3]), &VarSet::from([4, 5])).unwrap();
        assert_eq!(c.total(), 8);
    }

    #[test]
    fn without_reuse_every_check_costs_three() {
        let p = sphere(4);
        let c = EvaluationCounter::new();
        let opts = DetectionOptions { reuse_evaluations: false, ..Default::default() };
        let mut ctx = DetectionContext::new(&p, &c, &opts).unwrap();
        for _ in 0..3 {
            ctx.set_interacts(&VarSet::from([0]), &VarSet::from([1])).unwrap();
        }
        assert_eq!(c.total(), 10);
    }

    #[test]
    fn rejects_overlapping_or_empty_sets() {
        let p = sphere(4);
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        assert!(ctx.set_interacts(&VarSet::from([0, 1]), &VarSet::from([1])).is_err());
        assert!(ctx.set_interacts(&VarSet::new(), &VarSet::from([1])).is_err());
        assert!(ctx.interact_ov(&VarSet::new(), &VarSet::from([1])).is_err());
        assert!(ctx.interact_closure(&VarSet::from([0]), &VarSet::new()).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(adaptive_threshold([0.0f64; 4], 900).unwrap(), 0.0);
        let u = f64::EPSILON / 2.0;
        let expected = 32.0 * u / (1.0 - 32.0 * u);
        let eps = adaptive_threshold([0.25f64; 4], 900).unwrap();
        assert!((eps - expected).abs() <= 1e-30);
        assert!(eps < 1e-13);
        let doubled = adaptive_threshold([0.5f64; 4], 900).unwrap();
        assert_eq!(doubled, 2.0 * eps);
        assert!(adaptive_threshold([f64::NAN, 0.0, 0.0, 0.0], 4).is_err());
    }

    #[test]
    fn absurd_threshold_constant_is_rejected() {
        assert!(gamma::<f32>(1 << 24).is_err());
        assert!(gamma::<f64>(1 << 24).is_ok());
    }

    #[test]
    fn closure_is_direct_neighbourhood() {
        let p = diff_chain();
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        let all = VarSet::full(3);
        assert_eq!(ctx.interact_closure(&VarSet::from([1]), &all).unwrap(), all);
        assert_eq!(ctx.interact_closure(&VarSet::from([0]), &all).unwrap(), VarSet::from([0, 1]));

        let p = sphere(5);
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        assert_eq!(ctx.interact_closure(&VarSet::from([2]), &VarSet::full(5)).unwrap(), VarSet::from([2]));
    }

    #[test]
    fn closure_ignores_visit_order() {
        let p = diff_chain();
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        let reference = ctx.interact_closure(&VarSet::from([1]), &VarSet::full(3)).unwrap();
        let mut rng = seed::rng(4);
        for _ in 0..10 {
            let got = ctx.interact_closure_shuffled(&VarSet::from([1]), &VarSet::full(3), &mut rng).unwrap();
            assert_eq!(got, reference);
        }
    }

    #[test]
    fn ov_of_separable_group_is_empty() {
        let p = sphere(6);
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        assert!(ctx.interact_ov(&VarSet::from([0, 1, 2]), &VarSet::from([3, 4, 5])).unwrap().is_empty());
        assert!(ctx.interact_ov(&VarSet::from([0, 1]), &VarSet::new()).unwrap().is_empty());
    }

    #[test]
    fn single_precision_detection() {
        let f = |x: &[f32]| (x[0] - x[1]).powi(2) + (x[1] - x[2]).powi(2);
        let truth = GroundTruth::from_subcomponents(vec![VarSet::from([0, 1]), VarSet::from([1, 2])]);
        let p = OverlappingProblem::<f32>::with_uniform_bounds("e1", 3, -1.0, 1.0, Arc::new(f), truth).unwrap();
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        assert!(ctx.set_interacts(&VarSet::from([0]), &VarSet::from([1])).unwrap().interacting);
        assert!(!ctx.set_interacts(&VarSet::from([0]), &VarSet::from([2])).unwrap().interacting);
    }
}
