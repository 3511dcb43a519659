//! Two-stage overlapping decomposition.
//!
//! Stage I repeatedly picks an ungrouped variable at random, takes its direct
//! interaction neighbourhood over all variables as a subcomponent and finds
//! the members of that subcomponent interacting with the rest (its shared
//! variables). A randomly picked variable that is itself shared yields the
//! union of the subcomponents containing it.
//!
//! Stage II inspects every formed subcomponent: when two of its shared
//! variables that face different neighbours do not interact, the group is a
//! union, and a variable facing one neighbour is used to cut one true
//! subcomponent out of it.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::result::DecompositionResult;
use crate::error::{Error, Result};
use crate::interaction::{DetectionContext, DetectionOptions};
use crate::problem::{BlackBox, EvaluationCounter, Phase};
use crate::scalar::Scalar;
use crate::seed;
use crate::varset::VarSet;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OedgOptions {
    #[serde(default)]
    pub detection: DetectionOptions,
    /// Forces the first variable picked in Stage I.
    #[serde(default)]
    pub first_pick: Option<usize>,
    /// Skips Stage II; used to inspect the raw grouping.
    #[serde(default)]
    pub skip_refinement: bool,
}

pub fn oedg<T: Scalar>(problem: &dyn BlackBox<T>, seed: u64, options: &OedgOptions) -> Result<DecompositionResult> {
    let counter = EvaluationCounter::new();
    oedg_counted(problem, seed, options, &counter)
}

/// As [`oedg`], charging evaluations to a caller-owned counter.
pub fn oedg_counted<T: Scalar>(
    problem: &dyn BlackBox<T>,
    seed: u64,
    options: &OedgOptions,
    counter: &EvaluationCounter,
) -> Result<DecompositionResult> {
    let n = problem.dimension();
    if n < 2 {
        return Err(Error::structure("decomposition needs at least two variables"));
    }
    if let Some(v) = options.first_pick {
        if v >= n {
            return Err(Error::structure(format!("forced first pick {v} out of range")));
        }
    }
    let start = counter.total();
    counter.set_phase(Phase::Grouping);
    let mut rng = seed::rng(seed);
    let mut ctx = DetectionContext::new(problem, counter, &options.detection)?;

    let all = VarSet::full(n);
    let mut ungrouped = all.clone();
    let mut groups: Vec<VarSet> = Vec::new();
    let mut shared: Vec<VarSet> = Vec::new();
    let mut forced = options.first_pick;
    while !ungrouped.is_empty() {
        let pick = forced
            .take()
            .unwrap_or_else(|| ungrouped.as_slice()[rng.random_range(0..ungrouped.len())]);
        let group = ctx.interact_closure(&VarSet::singleton(pick), &all)?;
        ungrouped = ungrouped.difference(&group);
        let rest = all.difference(&group);
        let ov = ctx.interact_ov(&group, &rest)?;
        groups.push(group);
        shared.push(ov);
    }

    let mut refined = true;
    if !options.skip_refinement {
        counter.set_phase(Phase::Refinement);
        let twice = occurring_twice(&shared);
        let mut i = 0;
        while i < groups.len() {
            while sud(i, &shared, &mut ctx)? {
                if !sd(i, &mut groups, &mut shared, &twice, &all, &mut ctx, &mut rng)? {
                    refined = false;
                    break;
                }
            }
            i += 1;
        }
    }

    Ok(DecompositionResult {
        algorithm: "oedg".into(),
        seed,
        fes_used: counter.total() - start,
        subcomponents: groups,
        shared_groups: shared,
        refined,
    })
}

/// Variables appearing in exactly two shared-variable groups.
pub fn occurring_twice(shared: &[VarSet]) -> VarSet {
    let mut count = HashMap::<usize, usize>::new();
    for g in shared {
        for v in g {
            *count.entry(v).or_default() += 1;
        }
    }
    count.into_iter().filter(|&(_, c)| c == 2).map(|(v, _)| v).collect()
}

/// Subcomponent-union detection for group `i`.
///
/// For every other group `j` sharing variables `X_s` with `OV_i`, each member
/// of `X_s` must interact with the rest `X_r` of `OV_i` and each member of
/// `X_r` with `X_s`; a failure marks group `i` as a union of subcomponents.
pub fn sud<T: Scalar>(i: usize, shared: &[VarSet], ctx: &mut DetectionContext<'_, T>) -> Result<bool> {
    let own = &shared[i];
    for (j, other) in shared.iter().enumerate() {
        if j == i {
            continue;
        }
        let common = own.intersection(other);
        if common.is_empty() {
            continue;
        }
        let rest = own.difference(&common);
        if rest.is_empty() {
            continue;
        }
        for v in &common {
            if !ctx.set_interacts(&VarSet::singleton(v), &rest)?.interacting {
                return Ok(true);
            }
        }
        for v in &rest {
            if !ctx.set_interacts(&VarSet::singleton(v), &common)?.interacting {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Subcomponent detection: splits one true subcomponent out of group `i`.
///
/// Candidate cut variables are the shared variables of group `i` that occur
/// in exactly two shared groups, or else its non-shared variables; they are
/// tried in random order until one's neighbourhood inside the group is a
/// strict subset of it. Returns `false`, leaving the groups untouched, when
/// no candidate splits the group.
#[allow(clippy::too_many_arguments)]
pub fn sd<T: Scalar, R: Rng>(
    i: usize,
    groups: &mut Vec<VarSet>,
    shared: &mut Vec<VarSet>,
    twice: &VarSet,
    all: &VarSet,
    ctx: &mut DetectionContext<'_, T>,
    rng: &mut R,
) -> Result<bool> {
    let group = groups[i].clone();
    let mut candidates = shared[i].intersection(twice);
    if candidates.is_empty() {
        candidates = group.difference(&shared[i]);
    }
    let mut order = candidates.into_vec();
    order.shuffle(rng);

    let mut cut = None;
    for v in order {
        let piece = ctx.interact_closure(&VarSet::singleton(v), &group)?;
        if piece.len() < group.len() {
            cut = Some(piece);
            break;
        }
    }
    let Some(piece) = cut else {
        return Ok(false);
    };

    let remainder = group.difference(&piece);
    let boundary = ctx.interact_ov(&piece, &remainder)?;
    let shrunk = remainder.union(&boundary);
    shared[i] = ctx.interact_ov(&shrunk, &all.difference(&shrunk))?;
    groups[i] = shrunk;
    let piece_shared = ctx.interact_ov(&piece, &all.difference(&piece))?;
    groups.push(piece);
    shared.push(piece_shared);
    Ok(true)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{GroundTruth, OverlappingProblem};

    fn separable_blocks() -> OverlappingProblem<f64> {
        // three disjoint blocks of pairwise-coupled variables
        let f = |x: &[f64]| (x[0] + x[1]).powi(2) + (x[2] + x[3] + x[4]).powi(2) + (x[5] * x[6]);
        let truth = GroundTruth::from_subcomponents(vec![
            VarSet::from([0, 1]),
            VarSet::from([2, 3, 4]),
            VarSet::from([5, 6]),
        ]);
        OverlappingProblem::with_uniform_bounds("blocks", 7, -1.0, 2.0, Arc::new(f), truth).unwrap()
    }

    #[test]
    fn disjoint_blocks_have_no_shared_variables() {
        let p = separable_blocks();
        for s in 0..5 {
            let r = oedg(&p, s, &OedgOptions::default()).unwrap();
            assert_eq!(r.sorted_subcomponents(), {
                let mut t = p.truth().subcomponents.clone();
                t.sort();
                t
            });
            assert!(r.shared_groups.iter().all(VarSet::is_empty));
            assert!(r.is_consistent(7));
        }
    }

    #[test]
    fn occurring_twice_counts_exactly_two() {
        let ov = vec![VarSet::from([1, 2]), VarSet::from([2, 3]), VarSet::from([3, 2])];
        assert_eq!(occurring_twice(&ov), VarSet::from([1, 3]).difference(&VarSet::from([1])));
    }

    #[test]
    fn sud_without_common_variables_is_false() {
        let p = separable_blocks();
        let c = EvaluationCounter::new();
        let mut ctx = DetectionContext::new(&p, &c, &DetectionOptions::default()).unwrap();
        let ov = vec![VarSet::from([0]), VarSet::from([2])];
        assert!(!sud(0, &ov, &mut ctx).unwrap());
    }

    #[test]
    fn rejects_tiny_problems_and_bad_picks() {
        let f = |x: &[f64]| x[0] * x[0];
        let truth = GroundTruth::from_subcomponents(vec![VarSet::from([0])]);
        let p = OverlappingProblem::with_uniform_bounds("one", 1, -1.0, 1.0, Arc::new(f), truth).unwrap();
        assert!(oedg(&p, 0, &OedgOptions::default()).is_err());
        let q = separable_blocks();
        let opts = OedgOptions { first_pick: Some(99), ..Default::default() };
        assert!(oedg(&q, 0, &opts).is_err());
    }
}
