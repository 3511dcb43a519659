//! Recursive grouping with a cap on the size of non-separable groups.

use rand::seq::SliceRandom;

use super::result::DecompositionResult;
use crate::error::{Error, Result};
use crate::interaction::{DetectionContext, DetectionOptions};
use crate::problem::{BlackBox, EvaluationCounter, Phase};
use crate::scalar::Scalar;
use crate::seed;
use crate::varset::VarSet;

pub const DEFAULT_EPS_N: usize = 50;

pub fn rdg3<T: Scalar>(
    problem: &dyn BlackBox<T>,
    eps_n: usize,
    seed: u64,
    detection: &DetectionOptions,
) -> Result<DecompositionResult> {
    let counter = EvaluationCounter::new();
    rdg3_counted(problem, eps_n, seed, detection, &counter)
}

/// Grows a group from each unassigned variable, in a seeded random order, by
/// repeatedly adding the ungrouped variables that interact with it. A group
/// is closed once nothing new interacts with it or its size exceeds `eps_n`.
pub fn rdg3_counted<T: Scalar>(
    problem: &dyn BlackBox<T>,
    eps_n: usize,
    seed: u64,
    detection: &DetectionOptions,
    counter: &EvaluationCounter,
) -> Result<DecompositionResult> {
    if eps_n == 0 {
        return Err(Error::config("eps_n", "must be at least 1"));
    }
    let n = problem.dimension();
    let start = counter.total();
    counter.set_phase(Phase::Grouping);
    let mut rng = seed::rng(seed);
    let mut ctx = DetectionContext::new(problem, counter, detection)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut remaining = VarSet::full(n);
    let mut groups = Vec::new();
    for x in order {
        if !remaining.contains(x) {
            continue;
        }
        let mut group = VarSet::singleton(x);
        while group.len() < remaining.len() && group.len() <= eps_n {
            let grown = ctx.interact_closure(&group, &remaining)?;
            if grown.len() == group.len() {
                break;
            }
            group = grown;
        }
        remaining = remaining.difference(&group);
        groups.push(group);
    }
    let shared_groups = vec![VarSet::new(); groups.len()];
    Ok(DecompositionResult {
        algorithm: "rdg3".into(),
        seed,
        fes_used: counter.total() - start,
        subcomponents: groups,
        shared_groups,
        refined: true,
    })
}
