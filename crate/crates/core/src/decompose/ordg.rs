//! Chain-following decomposition for line-shaped overlap structures.
//!
//! A subcomponent is grown from a random ungrouped variable. Its members
//! that interact with still-ungrouped variables are its shared variables,
//! and the next subcomponent is formed from the ungrouped variables that
//! interact with one of them (lowest index first). Each variable lands in
//! exactly one group, so a shared variable stays with the group that found
//! it first. When the chain runs dry a fresh random variable restarts it.

use rand::Rng;
use std::collections::BTreeSet;

use super::result::DecompositionResult;
use crate::error::{Error, Result};
use crate::interaction::{DetectionContext, DetectionOptions};
use crate::problem::{BlackBox, EvaluationCounter, Phase};
use crate::scalar::Scalar;
use crate::seed;
use crate::varset::VarSet;

#[derive(Debug, Clone, Default)]
pub struct OrdgOptions {
    pub detection: DetectionOptions,
    /// Forces the variable that starts the first chain.
    pub first_pick: Option<usize>,
}

pub fn ordg<T: Scalar>(problem: &dyn BlackBox<T>, seed: u64, options: &OrdgOptions) -> Result<DecompositionResult> {
    let counter = EvaluationCounter::new();
    ordg_counted(problem, seed, options, &counter)
}

pub fn ordg_counted<T: Scalar>(
    problem: &dyn BlackBox<T>,
    seed: u64,
    options: &OrdgOptions,
    counter: &EvaluationCounter,
) -> Result<DecompositionResult> {
    let n = problem.dimension();
    if n < 2 {
        return Err(Error::structure("decomposition needs at least two variables"));
    }
    if options.first_pick.is_some_and(|v| v >= n) {
        return Err(Error::structure("forced first pick out of range"));
    }
    let start = counter.total();
    counter.set_phase(Phase::Grouping);
    let mut rng = seed::rng(seed);
    let mut ctx = DetectionContext::new(problem, counter, &options.detection)?;

    let mut remaining = VarSet::full(n);
    let mut frontier = BTreeSet::<usize>::new();
    let mut groups = Vec::new();
    let mut shared = Vec::new();
    let mut forced = options.first_pick;
    while !remaining.is_empty() {
        let group = if let Some(s) = frontier.pop_first() {
            let mut pool = remaining.clone();
            pool.insert(s);
            let found = ctx.interact_closure(&VarSet::singleton(s), &pool)?;
            let next = found.difference(&VarSet::singleton(s));
            if next.is_empty() {
                continue;
            }
            next
        } else {
            let x = forced
                .take()
                .unwrap_or_else(|| remaining.as_slice()[rng.random_range(0..remaining.len())]);
            ctx.interact_closure(&VarSet::singleton(x), &remaining)?
        };
        remaining = remaining.difference(&group);
        let ov = ctx.interact_ov(&group, &remaining)?;
        frontier.extend(ov.iter());
        groups.push(group);
        shared.push(ov);
    }
    Ok(DecompositionResult {
        algorithm: "ordg".into(),
        seed,
        fes_used: counter.total() - start,
        subcomponents: groups,
        shared_groups: shared,
        refined: true,
    })
}
