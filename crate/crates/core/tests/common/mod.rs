#![allow(dead_code)]

use std::sync::Arc;

use ::oedg::bench::{generate, BaseKind, TopologyConfig};
use ::oedg::problem::{Conflict, GroundTruth, OverlappingProblem};
use ::oedg::VarSet;

/// Zero-based set from 1-based labels.
pub fn set1(labels: &[usize]) -> VarSet {
    labels.iter().map(|&v| v - 1).collect()
}

/// Sum of squared group sums: variables interact exactly when they share a group.
pub fn toy(n: usize, groups_1based: &[&[usize]]) -> OverlappingProblem<f64> {
    let groups: Vec<VarSet> = groups_1based.iter().map(|g| set1(g)).collect();
    let terms: Vec<Vec<usize>> = groups.iter().map(|g| g.as_slice().to_vec()).collect();
    let f = move |x: &[f64]| -> f64 {
        terms
            .iter()
            .map(|t| {
                let s: f64 = t.iter().map(|&v| x[v]).sum();
                s * s
            })
            .sum()
    };
    let truth = GroundTruth::from_subcomponents(groups);
    OverlappingProblem::with_uniform_bounds("toy", n, -1.0, 2.0, Arc::new(f), truth).unwrap()
}

pub fn chain18() -> OverlappingProblem<f64> {
    toy(
        18,
        &[
            &[1, 2, 3, 4, 5, 6],
            &[3, 4, 7, 8, 9, 10],
            &[8, 9, 11, 12, 13, 14],
            &[12, 13, 15, 16, 17, 18],
        ],
    )
}

pub fn chain12() -> OverlappingProblem<f64> {
    toy(12, &[&[1, 2, 3, 4], &[3, 5, 6, 7], &[6, 8, 9, 10], &[9, 11, 12]])
}

pub fn line(sizes: Vec<usize>, m: usize, base: BaseKind, seed: u64) -> OverlappingProblem<f64> {
    generate(&TopologyConfig::line(sizes, m, base, Conflict::Conforming, seed))
        .unwrap()
        .build()
        .unwrap()
}

pub fn ring(sizes: Vec<usize>, m: usize, base: BaseKind, seed: u64) -> OverlappingProblem<f64> {
    generate(&TopologyConfig::ring(sizes, m, base, Conflict::Conforming, seed))
        .unwrap()
        .build()
        .unwrap()
}

pub fn sorted(mut v: Vec<VarSet>) -> Vec<VarSet> {
    v.sort();
    v
}

/// Accuracy by counting per-variable memberships, independent of set algebra.
pub fn da_by_counting(n: usize, truth_masks: &[u8], formed_labels: &[usize], k_truth: usize, k_formed: usize) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for i in 0..k_truth {
        let mut best = 0usize;
        for j in 0..k_formed {
            let mut c = 0usize;
            for v in 0..n {
                if truth_masks[v] & (1 << i) != 0 && formed_labels[v] == j {
                    c += 1;
                }
            }
            best = best.max(c);
        }
        total += (0..n).filter(|&v| truth_masks[v] & (1 << i) != 0).count();
        hit += best;
    }
    hit as f64 / total as f64
}

fn digits(mut code: usize, base: usize, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let d = code % base;
            code /= base;
            d
        })
        .collect()
}

/// Compares the library's accuracy with [`da_by_counting`] over every
/// overlapping truth of up to three groups (each variable in a nonempty set of
/// groups) against every labelling into up to three formed groups, for
/// `n` in `1..=max_n`. Returns (cases checked, mismatches).
pub fn da_oracle_sweep(max_n: usize) -> (usize, usize) {
    let mut checked = 0;
    let mut bad = 0;
    for n in 1..=max_n {
        for tcode in 0..7usize.pow(n as u32) {
            let masks: Vec<u8> = digits(tcode, 7, n).into_iter().map(|d| (d + 1) as u8).collect();
            let k_truth = 3;
            let truth: Vec<VarSet> = (0..k_truth)
                .map(|i| (0..n).filter(|&v| masks[v] & (1 << i) != 0).collect::<VarSet>())
                .collect();
            if truth.iter().any(VarSet::is_empty) {
                continue;
            }
            for fcode in 0..3usize.pow(n as u32) {
                let labels = digits(fcode, 3, n);
                let k_formed = labels.iter().max().unwrap() + 1;
                let formed: Vec<VarSet> = (0..k_formed)
                    .map(|j| (0..n).filter(|&v| labels[v] == j).collect::<VarSet>())
                    .filter(|g| !g.is_empty())
                    .collect();
                let got = ::oedg::metrics::accuracy_of_groups(&truth, &formed).unwrap();
                let want = da_by_counting(n, &masks, &labels, k_truth, k_formed);
                checked += 1;
                if got != want {
                    bad += 1;
                }
            }
        }
    }
    (checked, bad)
}
