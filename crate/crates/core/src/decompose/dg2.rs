//! Exhaustive pairwise interaction detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::result::DecompositionResult;
use crate::error::{Error, Result};
use crate::interaction::{default_threshold_k, gamma};
use crate::problem::{evaluate, BlackBox, EvaluationCounter, Phase};
use crate::scalar::Scalar;
use crate::varset::VarSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dg2Threshold {
    /// Lower and upper error bounds per pair; pairs between them are decided
    /// by a bound weighted by the counts of already-decided pairs.
    #[default]
    TwoSided,
    /// One global rule `gamma(ceil(sqrt(n)) + 2) * sum |f|`.
    Global,
}

/// Raw `|delta1 - delta2|` per pair and the resulting interaction structure.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    delta: Vec<f64>,
    theta: Vec<bool>,
}

impl InteractionMatrix {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn delta(&self, i: usize, j: usize) -> f64 {
        self.delta[i * self.n + j]
    }

    pub fn interacts(&self, i: usize, j: usize) -> bool {
        self.theta[i * self.n + j]
    }

    /// Variables interacting with `v`.
    pub fn neighbours(&self, v: usize) -> VarSet {
        (0..self.n).filter(|&j| self.interacts(v, j)).collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.interacts(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

pub fn dg2<T: Scalar>(problem: &dyn BlackBox<T>, rule: Dg2Threshold) -> Result<(InteractionMatrix, DecompositionResult)> {
    let counter = EvaluationCounter::new();
    dg2_counted(problem, rule, &counter)
}

/// Evaluates the base point, every single-variable move and every pair move
/// (`n(n+1)/2 + 1` evaluations), then groups variables into the maximal
/// cliques of the interaction graph.
pub fn dg2_counted<T: Scalar>(
    problem: &dyn BlackBox<T>,
    rule: Dg2Threshold,
    counter: &EvaluationCounter,
) -> Result<(InteractionMatrix, DecompositionResult)> {
    let n = problem.dimension();
    if n < 2 {
        return Err(Error::structure("decomposition needs at least two variables"));
    }
    let start = counter.total();
    counter.set_phase(Phase::Grouping);
    let lower = problem.lower().to_vec();
    let two = T::of(2.0);
    let centre: Vec<T> = lower.iter().zip(problem.upper()).map(|(&l, &u)| (l + u) / two).collect();

    let base = evaluate(problem, &lower, counter)?.to_f64_lossy();
    let single: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut x = lower.clone();
            x[i] = centre[i];
            evaluate(problem, &x, counter).map(|f| f.to_f64_lossy())
        })
        .collect::<Result<_>>()?;
    let pair_rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut x = lower.clone();
            x[i] = centre[i];
            let mut row = Vec::with_capacity(n - i - 1);
            for j in i + 1..n {
                x[j] = centre[j];
                row.push(evaluate(problem, &x, counter)?.to_f64_lossy());
                x[j] = lower[j];
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let u = T::unit_roundoff().to_f64_lossy();
    let g = |k: f64| k * u / (1.0 - k * u);
    let (g_inf, g_sup) = (g(2.0), g((n as f64).sqrt()));
    let g_global: f64 = gamma::<T>(default_threshold_k(n))?.to_f64_lossy();

    let mut delta = vec![0.0; n * n];
    let mut bounds = vec![(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let fij = pair_rows[i][j - i - 1];
            let d = ((fij - single[j]) - (single[i] - base)).abs();
            let outer = base.abs() + fij.abs();
            let inner = single[i].abs() + single[j].abs();
            delta[i * n + j] = d;
            delta[j * n + i] = d;
            bounds[i * n + j] = match rule {
                Dg2Threshold::TwoSided => (g_inf * outer.max(inner), g_sup * outer.max(inner)),
                Dg2Threshold::Global => {
                    let e = g_global * (outer + inner);
                    (e, e)
                }
            };
        }
    }

    let mut theta = vec![None; n * n];
    let (mut eta0, mut eta1) = (0usize, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            let (e_inf, e_sup) = bounds[i * n + j];
            let d = delta[i * n + j];
            if d > e_sup {
                theta[i * n + j] = Some(true);
                eta1 += 1;
            } else if d <= e_inf {
                theta[i * n + j] = Some(false);
                eta0 += 1;
            }
        }
    }
    let decided = (eta0 + eta1) as f64;
    let mut theta_final = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let t = theta[i * n + j].unwrap_or_else(|| {
                let (e_inf, e_sup) = bounds[i * n + j];
                let e = if decided == 0.0 {
                    e_sup
                } else {
                    (eta0 as f64 * e_inf + eta1 as f64 * e_sup) / decided
                };
                delta[i * n + j] > e
            });
            theta_final[i * n + j] = t;
            theta_final[j * n + i] = t;
        }
    }
    let matrix = InteractionMatrix {
        n,
        delta,
        theta: theta_final,
    };

    let groups = maximal_cliques(&matrix);
    let shared_groups = shared_members(&groups);
    Ok((
        matrix,
        DecompositionResult {
            algorithm: "dg2".into(),
            seed: 0,
            fes_used: counter.total() - start,
            subcomponents: groups,
            shared_groups,
            refined: true,
        },
    ))
}

/// Maximal cliques of the interaction graph (Bron-Kerbosch with pivoting),
/// isolated variables included as singletons, in sorted order.
pub fn maximal_cliques(m: &InteractionMatrix) -> Vec<VarSet> {
    let neighbours: Vec<VarSet> = (0..m.n).map(|v| m.neighbours(v)).collect();
    let mut out = Vec::new();
    bron_kerbosch(&neighbours, VarSet::new(), VarSet::full(m.n), VarSet::new(), &mut out);
    out.sort();
    out
}

fn bron_kerbosch(nb: &[VarSet], r: VarSet, mut p: VarSet, mut x: VarSet, out: &mut Vec<VarSet>) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r);
        }
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| (nb[u].intersection_len(&p), std::cmp::Reverse(u)))
        .expect("p is non-empty");
    for v in p.difference(&nb[pivot]).into_vec() {
        let mut r2 = r.clone();
        r2.insert(v);
        bron_kerbosch(nb, r2, p.intersection(&nb[v]), x.intersection(&nb[v]), out);
        p.remove(v);
        x.insert(v);
    }
}

/// For each group, its members that also belong to another group.
pub fn shared_members(groups: &[VarSet]) -> Vec<VarSet> {
    groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            g.iter()
                .filter(|&v| groups.iter().enumerate().any(|(j, h)| j != i && h.contains(v)))
                .collect()
        })
        .collect()
}
