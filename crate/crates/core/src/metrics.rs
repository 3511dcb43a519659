//! Decomposition accuracy, run aggregation and the rank-sum comparison.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::decompose::DecompositionResult;
use crate::error::{Error, Result};
use crate::problem::GroundTruth;
use crate::varset::VarSet;

/// Share of true-subcomponent members recovered by their best-matching
/// formed group: `sum_i max_j |g*_i ∩ g_j| / sum_i |g*_i|`.
///
/// Merging true subcomponents is never penalized; a single group holding
/// every variable scores 1.
pub fn decomposition_accuracy(truth: &GroundTruth, formed: &DecompositionResult) -> Result<f64> {
    accuracy_of_groups(&truth.subcomponents, &formed.subcomponents)
}

pub fn accuracy_of_groups(truth: &[VarSet], formed: &[VarSet]) -> Result<f64> {
    let total: usize = truth.iter().map(VarSet::len).sum();
    if total == 0 {
        return Err(Error::structure("ground truth has no variables"));
    }
    if formed.is_empty() {
        return Err(Error::structure("no formed groups"));
    }
    let hit: usize = truth
        .iter()
        .map(|g| formed.iter().map(|h| g.intersection_len(h)).max().unwrap_or(0))
        .sum();
    Ok(hit as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingScore {
    pub da: f64,
    pub fes: u64,
    pub run_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_da: f64,
    pub mean_fes: f64,
    /// Sample standard deviation of DA; 0 for a single run.
    pub std_da: f64,
}

pub fn aggregate(scores: &[GroupingScore]) -> Result<Aggregate> {
    if scores.is_empty() {
        return Err(Error::structure("cannot aggregate zero runs"));
    }
    let k = scores.len() as f64;
    let mean_da = scores.iter().map(|s| s.da).sum::<f64>() / k;
    let mean_fes = scores.iter().map(|s| s.fes as f64).sum::<f64>() / k;
    let std_da = if scores.len() < 2 {
        0.0
    } else {
        (scores.iter().map(|s| (s.da - mean_da).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    Ok(Aggregate {
        mean_da,
        mean_fes,
        std_da,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    W,
    T,
    L,
}

impl Verdict {
    pub fn mirror(self) -> Verdict {
        match self {
            Verdict::W => Verdict::L,
            Verdict::T => Verdict::T,
            Verdict::L => Verdict::W,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::W => "W",
            Verdict::T => "T",
            Verdict::L => "L",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub verdict: Verdict,
    pub p_value: f64,
    pub median_a: f64,
    pub median_b: f64,
}

pub const MIN_SAMPLE: usize = 5;

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Two-sided Mann-Whitney U test with the tie-corrected normal approximation.
/// Lower values are better: `W` means `a` is significantly lower than `b`.
pub fn rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonCell> {
    if a.len() < MIN_SAMPLE || b.len() < MIN_SAMPLE {
        return Err(Error::structure(format!("rank-sum needs at least {MIN_SAMPLE} points per sample")));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::structure("rank-sum sample contains NaN"));
    }
    let (median_a, median_b) = (median(a), median(b));
    let (n1, n2) = (a.len() as f64, b.len() as f64);

    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_a += avg * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let u_a = rank_a - n1 * (n1 + 1.0) / 2.0;
    let mean_u = n1 * n2 / 2.0;
    let n = n1 + n2;
    let var_u = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var_u <= 0.0 {
        return Ok(ComparisonCell {
            verdict: Verdict::T,
            p_value: 1.0,
            median_a,
            median_b,
        });
    }
    let z = (u_a - mean_u) / var_u.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = (2.0 * normal.cdf(-z.abs())).min(1.0);
    let verdict = if p_value >= alpha {
        Verdict::T
    } else if u_a < mean_u {
        Verdict::W
    } else {
        Verdict::L
    };
    Ok(ComparisonCell {
        verdict,
        p_value,
        median_a,
        median_b,
    })
}
