//! Evolution strategies used as the subcomponent optimizer.
//!
//! A (mu/mu_w, lambda) strategy with cumulative step-size adaptation, run
//! against a context vector: every offspring is evaluated as the context with
//! the group's coordinates replaced. The covariance is either a full matrix
//! (rank-one and rank-mu updates) or its diagonal only.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::cc::ContextVector;
use crate::error::{Error, Result};
use crate::problem::{evaluate, BlackBox, EvaluationCounter};
use crate::scalar::Scalar;
use crate::varset::VarSet;

/// Offspring per generation for a group of `d` variables.
pub fn population_size(d: usize) -> usize {
    4 + (3.0 * (d.max(1) as f64).ln()).floor() as usize
}

/// Default generations per activation of a group.
pub const GENERATIONS_PER_PHASE: usize = 20;

/// Evaluations in one activation of a group of `d` variables.
pub fn phase_evaluations(d: usize, generations: usize) -> u64 {
    (generations * population_size(d)) as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariance {
    /// Full covariance matrix per group.
    #[default]
    Full,
    /// Per-variable variances only.
    Diagonal,
}

struct Weights {
    mu: usize,
    w: Vec<f64>,
    mu_eff: f64,
}

impl Weights {
    fn new(lambda: usize) -> Self {
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu).map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|r| r / sum).collect();
        let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
        Weights { mu, w, mu_eff }
    }
}

fn expected_norm(d: f64) -> f64 {
    d.sqrt() * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
}

/// Full-covariance state of one group.
#[derive(Debug, Clone, PartialEq)]
struct FullState {
    sigma: f64,
    c: DMatrix<f64>,
    b: DMatrix<f64>,
    dvec: DVector<f64>,
    pc: DVector<f64>,
    ps: DVector<f64>,
    generation: usize,
    last_eigen: usize,
}

impl FullState {
    fn from_scales(scales: &[f64]) -> Self {
        let d = scales.len();
        FullState {
            sigma: 1.0,
            c: DMatrix::from_diagonal(&DVector::from_iterator(d, scales.iter().map(|s| s * s))),
            b: DMatrix::identity(d, d),
            dvec: DVector::from_column_slice(scales),
            pc: DVector::zeros(d),
            ps: DVector::zeros(d),
            generation: 0,
            last_eigen: 0,
        }
    }

    fn refresh_eigen(&mut self) {
        let d = self.c.nrows();
        let sym = (&self.c + self.c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let floor = eig.eigenvalues.max().abs().max(1e-300) * 1e-20;
        self.dvec = eig.eigenvalues.map(|e| e.max(floor).sqrt());
        self.b = eig.eigenvectors;
        self.c = &self.b * DMatrix::from_diagonal(&self.dvec.map(|x| x * x)) * self.b.transpose();
        debug_assert_eq!(self.c.nrows(), d);
        self.last_eigen = self.generation;
    }
}

/// Strategy state carried from one phase to the next, so that consecutive
/// phases on the same group continue one run of the strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsolverState {
    pub covariance: Covariance,
    /// Step size of each variable.
    pub scales: Vec<f64>,
    /// Component of each variable in the step-size evolution path (diagonal mode).
    pub path: Vec<f64>,
    full: HashMap<VarSet, FullState>,
}

impl SubsolverState {
    pub fn new(scales: Vec<f64>, covariance: Covariance) -> Self {
        let path = vec![0.0; scales.len()];
        SubsolverState {
            covariance,
            scales,
            path,
            full: HashMap::new(),
        }
    }
}

/// Runs one phase over `group`, spending at most `max_fes` evaluations.
/// Returns the improvement of the context fitness.
pub fn subsolver_phase<T: Scalar, R: Rng>(
    problem: &dyn BlackBox<T>,
    group: &VarSet,
    context: &mut ContextVector<T>,
    state: &mut SubsolverState,
    max_fes: u64,
    counter: &EvaluationCounter,
    rng: &mut R,
) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::structure("subsolver phase over an empty group"));
    }
    if max_fes == 0 {
        return Ok(0.0);
    }
    match state.covariance {
        Covariance::Full => full_phase(problem, group, context, state, max_fes, counter, rng),
        Covariance::Diagonal => diagonal_phase(problem, group, context, state, max_fes, counter, rng),
    }
}

fn full_phase<T: Scalar, R: Rng>(
    problem: &dyn BlackBox<T>,
    group: &VarSet,
    context: &mut ContextVector<T>,
    state: &mut SubsolverState,
    max_fes: u64,
    counter: &EvaluationCounter,
    rng: &mut R,
) -> Result<f64> {
    let d = group.len();
    let idx = group.as_slice();
    let lower: Vec<f64> = idx.iter().map(|&v| problem.lower()[v].to_f64_lossy()).collect();
    let upper: Vec<f64> = idx.iter().map(|&v| problem.upper()[v].to_f64_lossy()).collect();
    let max_span = lower.iter().zip(&upper).map(|(l, u)| u - l).fold(0.0, f64::max);
    let start_f = context.fitness.to_f64_lossy();

    let lambda = population_size(d);
    let Weights { mu, w, mu_eff } = Weights::new(lambda);
    let df = d as f64;
    let cs = (mu_eff + 2.0) / (df + mu_eff + 5.0);
    let ds = 1.0 + 2.0 * (((mu_eff - 1.0) / (df + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let cc = (4.0 + mu_eff / df) / (df + 4.0 + 2.0 * mu_eff / df);
    let c1 = 2.0 / ((df + 1.3).powi(2) + mu_eff);
    let cmu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((df + 2.0).powi(2) + mu_eff));
    let chi_n = expected_norm(df);
    // decompose at most every d/10 generations so sampling stays O(d^2) amortised
    let eigen_gap = ((1.0 / ((c1 + cmu) * df * 10.0)).floor() as usize).max(d / 10).max(1);

    let scales: Vec<f64> = idx.iter().map(|&v| state.scales[v]).collect();
    let st = state
        .full
        .entry(group.clone())
        .or_insert_with(|| FullState::from_scales(&scales));

    let mut mean = DVector::from_iterator(d, idx.iter().map(|&v| context.x[v].to_f64_lossy()));
    let mut trial = context.x.clone();
    let mut spent = 0u64;
    'outer: while spent < max_fes {
        let mut pop: Vec<(f64, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            if spent >= max_fes {
                break 'outer;
            }
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let y = &st.b * z.component_mul(&st.dvec);
            let mut x = &mean + y * st.sigma;
            for k in 0..d {
                x[k] = x[k].clamp(lower[k], upper[k]);
                trial[idx[k]] = T::of(x[k]);
            }
            let f = evaluate(problem, &trial, counter)?;
            spent += 1;
            if f < context.fitness {
                context.update(&trial, f);
            }
            pop.push((f.to_f64_lossy(), x));
        }
        for &v in idx {
            trial[v] = context.x[v];
        }
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));
        st.generation += 1;

        let ys: Vec<DVector<f64>> = pop[..mu].iter().map(|(_, x)| (x - &mean) / st.sigma).collect();
        let mut yw = DVector::zeros(d);
        for (wi, y) in w.iter().zip(&ys) {
            yw += y * *wi;
        }
        mean += &yw * st.sigma;

        let whitened = &st.b * st.b.tr_mul(&yw).component_div(&st.dvec);
        st.ps = &st.ps * (1.0 - cs) + whitened * (cs * (2.0 - cs) * mu_eff).sqrt();
        let ps_norm = st.ps.norm();
        let decay = 1.0 - (1.0 - cs).powi(2 * st.generation as i32);
        let hsig = ps_norm / decay.max(1e-300).sqrt() / chi_n < 1.4 + 2.0 / (df + 1.0);
        let h = if hsig { 1.0 } else { 0.0 };
        st.pc = &st.pc * (1.0 - cc) + &yw * (h * (cc * (2.0 - cc) * mu_eff).sqrt());

        let mut rank_mu = DMatrix::zeros(d, d);
        for (wi, y) in w.iter().zip(&ys) {
            rank_mu += (y * y.transpose()) * *wi;
        }
        let keep = 1.0 - c1 - cmu + (1.0 - h) * c1 * cc * (2.0 - cc);
        st.c = &st.c * keep + (&st.pc * st.pc.transpose()) * c1 + rank_mu * cmu;
        st.sigma *= ((cs / ds) * (ps_norm / chi_n - 1.0)).min(1.0).exp();

        if st.generation - st.last_eigen >= eigen_gap {
            st.refresh_eigen();
        }
        let widest = st.dvec.max();
        if st.sigma * widest > max_span {
            st.sigma = max_span / widest;
        }
        if !st.sigma.is_finite() || st.dvec.iter().any(|v| !v.is_finite()) {
            *st = FullState::from_scales(&scales);
        }
    }

    let floor = 1e-12;
    for (k, &v) in idx.iter().enumerate() {
        let s = st.sigma * st.c[(k, k)].max(0.0).sqrt();
        if s.is_finite() {
            state.scales[v] = s.max(floor * (upper[k] - lower[k]));
        }
    }
    Ok(start_f - context.fitness.to_f64_lossy())
}

fn diagonal_phase<T: Scalar, R: Rng>(
    problem: &dyn BlackBox<T>,
    group: &VarSet,
    context: &mut ContextVector<T>,
    state: &mut SubsolverState,
    max_fes: u64,
    counter: &EvaluationCounter,
    rng: &mut R,
) -> Result<f64> {
    let d = group.len();
    let idx = group.as_slice();
    let lower: Vec<f64> = idx.iter().map(|&v| problem.lower()[v].to_f64_lossy()).collect();
    let upper: Vec<f64> = idx.iter().map(|&v| problem.upper()[v].to_f64_lossy()).collect();
    let start_f = context.fitness.to_f64_lossy();

    let lambda = population_size(d);
    let Weights { mu, w, mu_eff } = Weights::new(lambda);
    let df = d as f64;
    let c_sigma = (mu_eff + 2.0) / (df + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (df + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_mu = ((df + 2.0) / 3.0 * 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((df + 2.0).powi(2) + mu_eff)).clamp(0.0, 0.9);
    let chi_n = expected_norm(df);

    let mut mean: Vec<f64> = idx.iter().map(|&v| context.x[v].to_f64_lossy()).collect();
    let mut diag: Vec<f64> = idx.iter().map(|&v| state.scales[v] * state.scales[v]).collect();
    let mut sigma = 1.0;
    let mut path: Vec<f64> = idx.iter().map(|&v| state.path[v]).collect();
    let mut trial = context.x.clone();
    let mut spent = 0u64;

    'outer: while spent < max_fes {
        let mut pop: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            if spent >= max_fes {
                break 'outer;
            }
            let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let mut x = vec![0.0; d];
            for k in 0..d {
                x[k] = (mean[k] + sigma * diag[k].sqrt() * z[k]).clamp(lower[k], upper[k]);
                trial[idx[k]] = T::of(x[k]);
            }
            let f = evaluate(problem, &trial, counter)?;
            spent += 1;
            if f < context.fitness {
                context.update(&trial, f);
            }
            pop.push((f.to_f64_lossy(), x, z));
        }
        for &v in idx {
            trial[v] = context.x[v];
        }
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));

        let old = mean.clone();
        let mut zw = vec![0.0; d];
        for k in 0..d {
            mean[k] = (0..mu).map(|i| w[i] * pop[i].1[k]).sum();
            zw[k] = (0..mu).map(|i| w[i] * pop[i].2[k]).sum();
        }
        let norm_c = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        for k in 0..d {
            path[k] = (1.0 - c_sigma) * path[k] + norm_c * zw[k];
        }
        for k in 0..d {
            let s = sigma * diag[k].sqrt();
            let rank_mu: f64 = (0..mu)
                .map(|i| {
                    let y = (pop[i].1[k] - old[k]) / s;
                    w[i] * y * y
                })
                .sum();
            diag[k] *= (1.0 - c_mu) + c_mu * rank_mu;
        }
        let path_norm = path.iter().map(|p| p * p).sum::<f64>().sqrt();
        sigma *= ((c_sigma / d_sigma) * (path_norm / chi_n - 1.0)).min(1.0).exp();

        for k in 0..d {
            let span = upper[k] - lower[k];
            diag[k] = diag[k].clamp(1e-300, span * span / (sigma * sigma).max(1e-300));
        }
    }

    let floor = 1e-12;
    for (k, &v) in idx.iter().enumerate() {
        let s = sigma * diag[k].sqrt();
        if s.is_finite() {
            state.scales[v] = s.max(floor * (upper[k] - lower[k]));
        }
        state.path[v] = path[k];
    }
    Ok(start_f - context.fitness.to_f64_lossy())
}
