//! Random orthogonal matrices for rotating subcomponents.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Draws a random orthogonal `d x d` matrix (row-major) from the QR
/// factorization of a Gaussian matrix, with columns sign-corrected so the
/// triangular factor has a positive diagonal.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(q[(i, j)]);
        }
    }
    out
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    out
}

/// Largest entry of |RᵀR - I| for a row-major square matrix.
pub fn orthogonality_error(r: &[f64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let dot: f64 = (0..d).map(|k| r[k * d + a] * r[k * d + b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}
