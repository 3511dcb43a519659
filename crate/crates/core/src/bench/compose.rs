//! Weighted sums of rotated, shifted base functions over overlapping slices.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::base::{self, BaseKind};
use super::rotation::orthogonality_error;
use crate::error::{Error, Result};
use crate::problem::{Conflict, GroundTruth, Objective, OverlappingProblem, Topology};
use crate::scalar::Scalar;
use crate::varset::VarSet;

/// One additive term: `weight * base(scale * R (x[indices] - shift))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcomponentSpec {
    /// Variable positions in the final (permuted) decision vector, in the
    /// order the slice is fed to the rotation.
    pub indices: Vec<usize>,
    /// Row-major `d x d` orthogonal matrix.
    pub rotation: Vec<f64>,
    pub shift: Vec<f64>,
    pub weight: f64,
    pub base: BaseKind,
}

impl SubcomponentSpec {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

struct Term<T> {
    indices: Vec<usize>,
    rotation: Option<Vec<T>>,
    shift: Vec<T>,
    weight: T,
    base: BaseKind,
    scale: T,
    elliptic: Vec<T>,
}

impl<T: Scalar> Term<T> {
    fn value(&self, x: &[T], shifted: &mut Vec<T>, rotated: &mut Vec<T>) -> T {
        let d = self.indices.len();
        shifted.clear();
        shifted.extend(self.indices.iter().zip(&self.shift).map(|(&i, &o)| x[i] - o));
        let z: &[T] = match &self.rotation {
            Some(r) => {
                rotated.clear();
                rotated.extend((0..d).map(|row| {
                    let mut acc = T::zero();
                    for (c, v) in r[row * d..(row + 1) * d].iter().zip(shifted.iter()) {
                        acc = acc + *c * *v;
                    }
                    acc * self.scale
                }));
                rotated
            }
            None => {
                for v in shifted.iter_mut() {
                    *v = *v * self.scale;
                }
                shifted
            }
        };
        let f = match self.base {
            BaseKind::Elliptic => base::elliptic_with(&self.elliptic, z),
            BaseKind::Rastrigin => base::rastrigin(z),
            BaseKind::Schwefel12 => base::schwefel_1_2(z),
        };
        self.weight * f
    }
}

/// The objective of a composed overlapping benchmark.
pub struct Composite<T> {
    terms: Vec<Term<T>>,
}

impl<T: Scalar> Composite<T> {
    fn from_specs(specs: &[SubcomponentSpec]) -> Self {
        let terms = specs
            .iter()
            .map(|s| {
                let d = s.dim();
                let is_identity = s.rotation == super::rotation::identity(d);
                Term {
                    indices: s.indices.clone(),
                    rotation: (!is_identity).then(|| s.rotation.iter().map(|&v| T::of(v)).collect()),
                    shift: s.shift.iter().map(|&v| T::of(v)).collect(),
                    weight: T::of(s.weight),
                    base: s.base,
                    scale: T::of(s.base.input_scale()),
                    elliptic: base::elliptic_coefficients(d),
                }
            })
            .collect();
        Composite { terms }
    }

    /// Value of each additive term at `x`, unweighted sum not taken.
    pub fn term_values(&self, x: &[T]) -> Vec<T> {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        self.terms.iter().map(|t| t.value(x, &mut a, &mut b)).collect()
    }
}

impl<T: Scalar> Objective<T> for Composite<T> {
    fn value(&self, x: &[T]) -> T {
        let mut shifted = Vec::new();
        let mut rotated = Vec::new();
        let mut acc = T::zero();
        for t in &self.terms {
            acc = acc + t.value(x, &mut shifted, &mut rotated);
        }
        acc
    }
}

/// Builds a problem over `n` variables in `[lower, upper]^n` from its terms.
///
/// Validates that the terms cover every variable, that rotations are
/// orthogonal and that every shift lies strictly inside the box.
pub fn compose_overlapping<T: Scalar>(
    name: impl Into<String>,
    n: usize,
    bounds: (f64, f64),
    specs: &[SubcomponentSpec],
    topology: Topology,
    conflict: Conflict,
) -> Result<OverlappingProblem<T>> {
    let (lo, hi) = bounds;
    for (i, s) in specs.iter().enumerate() {
        let d = s.dim();
        if d == 0 {
            return Err(Error::structure(format!("subcomponent {i} is empty")));
        }
        if s.rotation.len() != d * d || s.shift.len() != d {
            return Err(Error::structure(format!("subcomponent {i}: rotation/shift size mismatch")));
        }
        if let Some(&v) = s.indices.iter().find(|&&v| v >= n) {
            return Err(Error::structure(format!("subcomponent {i}: index {v} out of range")));
        }
        if s.indices.iter().collect::<std::collections::HashSet<_>>().len() != d {
            return Err(Error::structure(format!("subcomponent {i}: repeated index")));
        }
        let err = orthogonality_error(&s.rotation, d);
        if !(err <= 1e-9) {
            return Err(Error::structure(format!(
                "subcomponent {i}: rotation is not orthogonal (error {err:e})"
            )));
        }
        if s.shift.iter().any(|&o| !(o > lo && o < hi)) {
            return Err(Error::structure(format!("subcomponent {i}: shift outside the box")));
        }
        if !(s.weight > 0.0) {
            return Err(Error::structure(format!("subcomponent {i}: weight must be positive")));
        }
    }
    let truth = GroundTruth::from_subcomponents(
        specs.iter().map(|s| s.indices.iter().copied().collect::<VarSet>()).collect(),
    );
    let objective: Arc<dyn Objective<T>> = Arc::new(Composite::<T>::from_specs(specs));
    OverlappingProblem::new(
        name,
        vec![T::of(lo); n],
        vec![T::of(hi); n],
        objective,
        truth,
        topology,
        conflict,
    )
}
