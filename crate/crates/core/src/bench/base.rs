//! Base functions the benchmark subcomponents are built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Schwefel12,
    Elliptic,
    Rastrigin,
}

impl std::str::FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "schwefel_1_2" | "schwefel12" | "schwefel" => Ok(BaseKind::Schwefel12),
            "elliptic" => Ok(BaseKind::Elliptic),
            "rastrigin" => Ok(BaseKind::Rastrigin),
            _ => Err(Error::config("base", format!("unknown base function `{s}`"))),
        }
    }
}

impl BaseKind {
    pub const ALL: [BaseKind; 3] = [BaseKind::Schwefel12, BaseKind::Elliptic, BaseKind::Rastrigin];

    /// Factor applied to the rotated, shifted slice before evaluation, so the
    /// characteristic landscape of each base fits the common [-100, 100] box.
    pub fn input_scale(self) -> f64 {
        match self {
            BaseKind::Rastrigin => 0.05,
            _ => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BaseKind::Schwefel12 => "schwefel_1_2",
            BaseKind::Elliptic => "elliptic",
            BaseKind::Rastrigin => "rastrigin",
        }
    }
}

/// Elliptic conditioning weights `10^(6 i / (d - 1))` for a slice of length `d`.
pub fn elliptic_coefficients<T: Scalar>(d: usize) -> Vec<T> {
    if d == 1 {
        return vec![T::one()];
    }
    (0..d)
        .map(|i| T::of(10f64.powf(6.0 * i as f64 / (d - 1) as f64)))
        .collect()
}

/// Evaluates a base function at `z`.
pub fn eval_base<T: Scalar>(kind: BaseKind, z: &[T]) -> Result<T> {
    if z.is_empty() {
        return Err(Error::structure("base function of an empty vector"));
    }
    Ok(match kind {
        BaseKind::Elliptic => elliptic_with(&elliptic_coefficients(z.len()), z),
        BaseKind::Rastrigin => rastrigin(z),
        BaseKind::Schwefel12 => schwefel_1_2(z),
    })
}

pub(crate) fn elliptic_with<T: Scalar>(coeffs: &[T], z: &[T]) -> T {
    coeffs.iter().zip(z).map(|(&c, &v)| c * v * v).sum()
}

pub(crate) fn rastrigin<T: Scalar>(z: &[T]) -> T {
    let ten = T::of(10.0);
    let two_pi = T::of(2.0 * std::f64::consts::PI);
    z.iter()
        .map(|&v| v * v - ten * (two_pi * v).cos() + ten)
        .sum()
}

pub(crate) fn schwefel_1_2<T: Scalar>(z: &[T]) -> T {
    let mut prefix = T::zero();
    let mut acc = T::zero();
    for &v in z {
        prefix = prefix + v;
        acc = acc + prefix * prefix;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_zero_for_every_base() {
        for kind in BaseKind::ALL {
            assert_eq!(eval_base(kind, &[0.0f64; 3]).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_values() {
        assert!((eval_base(BaseKind::Rastrigin, &[1.0f64, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(eval_base(BaseKind::Schwefel12, &[1.0f64, 1.0]).unwrap(), 5.0);
        assert_eq!(eval_base(BaseKind::Elliptic, &[0.0f64, 0.0, 1.0]).unwrap(), 1e6);
        assert_eq!(eval_base(BaseKind::Elliptic, &[2.0f64]).unwrap(), 4.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(eval_base::<f64>(BaseKind::Elliptic, &[]).is_err());
    }

    #[test]
    fn unimodal_bases_vanish_only_at_origin() {
        for kind in [BaseKind::Elliptic, BaseKind::Schwefel12] {
            for z in [[1e-3, 0.0], [0.0, -1e-3], [1.0, -1.0]] {
                assert!(eval_base(kind, &z).unwrap() > 0.0, "{kind:?} at {z:?}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        assert_eq!(eval_base(BaseKind::Schwefel12, &[1.0f32, 1.0]).unwrap(), 5.0f32);
    }
}
