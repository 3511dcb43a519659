use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the benchmark functions, detectors and optimizers are
/// generic over.
///
/// The detection thresholds are expressed in units of the type's unit
/// roundoff, so the same decomposition code behaves consistently for `f32`
/// and `f64` fitness values.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Half the machine epsilon: the relative rounding error of one operation.
    fn unit_roundoff() -> Self {
        Self::epsilon() / Self::from_f64(2.0).unwrap()
    }

    /// Lossy conversion from `f64`. Panics only for types that cannot
    /// represent finite `f64` values at all, which no implementor does.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
