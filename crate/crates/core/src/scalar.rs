use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::rational::Rational;

/// Floating point type used for energies and LP arithmetic: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Smallest pivot magnitude accepted by the simplex ratio test.
    fn pivot_tolerance() -> Self;

    /// Absolute primal feasibility tolerance.
    fn feasibility_tolerance() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn from_rational(r: &Rational) -> Self {
        Self::from_f64_lossy(r.to_f64().unwrap_or(f64::NAN))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn pivot_tolerance() -> Self {
        1e-5
    }

    fn feasibility_tolerance() -> Self {
        1e-4
    }
}

impl Scalar for f64 {
    fn pivot_tolerance() -> Self {
        1e-9
    }

    fn feasibility_tolerance() -> Self {
        1e-9
    }
}
