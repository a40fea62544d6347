//! Numeric abstraction shared by the geometry, sampling, matching and
//! pipeline modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the math modules are generic over (`f32` or `f64`).
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal. Infallible for the supported float types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Tolerance used when validating rotation matrices: `1e-9` for `f64`,
    /// a few thousand ulps for narrower types.
    fn orthonormal_tolerance() -> Self;

    /// Largest `x` such that `exp(-x)` stays a normal number.
    fn exp_underflow_margin() -> f64;
}

impl Scalar for f64 {
    fn orthonormal_tolerance() -> Self {
        1e-9
    }

    fn exp_underflow_margin() -> f64 {
        708.0
    }
}

impl Scalar for f32 {
    fn orthonormal_tolerance() -> Self {
        5e-4
    }

    fn exp_underflow_margin() -> f64 {
        87.0
    }
}
