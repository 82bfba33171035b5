//! Scalar abstraction: every numeric kernel is generic over an IEEE float type.

use core::fmt;

use num_traits::float::FloatConst;
use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
///
/// All tolerances in this crate are quoted for `f64`; with `f32` the same
/// code runs but the tighter bounds are not reachable.
pub trait Real: Float + FloatConst + FromPrimitive + fmt::Debug + fmt::Display + 'static {
    /// Convert an `f64` literal (coefficients, tolerances) into `Self`.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to the scalar type")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::cast(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}
