//! Scalar abstraction for the numeric lane.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used by datasets, SEM sampling, Fisher-z and
/// aggregation. Implemented for `f32` and `f64`.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from `f64`; sampling and thresholds are
    /// computed in `f64` and narrowed once.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl Float for f32 {}
impl Float for f64 {}
