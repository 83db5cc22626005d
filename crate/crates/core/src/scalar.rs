use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the spectral and reliability analytics.
///
/// Implemented for `f32` and `f64`. Protocol logic never touches this trait;
/// node counts, thresholds and NPC ratios stay exact integers/rationals.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts a count. Counts in this crate are far below 2^24, so this is exact for f32 too.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as float")
    }

    /// Absolute tolerance used for the dense eigen-solver off-diagonal sweep.
    fn eigen_tolerance() -> Self;
}

impl Scalar for f32 {
    fn eigen_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn eigen_tolerance() -> Self {
        1e-10
    }
}
