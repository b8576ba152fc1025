use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the analytic and simulation code.
///
/// Implemented for `f32` and `f64`. Sampling and statistics always draw in
/// `f64` and convert at the boundary.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine-precision tolerance appropriate for normalization checks.
    fn norm_tolerance() -> Self;
}

impl Real for f32 {
    fn norm_tolerance() -> Self {
        1e-6
    }
}

impl Real for f64 {
    fn norm_tolerance() -> Self {
        1e-12
    }
}

/// Normal density with the given mean and variance.
#[inline]
pub fn gauss<T: Real>(z: T, mean: T, var: T) -> T {
    let d = z - mean;
    (-(d * d) / (T::lit(2.0) * var)).exp() / (T::TAU() * var).sqrt()
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf<T: Real>(z: T) -> T {
    let z = z.to_f64_lossy();
    T::lit(0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2))
}
