//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the solver is generic over (`f32`, `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into the working scalar.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Lossy view of a scalar as `f64`, for reporting.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Japanese bracket `(1 + x^2)^{1/2}`.
#[inline]
pub fn bracket<T: Scalar>(x: T) -> T {
    (T::one() + x * x).sqrt()
}

/// Magnitude of a scalar or complex sample.
pub trait Magnitude<T> {
    fn magnitude(&self) -> T;
}

impl<T: Scalar> Magnitude<T> for T {
    #[inline]
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Scalar> Magnitude<T> for num_complex::Complex<T> {
    #[inline]
    fn magnitude(&self) -> T {
        self.norm()
    }
}
