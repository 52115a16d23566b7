//! Scalar traits.
//!
//! [`Real`] is what the simulation code runs on (`f32`, `f64`). [`Field`] is
//! the weaker bound used by the closed-form calculators, which also accept
//! exact rationals so lemma inequalities can be checked without rounding.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num};

/// Ordered field with conversion from primitive numbers.
pub trait Field: Num + Clone + PartialOrd + FromPrimitive + Debug {
    /// Converts an `f64` literal. Panics only for non-finite input, which
    /// callers never pass.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits")
    }
}

impl<T: Num + Clone + PartialOrd + FromPrimitive + Debug> Field for T {}

/// Floating-point scalar used by objectives, oracles and simulators.
pub trait Real:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
    fn erf(self) -> Self;

    fn c(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

impl Real for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }
}
