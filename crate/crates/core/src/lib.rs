//! Virtual-time laboratory for parallel SGD with fixed worker delays.
//!
//! Generic code is parameterized by [`Real`] (`f32`/`f64`) or, for the
//! closed-form calculators, by [`Field`] (which also admits exact
//! rationals). The aliases below fix `f64`.

pub mod complexity;
pub mod error;
pub mod experiments;
pub mod hard;
pub mod model;
pub mod optimizers;
pub mod oracles;
pub mod protocol;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

pub type Point64 = model::Point<f64>;
pub type Problem64 = model::ProblemSpec<f64>;
pub type Estimator64 = model::Estimator<f64>;
pub type Rational = num_rational::BigRational;
