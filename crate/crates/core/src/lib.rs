//! Elephant random walk with general step laws: exact moment recursions,
//! closed forms and limits of the normalized walk, the gamma-function
//! machinery behind them, and a reproducible parallel simulator.
//!
//! The moment code is generic over the scalar; the aliases below pin the
//! common choices.

pub mod distributions;
pub mod error;
pub mod exact_sum;
pub mod gamma;
pub mod moments;
pub mod scalar;
pub mod simulator;

pub use distributions::{derive_moment_set, sample_step, MomentSet, RawMoments, StepDistribution};
pub use error::{Error, Result};
pub use exact_sum::ExactSum;
pub use moments::MemoryParameter;
pub use scalar::{Real, Scalar};

/// Exact rationals, used by the recursion and enumeration oracles.
pub type Rational = num_rational::BigRational;

pub type MomentSetF64 = MomentSet<f64>;
pub type MomentSetExact = MomentSet<Rational>;
pub type MemoryF64 = MemoryParameter<f64>;
pub type ExactRowF64 = moments::ExactMomentRow<f64>;
pub type LimitsF64 = moments::LimitMoments<f64>;
