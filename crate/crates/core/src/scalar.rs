//! Numeric abstractions shared by the moment engine.
//!
//! Two tiers are used. [`Scalar`] covers every type the moment recursions and
//! the enumeration oracle can run on: only ring/field operations are needed,
//! so `f32`, `f64` and exact [`BigRational`](num_rational::BigRational) all
//! qualify. [`Real`] adds the transcendental functions needed for gamma
//! ratios and closed forms, so it is limited to the binary floating-point
//! types.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// A field element usable by the exact moment recursions.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
    /// Lossless for every value an `f64` can hold when the type is exact.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
}

/// Binary floating point: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync {
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }

    fn from_index(n: usize) -> Self {
        Self::from_usize(n).expect("index fits the float type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated running sum.
///
/// For exact scalar types the compensation term stays identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new(initial: T) -> Self {
        Self {
            sum: initial,
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum.clone() + x.clone();
        let err = if self.sum.abs() >= x.abs() {
            (self.sum.clone() - t.clone()) + x
        } else {
            (x - t.clone()) + self.sum.clone()
        };
        self.compensation = self.compensation.clone() + err;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum.clone() + self.compensation.clone()
    }
}

impl<T: Scalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new(T::zero())
    }
}
