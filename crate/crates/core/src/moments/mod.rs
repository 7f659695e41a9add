//! Exact and limiting moments of the centered walk `S̃_n = S_n − n m1`.

mod brute_force;
mod closed_form;
mod conditional;
mod exact;
mod limits;

pub use brute_force::{brute_force_moments, MAX_ENUMERATION_STEPS, MAX_ENUMERATION_SUPPORT};
pub use closed_form::{
    closed_form, closed_form_moments, fourth_moment_coefficient, ClosedFormMoments, MixedMoment,
    SINGULAR_ALPHA_RADIUS,
};
pub use conditional::{conditional_step_moments, CenteredSums, ConditionalMoments};
pub use exact::{exact_moments_upto, write_exact_csv, ExactMomentRow, EXACT_CSV_HEADER};
pub use limits::{limit_q_moments, LimitMoments};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Probability `α ∈ [0, 1]` of repeating a uniformly chosen past step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemoryParameter<T>(T);

impl<T: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive> MemoryParameter<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidMemory(alpha.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(&self) -> T {
        self.0.clone()
    }

    /// `α > 1/2`: the walk scaled by `n^α` converges to a non-Gaussian `Q`.
    pub fn is_superdiffusive(&self) -> bool {
        self.0 > T::from_f64(0.5).expect("one half")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_parameter_bounds() {
        assert!(MemoryParameter::new(-0.1).is_err());
        assert!(MemoryParameter::new(1.1).is_err());
        assert!(!MemoryParameter::new(0.5).unwrap().is_superdiffusive());
        assert!(MemoryParameter::new(0.51).unwrap().is_superdiffusive());
        assert!(MemoryParameter::new(0.0).is_ok());
        assert!(MemoryParameter::new(1.0).is_ok());
    }
}
