use serde::{Deserialize, Serialize};

use super::closed_form::{fourth_moment_coefficient, SINGULAR_ALPHA_RADIUS};
use super::MemoryParameter;
use crate::distributions::MomentSet;
use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::scalar::Real;

/// First four moments of the superdiffusive limit `Q = lim (S_n − n m1)/n^α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMoments<T> {
    pub q1: T,
    pub q2: T,
    pub q3: T,
    pub q4: T,
}

/// Moments of `Q`; only defined for `α > 1/2`.
pub fn limit_q_moments<T: Real>(
    ms: &MomentSet<T>,
    mp: &MemoryParameter<T>,
) -> Result<LimitMoments<T>> {
    let alpha = mp.alpha();
    let alpha_f = alpha.to_f64().unwrap_or(f64::NAN);
    if !mp.is_superdiffusive() {
        return Err(Error::NotSuperdiffusive { alpha: alpha_f });
    }
    let d2 = T::c(2.0) * alpha - T::one();
    if d2.abs() < T::c(2.0 * SINGULAR_ALPHA_RADIUS) {
        return Err(Error::Singular {
            denominator: "2*alpha - 1",
            alpha: alpha_f,
        });
    }
    let d3 = T::c(3.0) * alpha - T::one();
    let c2 = (d2 * gamma(T::c(2.0) * alpha)).recip();
    let c3 = T::c(4.0) / (d3 * gamma(T::c(3.0) * alpha));
    Ok(LimitMoments {
        q1: T::zero(),
        q2: ms.central2 * c2,
        q3: ms.central3 * c3,
        q4: fourth_moment_coefficient(ms, mp)?,
    })
}
