use super::MemoryParameter;
use crate::distributions::MomentSet;
use crate::scalar::Scalar;

/// Running centered sums `(S̃_n, T̃_n, Ũ_n)` of a walk prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredSums<T> {
    pub s: T,
    pub t: T,
    pub u: T,
}

/// Conditional expectations of functions of the next step given the
/// first `n` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalMoments<T> {
    /// `E(X − m1 | F_n)`
    pub centered1: T,
    /// `E((X − m1)² | F_n)`
    pub centered2: T,
    /// `E((X − m1)³ | F_n)`
    pub centered3: T,
    /// `E(X² − m2 | F_n)`
    pub square: T,
    /// `E((X² − m2)(X − m1) | F_n)`
    pub square_centered: T,
    /// `E(X³ − m3 | F_n)`
    pub cube: T,
}

impl<T: Clone> ConditionalMoments<T> {
    pub fn to_array(&self) -> [T; 6] {
        [
            self.centered1.clone(),
            self.centered2.clone(),
            self.centered3.clone(),
            self.square.clone(),
            self.square_centered.clone(),
            self.cube.clone(),
        ]
    }

    pub const NAMES: [&'static str; 6] = [
        "E(X-m1|F)",
        "E((X-m1)^2|F)",
        "E((X-m1)^3|F)",
        "E(X^2-m2|F)",
        "E((X^2-m2)(X-m1)|F)",
        "E(X^3-m3|F)",
    ];
}

/// Predicted conditional moments of `X_{n+1}` given the centered sums at `n`.
///
/// The repeat branch picks each past step with probability `α/n`, so for any
/// power `k`, `E(X^k − m_k | F_n) = (α/n)(ΣX_i^k − n m_k)`; the centered
/// powers follow by expanding around `m1`.
pub fn conditional_step_moments<T: Scalar>(
    sums: &CenteredSums<T>,
    n: usize,
    ms: &MomentSet<T>,
    mp: &MemoryParameter<T>,
) -> ConditionalMoments<T> {
    assert!(n >= 1, "conditioning needs at least one step");
    let r = mp.alpha() / T::from_count(n);
    let c = |k: usize| T::from_count(k);
    let (s, t, u) = (sums.s.clone(), sums.t.clone(), sums.u.clone());
    let m1 = ms.m1.clone();
    let m2 = ms.m2.clone();

    ConditionalMoments {
        centered1: r.clone() * s.clone(),
        centered2: r.clone() * t.clone() - c(2) * r.clone() * m1.clone() * s.clone()
            + ms.central2.clone(),
        centered3: r.clone() * u.clone() - c(3) * r.clone() * m1.clone() * t.clone()
            + c(3) * r.clone() * m1.clone() * m1.clone() * s.clone()
            + ms.central3.clone(),
        square: r.clone() * t.clone(),
        square_centered: r.clone() * u.clone() - r.clone() * m1 * t - r.clone() * m2 * s
            + ms.mixed12.clone(),
        cube: r * u,
    }
}
