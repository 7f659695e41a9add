use super::MemoryParameter;
use crate::distributions::MomentSet;
use crate::error::{Error, Result};
use crate::gamma::{gamma, gamma_ratio};
use crate::scalar::Real;

/// Radius around `α ∈ {1/4, 1/3, 1/2}` inside which a formula is refused.
pub const SINGULAR_ALPHA_RADIUS: f64 = 1e-8;

/// The six mixed moments that have exact finite-`n` solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MixedMoment {
    S2,
    ST,
    S3,
    SU,
    T2,
    S2T,
}

impl MixedMoment {
    pub const ALL: [MixedMoment; 6] = [
        MixedMoment::S2,
        MixedMoment::ST,
        MixedMoment::S3,
        MixedMoment::SU,
        MixedMoment::T2,
        MixedMoment::S2T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MixedMoment::S2 => "s2",
            MixedMoment::ST => "st",
            MixedMoment::S3 => "s3",
            MixedMoment::SU => "su",
            MixedMoment::T2 => "t2",
            MixedMoment::S2T => "s2t",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormMoments<T> {
    pub n: usize,
    pub s2: T,
    pub st: T,
    pub s3: T,
    pub su: T,
    pub t2: T,
    pub s2t: T,
    /// `K4` with `E(S̃_n⁴) ~ K4 · Γ(n+4α)/Γ(n)`.
    pub fourth_coefficient: T,
    /// `Γ(n+4α)/Γ(n)`, the growth factor paired with `fourth_coefficient`.
    pub fourth_growth: T,
}

/// `value = p α − 1`; refuses α within the radius of `1/p`.
fn check<T: Real>(alpha: T, value: T, p: f64, denominator: &'static str) -> Result<()> {
    if value.abs() < T::c(p * SINGULAR_ALPHA_RADIUS) {
        return Err(Error::Singular {
            denominator,
            alpha: alpha.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// `M/((2α−1)Γ(2α)) · Γ(n+2α)/Γ(n) − M n/(2α−1)`: shared by `s2, st, su, t2`.
fn quadratic_family<T: Real>(scale: T, alpha: T, n: usize) -> Result<T> {
    let two = T::c(2.0);
    let d2 = two * alpha - T::one();
    check(alpha, d2, 2.0, "2*alpha - 1")?;
    let nn = T::from_index(n);
    let lead = gamma_ratio(nn, two * alpha)? / (d2 * gamma(two * alpha));
    Ok(scale * lead - scale * nn / d2)
}

/// The cubic family shared by `s3` and `s2t`.
fn cubic_family<T: Real>(scale: T, alpha: T, n: usize) -> Result<T> {
    let two = T::c(2.0);
    let three = T::c(3.0);
    let d2 = two * alpha - T::one();
    let d3 = three * alpha - T::one();
    check(alpha, d2, 2.0, "2*alpha - 1")?;
    check(alpha, d3, 3.0, "3*alpha - 1")?;
    let nn = T::from_index(n);
    let c3 = T::c(4.0) / (d3 * gamma(three * alpha)) * gamma_ratio(nn, three * alpha)?;
    let c2 = three / (d2 * gamma(two * alpha)) * gamma_ratio(nn, two * alpha)?;
    let c1 = (alpha + T::one()) / (d2 * d3) * nn;
    Ok(scale * c3 - scale * c2 + scale * c1)
}

/// Exact finite-`n` value of one mixed moment.
pub fn closed_form<T: Real>(
    ms: &MomentSet<T>,
    mp: &MemoryParameter<T>,
    n: usize,
    which: MixedMoment,
) -> Result<T> {
    assert!(n >= 1, "closed forms are indexed from n = 1");
    let alpha = mp.alpha();
    match which {
        MixedMoment::S2 => quadratic_family(ms.central2, alpha, n),
        MixedMoment::ST => quadratic_family(ms.mixed12, alpha, n),
        MixedMoment::SU => quadratic_family(ms.mixed13, alpha, n),
        MixedMoment::T2 => quadratic_family(ms.mixed22, alpha, n),
        MixedMoment::S3 => cubic_family(ms.central3, alpha, n),
        MixedMoment::S2T => cubic_family(ms.mixed112, alpha, n),
    }
}

/// `K4 = 6(3(2α−1)²M4 + 2(1−α)(5α−2)M2²) / ((2α−1)²(4α−1)Γ(4α))`.
///
/// Evaluated as `M4·A(α) + M2²·B(α)` so that at `α = 1` (where `A = 1`,
/// `B = 0`) the result is exactly `M4`.
pub fn fourth_moment_coefficient<T: Real>(ms: &MomentSet<T>, mp: &MemoryParameter<T>) -> Result<T> {
    let alpha = mp.alpha();
    let d2 = T::c(2.0) * alpha - T::one();
    let d4 = T::c(4.0) * alpha - T::one();
    check(alpha, d2, 2.0, "2*alpha - 1")?;
    check(alpha, d4, 4.0, "4*alpha - 1")?;
    let g4 = gamma(T::c(4.0) * alpha);
    let a = T::c(18.0) / (d4 * g4);
    let b = T::c(12.0) * (T::one() - alpha) * (T::c(5.0) * alpha - T::c(2.0)) / (d2 * d2 * d4 * g4);
    Ok(ms.central4 * a + ms.central2 * ms.central2 * b)
}

/// All six exact solutions plus the fourth-moment asymptotic pair.
///
/// Fails with [`Error::Singular`] naming the first vanishing denominator.
/// Use [`closed_form`] to get the formulas that remain valid at such `α`.
pub fn closed_form_moments<T: Real>(
    ms: &MomentSet<T>,
    mp: &MemoryParameter<T>,
    n: usize,
) -> Result<ClosedFormMoments<T>> {
    let get = |w| closed_form(ms, mp, n, w);
    Ok(ClosedFormMoments {
        n,
        s2: get(MixedMoment::S2)?,
        st: get(MixedMoment::ST)?,
        su: get(MixedMoment::SU)?,
        t2: get(MixedMoment::T2)?,
        s3: get(MixedMoment::S3)?,
        s2t: get(MixedMoment::S2T)?,
        fourth_coefficient: fourth_moment_coefficient(ms, mp)?,
        fourth_growth: gamma_ratio(T::from_index(n), T::c(4.0) * mp.alpha())?,
    })
}
