//! Step laws and their moments.
//!
//! A [`StepDistribution`] is a small descriptor with exact raw moments. From
//! the raw moments `m1..m4` the centered moments `M2..M4` and the mixed
//! moments `M12, M13, M22, M112` that drive the moment recursions are derived
//! purely algebraically; no integration is involved anywhere.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance on `sum(weights) == 1` for discrete laws.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// JSON form: `{"kind":"bernoulli","p":0.3}`,
/// `{"kind":"discrete","points":[-1,2],"weights":[0.6,0.4]}` and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StepDistribution {
    Rademacher,
    Bernoulli { p: f64 },
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, stddev: f64 },
    Discrete { points: Vec<f64>, weights: Vec<f64> },
}

impl StepDistribution {
    pub fn bernoulli(p: f64) -> Result<Self> {
        let d = Self::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Self::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        let d = Self::Gaussian { mean, stddev };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let d = Self::Discrete { points, weights };
        d.validate()?;
        Ok(d)
    }

    /// Parses and validates a JSON descriptor.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))?;
        Self::from_value(value)
    }

    /// As [`from_json`](Self::from_json), for an already parsed value.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        // serde ignores unknown fields on unit variants of tagged enums
        if let Some(obj) = value.as_object() {
            if obj.get("kind").and_then(|k| k.as_str()) == Some("rademacher") && obj.len() > 1 {
                return Err(Error::Descriptor("rademacher takes no parameters".into()));
            }
        }
        let d: Self =
            serde_json::from_value(value).map_err(|e| Error::Descriptor(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::Rademacher => Ok(()),
            Self::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("bernoulli p = {p} is not a probability"));
                }
                Ok(())
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
                Ok(())
            }
            Self::Gaussian { mean, stddev } => {
                if !(mean.is_finite() && stddev.is_finite() && *stddev > 0.0) {
                    return bad(format!(
                        "gaussian needs finite mean and stddev > 0, got ({mean}, {stddev})"
                    ));
                }
                Ok(())
            }
            Self::Discrete { points, weights } => {
                if points.is_empty() {
                    return bad("discrete law has no points".into());
                }
                if points.len() != weights.len() {
                    return bad(format!(
                        "{} points but {} weights",
                        points.len(),
                        weights.len()
                    ));
                }
                if let Some(x) = points.iter().find(|x| !x.is_finite()) {
                    return bad(format!("non-finite point {x}"));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                    return bad(format!("weight {w} is negative or non-finite"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                    return bad(format!("weights sum to {total}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// Finite support as `(point, probability)` pairs, if the law has one.
    pub fn support(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            Self::Bernoulli { p } => Some(vec![(0.0, 1.0 - p), (1.0, *p)]),
            Self::Discrete { points, weights } => Some(
                points
                    .iter()
                    .copied()
                    .zip(weights.iter().copied())
                    .collect(),
            ),
            Self::Uniform { .. } | Self::Gaussian { .. } => None,
        }
    }

    /// Raw moments `E(xi^k)`, `k = 1..4`, evaluated in the scalar type `T`.
    ///
    /// Parameters are converted with `T::from_f64`, which is exact for
    /// rational `T`.
    pub fn raw_moments<T: Scalar>(&self) -> RawMoments<T> {
        match self {
            Self::Rademacher => RawMoments {
                m1: T::zero(),
                m2: T::one(),
                m3: T::zero(),
                m4: T::one(),
            },
            Self::Bernoulli { p } => {
                let p = T::lit(*p);
                RawMoments {
                    m1: p.clone(),
                    m2: p.clone(),
                    m3: p.clone(),
                    m4: p,
                }
            }
            Self::Uniform { lo, hi } => {
                // E(U^k) = (hi^(k+1) - lo^(k+1)) / ((k+1)(hi-lo)) = mean of hi^i lo^(k-i)
                let (lo, hi) = (T::lit(*lo), T::lit(*hi));
                let m = |k: usize| {
                    let mut acc = T::zero();
                    for i in 0..=k {
                        acc = acc + pow(&hi, i) * pow(&lo, k - i);
                    }
                    acc / T::from_count(k + 1)
                };
                RawMoments {
                    m1: m(1),
                    m2: m(2),
                    m3: m(3),
                    m4: m(4),
                }
            }
            Self::Gaussian { mean, stddev } => {
                let mu = T::lit(*mean);
                let var = T::lit(*stddev) * T::lit(*stddev);
                let mu2 = mu.clone() * mu.clone();
                let three = T::from_count(3);
                RawMoments {
                    m1: mu.clone(),
                    m2: mu2.clone() + var.clone(),
                    m3: mu.clone() * (mu2.clone() + three.clone() * var.clone()),
                    m4: mu2.clone() * mu2.clone()
                        + T::from_count(6) * mu2 * var.clone()
                        + three * var.clone() * var,
                }
            }
            Self::Discrete { points, weights } => {
                let mut m = [T::zero(), T::zero(), T::zero(), T::zero()];
                for (x, w) in points.iter().zip(weights) {
                    let x = T::lit(*x);
                    let w = T::lit(*w);
                    let mut xp = x.clone();
                    for mk in m.iter_mut() {
                        *mk = mk.clone() + w.clone() * xp.clone();
                        xp = xp * x.clone();
                    }
                }
                let [m1, m2, m3, m4] = m;
                RawMoments { m1, m2, m3, m4 }
            }
        }
    }

    /// Full moment set; builtin laws are always consistent.
    pub fn moment_set<T: Scalar>(&self) -> MomentSet<T> {
        derive_moment_set(self.raw_moments()).expect("builtin laws have a nonnegative variance")
    }

    /// `E|xi|^p` for the Lᵖ bound on martingale differences.
    pub fn abs_moment(&self, p: i32) -> f64 {
        match self {
            Self::Rademacher => 1.0,
            Self::Bernoulli { p: q } => *q,
            Self::Uniform { lo, hi } => {
                // integral of |x|^p over [lo, hi] / (hi - lo)
                let prim = |x: f64| x.signum() * x.abs().powi(p + 1) / f64::from(p + 1);
                (prim(*hi) - prim(*lo)) / (hi - lo)
            }
            Self::Gaussian { .. } if p % 2 == 0 => {
                let m: RawMoments<f64> = self.raw_moments();
                match p {
                    2 => m.m2,
                    4 => m.m4,
                    _ => f64::NAN,
                }
            }
            Self::Gaussian { .. } => f64::NAN,
            Self::Discrete { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x.abs().powi(p))
                .sum(),
        }
    }
}

fn pow<T: Scalar>(x: &T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, _| acc * x.clone())
}

/// Draws one step. Each kind consumes a fixed number of generator outputs:
/// one for every kind except `gaussian`, which uses two (Box-Muller).
pub fn sample_step<R: Rng + ?Sized>(dist: &StepDistribution, rng: &mut R) -> f64 {
    match dist {
        StepDistribution::Rademacher => {
            if rng.next_u64() >> 63 == 0 {
                -1.0
            } else {
                1.0
            }
        }
        StepDistribution::Bernoulli { p } => {
            if rng.random::<f64>() < *p {
                1.0
            } else {
                0.0
            }
        }
        StepDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        StepDistribution::Gaussian { mean, stddev } => {
            let u1 = 1.0 - rng.random::<f64>();
            let u2 = rng.random::<f64>();
            let r = (-2.0 * u1.ln()).sqrt();
            mean + stddev * r * (std::f64::consts::TAU * u2).cos()
        }
        StepDistribution::Discrete { points, weights } => {
            let u = rng.random::<f64>();
            let mut cum = 0.0;
            let mut last = points[0];
            for (x, w) in points.iter().zip(weights) {
                if *w <= 0.0 {
                    continue;
                }
                cum += w;
                last = *x;
                if u < cum {
                    return *x;
                }
            }
            last
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawMoments<T> {
    pub m1: T,
    pub m2: T,
    pub m3: T,
    pub m4: T,
}

impl<T: Scalar> RawMoments<T> {
    pub fn new(m1: T, m2: T, m3: T, m4: T) -> Self {
        Self { m1, m2, m3, m4 }
    }
}

/// Raw, centered and mixed moments of a step law.
///
/// `central_k = E((xi - m1)^k)`,
/// `mixed12 = E((xi - m1)(xi^2 - m2))`, `mixed13 = E((xi - m1)(xi^3 - m3))`,
/// `mixed22 = E((xi^2 - m2)^2)`, `mixed112 = E((xi - m1)^2 (xi^2 - m2))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet<T> {
    pub m1: T,
    pub m2: T,
    pub m3: T,
    pub m4: T,
    pub central2: T,
    pub central3: T,
    pub central4: T,
    pub mixed12: T,
    pub mixed13: T,
    pub mixed22: T,
    pub mixed112: T,
}

/// Computes every derived moment from `m1..m4`.
///
/// Rejects inputs whose centered variance is below `-1e-12`.
pub fn derive_moment_set<T: Scalar>(raw: RawMoments<T>) -> Result<MomentSet<T>> {
    let RawMoments { m1, m2, m3, m4 } = raw;
    let c = |k: usize| T::from_count(k);
    let m1_2 = m1.clone() * m1.clone();

    let central2 = m2.clone() - m1_2.clone();
    if central2 < -T::lit(1e-12) {
        return Err(Error::InconsistentMoments {
            central2: central2.approx(),
        });
    }
    let central3 = m3.clone() - c(3) * m1.clone() * m2.clone() + c(2) * m1_2.clone() * m1.clone();
    let central4 = m4.clone() - c(4) * m1.clone() * m3.clone() + c(6) * m1_2.clone() * m2.clone()
        - c(3) * m1_2.clone() * m1_2.clone();
    let mixed12 = m3.clone() - m1.clone() * m2.clone();
    let mixed13 = m4.clone() - m1.clone() * m3.clone();
    let mixed22 = m4.clone() - m2.clone() * m2.clone();
    let mixed112 = m4.clone() - m2.clone() * m2.clone() - c(2) * m1.clone() * m3.clone()
        + c(2) * m1_2 * m2.clone();

    Ok(MomentSet {
        m1,
        m2,
        m3,
        m4,
        central2,
        central3,
        central4,
        mixed12,
        mixed13,
        mixed22,
        mixed112,
    })
}

/// One algebraic relation between the entries of a [`MomentSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Left side minus right side.
    pub residual: f64,
}

impl<T: Scalar> MomentSet<T> {
    /// Residuals of the four identities relating mixed and centered moments.
    /// All vanish for a set produced by [`derive_moment_set`].
    pub fn identity_residuals(&self) -> [IdentityCheck; 4] {
        let c = |k: usize| T::from_count(k);
        let Self {
            m1,
            m2,
            central2,
            central3,
            central4,
            mixed12,
            mixed13,
            mixed22,
            mixed112,
            ..
        } = self.clone();
        let r1 = mixed12.clone() - c(2) * m1.clone() * central2.clone() - central3.clone();
        let r2 = c(2) * mixed13.clone() + mixed22
            - c(4) * m1.clone() * mixed12.clone()
            - c(2) * m2 * central2.clone()
            - c(3) * mixed112.clone();
        let r3 = mixed112
            - c(2) * m1.clone() * central3
            - (central4.clone() - central2.clone() * central2.clone());
        let r4 =
            mixed13 - c(3) * m1.clone() * mixed12 + c(3) * m1.clone() * m1 * central2 - central4;
        [
            IdentityCheck {
                name: "M12 - 2 m1 M2 = M3",
                residual: r1.approx(),
            },
            IdentityCheck {
                name: "2 M13 + M22 - 4 m1 M12 - 2 m2 M2 = 3 M112",
                residual: r2.approx(),
            },
            IdentityCheck {
                name: "M112 - 2 m1 M3 = M4 - M2^2",
                residual: r3.approx(),
            },
            IdentityCheck {
                name: "M13 - 3 m1 M12 + 3 m1^2 M2 = M4",
                residual: r4.approx(),
            },
        ]
    }

    /// Names of violated inequality constraints (`M2 >= 0`, `M22 >= 0`,
    /// `M4 >= M2^2`), each allowed a slack of `tol`.
    pub fn inequality_violations(&self, tol: f64) -> Vec<&'static str> {
        let slack = T::lit(tol);
        let mut out = Vec::new();
        if self.central2 < -slack.clone() {
            out.push("M2 >= 0");
        }
        if self.mixed22 < -slack.clone() {
            out.push("M22 >= 0");
        }
        if self.central4.clone() - self.central2.clone() * self.central2.clone() < -slack {
            out.push("M4 >= M2^2");
        }
        out
    }

    pub fn raw(&self) -> RawMoments<T> {
        RawMoments::new(
            self.m1.clone(),
            self.m2.clone(),
            self.m3.clone(),
            self.m4.clone(),
        )
    }
}
