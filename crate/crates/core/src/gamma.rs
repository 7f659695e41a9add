//! Gamma-ratio machinery.
//!
//! Everything here works with ratios `Γ(x)/Γ(y)` in log space so that tables
//! can run far past the point where `Γ` itself overflows (`n ≈ 171` in
//! double precision). Large arguments use the Stirling series for the
//! *difference* `ln Γ(y+δ) − ln Γ(y)`, which keeps full relative accuracy
//! even when both logarithms are of order `10^8`; small arguments are shifted
//! up with the functional equation first.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Guard radius on the `b − a − 1`, `b − a − 2` and `β − 1` denominators.
pub const SINGULARITY_RADIUS: f64 = 1e-9;

/// Arguments are shifted to at least this before the Stirling series is used.
const STIRLING_THRESHOLD: f64 = 10.0;

/// `B_{2k} / (2k (2k − 1))` for `k = 1..=10`.
const STIRLING_COEFFS: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

/// `sum_k c_k / x^(2k−1)`, the correction to Stirling's formula.
fn stirling_tail<T: Real>(x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut acc = T::zero();
    for &c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + T::c(c);
    }
    acc * inv
}

fn is_integer<T: Real>(x: T) -> bool {
    x == x.round()
}

/// Smallest shift `k` with `x + k >= STIRLING_THRESHOLD`.
fn shift_for<T: Real>(x: T) -> usize {
    let gap = T::c(STIRLING_THRESHOLD) - x;
    if gap <= T::zero() {
        0
    } else {
        gap.ceil().to_usize().unwrap_or(0)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "ln_gamma needs a positive argument");
    let k = shift_for(x);
    let mut prod = T::one();
    for i in 0..k {
        prod = prod * (x + T::from_index(i));
    }
    let z = x + T::from_index(k);
    let half = T::c(0.5);
    let ln_2pi_half = T::c(0.918_938_533_204_672_8);
    (z - half) * z.ln() - z + ln_2pi_half + stirling_tail(z) - prod.ln()
}

/// `Γ(x)` for real `x`; exact factorials at small positive integers and
/// `±inf` at the poles.
pub fn gamma<T: Real>(x: T) -> T {
    if is_integer(x) {
        if x <= T::zero() {
            return T::infinity();
        }
        if x <= T::c(30.0) {
            let n = x.to_usize().expect("small integer");
            return (1..n).fold(T::one(), |acc, i| acc * T::from_index(i));
        }
    }
    if x > T::zero() {
        return ln_gamma(x).exp();
    }
    let pi = T::PI();
    pi / ((pi * x).sin() * gamma(T::one() - x))
}

/// `Γ(x)/Γ(y)` stored as `sign · exp(log_magnitude)`.
///
/// A vanishing ratio (pole in the denominator) has `log_magnitude = −inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaRatio<T> {
    pub log_magnitude: T,
    pub sign: T,
}

impl<T: Real> GammaRatio<T> {
    pub fn new(x: T, y: T) -> Self {
        let y_pole = y <= T::zero() && is_integer(y);
        let x_pole = x <= T::zero() && is_integer(x);
        if y_pole && !x_pole {
            return Self {
                log_magnitude: T::neg_infinity(),
                sign: T::one(),
            };
        }
        if x_pole && !y_pole {
            return Self {
                log_magnitude: T::infinity(),
                sign: T::one(),
            };
        }
        if x > T::zero() && y > T::zero() {
            return Self {
                log_magnitude: ln_gamma_difference(x, y),
                sign: T::one(),
            };
        }
        let (lx, sx) = ln_abs_gamma(x);
        let (ly, sy) = ln_abs_gamma(y);
        Self {
            log_magnitude: lx - ly,
            sign: sx * sy,
        }
    }

    pub fn value(self) -> T {
        self.sign * self.log_magnitude.exp()
    }
}

/// `ln|Γ(x)|` and the sign of `Γ(x)` for non-pole `x`.
fn ln_abs_gamma<T: Real>(x: T) -> (T, T) {
    if x > T::zero() {
        return (ln_gamma(x), T::one());
    }
    // reflection: Γ(x) = π / (sin(πx) Γ(1−x))
    let pi = T::PI();
    let s = (pi * x).sin();
    (pi.ln() - s.abs().ln() - ln_gamma(T::one() - x), s.signum())
}

/// `ln Γ(x) − ln Γ(y)` for positive `x`, `y`.
fn ln_gamma_difference<T: Real>(x: T, y: T) -> T {
    let k = shift_for(x.min(y));
    // Γ(z) = Γ(z+k) / (z (z+1) ... (z+k−1))
    let mut ratio = T::one();
    for i in 0..k {
        let i = T::from_index(i);
        ratio = ratio * ((y + i) / (x + i));
    }
    let xs = x + T::from_index(k);
    let ys = y + T::from_index(k);
    stirling_difference(ys, xs - ys) + ratio.ln()
}

/// `ln Γ(y+δ) − ln Γ(y)` for `y >= STIRLING_THRESHOLD`, `y + δ > 0`.
fn stirling_difference<T: Real>(y: T, delta: T) -> T {
    let half = T::c(0.5);
    let yd = y + delta;
    (y - half) * (delta / y).ln_1p() + delta * yd.ln() - delta + stirling_tail(yd)
        - stirling_tail(y)
}

/// `Γ(n+δ)/Γ(n)` for `n >= STIRLING_THRESHOLD`, `δ >= 0`, computed without a
/// large exponent: `(n+δ)^δ · exp((n − ½) ln(1 + δ/n) − δ + tails)`.
fn direct_ratio_large<T: Real>(n: T, delta: T) -> T {
    let half = T::c(0.5);
    let nd = n + delta;
    let small = (n - half) * (delta / n).ln_1p() - delta + stirling_tail(nd) - stirling_tail(n);
    nd.powf(delta) * small.exp()
}

fn check_ratio_domain<T: Real>(n: T, delta: T) -> Result<()> {
    if n < T::one() || n.is_nan() {
        return Err(Error::Domain(format!(
            "gamma ratio needs n >= 1, got {n:?}"
        )));
    }
    if n + delta <= T::zero() || delta.is_nan() {
        return Err(Error::Domain(format!(
            "gamma ratio needs n + delta > 0, got n = {n:?}, delta = {delta:?}"
        )));
    }
    Ok(())
}

/// `ln Γ(n+δ) − ln Γ(n)`.
pub fn log_gamma_ratio<T: Real>(n: T, delta: T) -> Result<T> {
    check_ratio_domain(n, delta)?;
    if delta >= T::zero() && is_integer(delta) && delta <= T::c(8.0) {
        return Ok(integer_shift_product(n, delta).ln());
    }
    Ok(ln_gamma_difference(n + delta, n))
}

/// `Γ(n+δ)/Γ(n)` evaluated directly (no log round trip for `δ >= 0`).
pub fn gamma_ratio<T: Real>(n: T, delta: T) -> Result<T> {
    check_ratio_domain(n, delta)?;
    if delta >= T::zero() && is_integer(delta) && delta <= T::c(8.0) {
        return Ok(integer_shift_product(n, delta));
    }
    if delta < T::zero() {
        return Ok(ln_gamma_difference(n + delta, n).exp());
    }
    let k = shift_for(n);
    let mut prod = T::one();
    for i in 0..k {
        let z = n + T::from_index(i);
        prod = prod * (z / (z + delta));
    }
    Ok(direct_ratio_large(n + T::from_index(k), delta) * prod)
}

fn integer_shift_product<T: Real>(n: T, delta: T) -> T {
    let d = delta.to_usize().expect("small integer shift");
    (0..d).fold(T::one(), |acc, i| acc * (n + T::from_index(i)))
}

/// The martingale normalizer `a_n = Γ(n)/Γ(n+α)`, so that `a_n S̃_n` is a
/// martingale. `a_1 = 1/Γ(1+α)` and `a_n ~ n^(−α)`.
pub fn martingale_scale<T: Real>(n: usize, alpha: T) -> T {
    assert!(n >= 1, "martingale scale is defined for n >= 1");
    gamma_ratio(T::from_index(n), alpha)
        .expect("n >= 1 and alpha >= 0")
        .recip()
}

fn check_nonnegative<T: Real>(a: T, b: T, n: usize) -> Result<()> {
    if !(a >= T::zero() && b >= T::zero()) {
        return Err(Error::Domain(format!(
            "gamma sums need a, b >= 0, got a = {a:?}, b = {b:?}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("gamma sums need n >= 1".into()));
    }
    Ok(())
}

fn guard<T: Real>(value: T, name: &str) -> Result<()> {
    if value.abs() < T::c(SINGULARITY_RADIUS) {
        return Err(Error::Domain(format!(
            "{name} = {value:?} is within {SINGULARITY_RADIUS:e} of 0; identity is singular"
        )));
    }
    Ok(())
}

/// `sum_{j=1}^n Γ(j+a)/Γ(j+b)` in closed form, for `a, b >= 0`, `b ≠ a+1`.
pub fn gamma_sum_linear<T: Real>(a: T, b: T, n: usize) -> Result<T> {
    check_nonnegative(a, b, n)?;
    let d1 = b - a - T::one();
    guard(d1, "b - a - 1")?;
    let nn = T::from_index(n);
    let head = GammaRatio::new(a + T::one(), b).value();
    let tail = GammaRatio::new(nn + a + T::one(), nn + b).value();
    Ok((head - tail) / d1)
}

/// `sum_{j=1}^n j · Γ(j+a)/Γ(j+b)` in closed form, for `a, b >= 0`,
/// `b ∉ {a+1, a+2}`.
pub fn gamma_sum_weighted<T: Real>(a: T, b: T, n: usize) -> Result<T> {
    check_nonnegative(a, b, n)?;
    let one = T::one();
    let d1 = b - a - one;
    let d2 = b - a - T::c(2.0);
    guard(d1, "b - a - 1")?;
    guard(d2, "b - a - 2")?;
    let nn = T::from_index(n);
    let head = GammaRatio::new(a + one, b - one).value();
    let tail = GammaRatio::new(nn + a + one, nn + b - one).value();
    let last = GammaRatio::new(nn + one + a, nn + b).value();
    Ok((head - tail) / (d1 * d2) - nn / d1 * last)
}

/// Term-by-term `sum_{j=1}^n Γ(j+a)/Γ(j+b)`. O(n); a reference path for
/// testing the closed form, not for production tables.
pub fn gamma_sum_linear_direct<T: Real>(a: T, b: T, n: usize) -> T {
    direct_gamma_sum(a, b, n, false)
}

/// Term-by-term `sum_{j=1}^n j · Γ(j+a)/Γ(j+b)`.
pub fn gamma_sum_weighted_direct<T: Real>(a: T, b: T, n: usize) -> T {
    direct_gamma_sum(a, b, n, true)
}

fn direct_gamma_sum<T: Real>(a: T, b: T, n: usize, weighted: bool) -> T {
    let mut term = GammaRatio::new(T::one() + a, T::one() + b).value();
    let mut acc = Compensated::zero();
    for j in 1..=n {
        let jj = T::from_index(j);
        acc.add(if weighted { jj * term } else { term });
        term = term * (jj + a) / (jj + b);
    }
    acc.value()
}

/// Float-only Neumaier sum (the generic one needs `Signed`).
struct Compensated<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Compensated<T> {
    fn zero() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// A first-order linear recursion `b_{n+1} = (1 + β/n) b_n + c_n`.
///
/// `c[j − 1]` holds `c_j`; it must cover every index below the requested `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursionSpec<T> {
    pub beta: T,
    pub b1: T,
    pub c: Vec<T>,
}

impl<T: Real> RecursionSpec<T> {
    pub fn new(beta: T, b1: T, c: Vec<T>) -> Result<Self> {
        if beta <= T::zero() || beta.is_nan() {
            return Err(Error::Domain(format!(
                "recursion needs beta > 0, got {beta:?}"
            )));
        }
        Ok(Self { beta, b1, c })
    }

    pub fn constant(beta: T, c: T, len: usize) -> Result<Self> {
        Self::new(beta, c, vec![c; len])
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("recursion index starts at 1".into()));
        }
        if self.c.len() + 1 < n {
            return Err(Error::Domain(format!(
                "inhomogeneity defined for {} indices, b_{n} needs {}",
                self.c.len(),
                n - 1
            )));
        }
        Ok(())
    }
}

/// `b_n = Γ(n+β)/Γ(n) · (b_1/Γ(1+β) + sum_{j<n} Γ(j+1)/Γ(j+1+β) c_j)`.
pub fn solve_recursion<T: Real>(spec: &RecursionSpec<T>, n: usize) -> Result<T> {
    spec.check_len(n)?;
    let beta = spec.beta;
    let mut acc = Compensated::zero();
    acc.add(spec.b1 / gamma(T::one() + beta));
    for (j, c) in spec.c.iter().take(n - 1).enumerate() {
        let j1 = T::from_index(j + 2);
        acc.add(*c / gamma_ratio(j1, beta)?);
    }
    Ok(gamma_ratio(T::from_index(n), beta)? * acc.value())
}

/// Iterates the recursion step by step. Reference path for tests.
pub fn iterate_recursion<T: Real>(spec: &RecursionSpec<T>, n: usize) -> Result<T> {
    spec.check_len(n)?;
    let mut b = spec.b1;
    for (k, c) in spec.c.iter().take(n - 1).enumerate() {
        let k = T::from_index(k + 1);
        b = (T::one() + spec.beta / k) * b + *c;
    }
    Ok(b)
}

/// Closed form for constant `c_n = b_1 = c`:
/// `c/((β−1)Γ(β)) · Γ(n+β)/Γ(n) − c n/(β−1)`. Singular at `β = 1`.
pub fn solve_constant_recursion<T: Real>(beta: T, c: T, n: usize) -> Result<T> {
    if beta <= T::zero() || beta.is_nan() {
        return Err(Error::Domain(format!(
            "recursion needs beta > 0, got {beta:?}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("recursion index starts at 1".into()));
    }
    let d = beta - T::one();
    guard(d, "beta - 1")?;
    let nn = T::from_index(n);
    Ok(c / (d * gamma(beta)) * gamma_ratio(nn, beta)? - c * nn / d)
}
