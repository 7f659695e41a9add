//! Exact accumulation of `f64` values.
//!
//! Every finite double is `±m·2^e` with a 53-bit integer `m` and
//! `e >= -1074`, so a wide enough fixed-point register holds any sum of them
//! without rounding. The register here is a little-endian array of 32-bit
//! digits stored in `i64` slots; digits may temporarily exceed 32 bits and
//! are renormalized before the slots could overflow.
//!
//! Because the sum is exact, merging accumulators is associative and
//! commutative bit for bit, which is what makes the batch simulator
//! independent of thread count.

const DIGIT_BITS: u32 = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;
/// Position of 2^-1074 (the smallest subnormal) is bit 0 of digit 0.
const BIAS: i32 = 1074;
/// 2046 bits of exponent range plus 53 mantissa bits, plus headroom for carries.
const DIGITS: usize = 72;
/// Additions allowed between normalizations; each adds < 2^32 per digit.
const MAX_PENDING: u32 = 1 << 30;

#[derive(Clone, Debug)]
pub struct ExactSum {
    digits: Box<[i64; DIGITS]>,
    pending: u32,
    /// Sum of non-finite inputs; poisons the result when not zero.
    special: f64,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self {
            digits: Box::new([0; DIGITS]),
            pending: 0,
            special: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp_field = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let pos = (exp + BIAS) as u32;
        let idx = (pos / DIGIT_BITS) as usize;
        let wide = (mantissa as u128) << (pos % DIGIT_BITS);
        let sign = if negative { -1 } else { 1 };
        for k in 0..3 {
            let part = ((wide >> (DIGIT_BITS * k)) as i64) & DIGIT_MASK;
            self.digits[idx + k as usize] += sign * part;
        }
        self.pending += 1;
        if self.pending >= MAX_PENDING {
            self.normalize();
        }
    }

    pub fn merge(&mut self, other: &ExactSum) {
        let mut other = other.clone();
        other.normalize();
        self.normalize();
        for (a, b) in self.digits.iter_mut().zip(other.digits.iter()) {
            *a += *b;
        }
        self.special += other.special;
        self.normalize();
    }

    fn normalize(&mut self) {
        let mut carry = 0i64;
        for d in self.digits[..DIGITS - 1].iter_mut() {
            let v = *d + carry;
            *d = v & DIGIT_MASK;
            carry = v >> DIGIT_BITS;
        }
        self.digits[DIGITS - 1] += carry;
        self.pending = 0;
    }

    /// The exact sum rounded to `f64` (faithfully, within one ulp).
    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let mut work = self.clone();
        work.normalize();
        let negative = work.digits[DIGITS - 1] < 0;
        if negative {
            for d in work.digits.iter_mut() {
                *d = -*d;
            }
            work.normalize();
        }
        let Some(top) = work.digits.iter().rposition(|&d| d != 0) else {
            return 0.0;
        };
        let lo = top.saturating_sub(3);
        // 128 bits starting at digit `lo` hold all significant information.
        let mut acc: u128 = 0;
        for i in (lo..=top).rev() {
            acc = (acc << DIGIT_BITS) | work.digits[i] as u128;
        }
        let sticky = work.digits[..lo].iter().any(|&d| d != 0);
        let magnitude = scale_u128(acc, sticky, lo as i32 * DIGIT_BITS as i32 - BIAS);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value() == 0.0
    }
}

impl PartialEq for ExactSum {
    fn eq(&self, other: &Self) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.normalize();
        b.normalize();
        a.digits == b.digits && a.special.to_bits() == b.special.to_bits()
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        s.extend(iter);
        s
    }
}

/// `acc * 2^exp` rounded to nearest; `sticky` marks nonzero bits below `acc`.
fn scale_u128(acc: u128, sticky: bool, exp: i32) -> f64 {
    // Keep 64 significant bits with a sticky bit so the final conversion
    // rounds once.
    let lz = acc.leading_zeros();
    let shift = 64i32 - lz as i32;
    let (head, extra_exp) = if shift > 0 {
        let dropped = acc & ((1u128 << shift) - 1);
        let mut head = (acc >> shift) as u64;
        if dropped != 0 || sticky {
            head |= 1;
        }
        (head, shift)
    } else {
        ((acc as u64) | sticky as u64, 0)
    };
    ldexp(head as f64, exp + extra_exp)
}

fn ldexp(x: f64, mut e: i32) -> f64 {
    let mut y = x;
    while e > 1000 {
        y *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        y *= 2f64.powi(-1000);
        e += 1000;
    }
    y * 2f64.powi(e)
}
