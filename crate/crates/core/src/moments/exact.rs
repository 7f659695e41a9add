use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{MemoryParameter, MixedMoment};
use crate::distributions::MomentSet;
use crate::scalar::{CompensatedSum, Scalar};

/// Expectations at step `n` of the seven mixed moments of the centered sums
/// `S̃_n = ΣX_k − n m1`, `T̃_n = ΣX_k² − n m2`, `Ũ_n = ΣX_k³ − n m3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactMomentRow<T> {
    pub n: usize,
    /// `E(S̃²)`
    pub s2: T,
    /// `E(S̃ T̃)`
    pub st: T,
    /// `E(S̃³)`
    pub s3: T,
    /// `E(S̃ Ũ)`
    pub su: T,
    /// `E(T̃²)`
    pub t2: T,
    /// `E(S̃² T̃)`
    pub s2t: T,
    /// `E(S̃⁴)`
    pub s4: T,
}

impl<T: Scalar> ExactMomentRow<T> {
    pub fn initial(ms: &MomentSet<T>) -> Self {
        Self {
            n: 1,
            s2: ms.central2.clone(),
            st: ms.mixed12.clone(),
            s3: ms.central3.clone(),
            su: ms.mixed13.clone(),
            t2: ms.mixed22.clone(),
            s2t: ms.mixed112.clone(),
            s4: ms.central4.clone(),
        }
    }

    pub fn values(&self) -> [T; 7] {
        [
            self.s2.clone(),
            self.st.clone(),
            self.s3.clone(),
            self.su.clone(),
            self.t2.clone(),
            self.s2t.clone(),
            self.s4.clone(),
        ]
    }

    pub fn get(&self, which: MixedMoment) -> T {
        match which {
            MixedMoment::S2 => self.s2.clone(),
            MixedMoment::ST => self.st.clone(),
            MixedMoment::S3 => self.s3.clone(),
            MixedMoment::SU => self.su.clone(),
            MixedMoment::T2 => self.t2.clone(),
            MixedMoment::S2T => self.s2t.clone(),
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> ExactMomentRow<U> {
        ExactMomentRow {
            n: self.n,
            s2: f(&self.s2),
            st: f(&self.st),
            s3: f(&self.s3),
            su: f(&self.su),
            t2: f(&self.t2),
            s2t: f(&self.s2t),
            s4: f(&self.s4),
        }
    }
}

/// Iterates the seven coupled moment recursions from `n = 1` to `n_max`.
///
/// The recursions are run for the centered step `Y = ξ − m1`, with
/// `V = Σ(Y_k² − M2)` and `W = Σ(Y_k³ − M3)` in place of `T̃` and `Ũ`. With
/// `m1 = 0` the terms that cancel against each other for a shifted law drop
/// out, and the original moments follow exactly from
/// `T̃ = V + 2 m1 S̃` and `Ũ = W + 3 m1 V + 3 m1² S̃`.
///
/// All seven advance together: the cubic and quartic updates read the lower
/// order moments at the same `n`. Each is kept as a compensated sum of its
/// increments; for exact scalar types this is plain exact arithmetic.
pub fn exact_moments_upto<T: Scalar>(
    ms: &MomentSet<T>,
    mp: &MemoryParameter<T>,
    n_max: usize,
) -> Vec<ExactMomentRow<T>> {
    assert!(n_max >= 1, "n_max must be at least 1");
    let alpha = mp.alpha();
    let c = |k: usize| T::from_count(k);
    let m1 = ms.m1.clone();
    let big2 = ms.central2.clone();
    let big3 = ms.central3.clone();
    let big4 = ms.central4.clone();
    let var_sq = big4.clone() - big2.clone() * big2.clone();

    let mut table = Vec::with_capacity(n_max);
    table.push(ExactMomentRow::initial(ms));
    // s2, sv, s3, sw, v2, s2v, s4
    let mut acc: [CompensatedSum<T>; 7] = [
        big2.clone(),
        big3.clone(),
        big3.clone(),
        big4.clone(),
        var_sq.clone(),
        var_sq.clone(),
        big4.clone(),
    ]
    .map(CompensatedSum::new);

    for n in 1..n_max {
        let [s2, sv, s3, sw, v2, s2v, s4] = acc.clone().map(|a| a.value());
        let r = alpha.clone() / T::from_count(n);

        let increments = [
            c(2) * r.clone() * s2.clone() + big2.clone(),
            c(2) * r.clone() * sv.clone() + big3.clone(),
            c(3) * r.clone() * (s3.clone() + sv.clone()) + big3.clone(),
            c(2) * r.clone() * sw.clone() + big4.clone(),
            c(2) * r.clone() * v2.clone() + var_sq.clone(),
            c(3) * r.clone() * s2v.clone() + c(2) * r.clone() * sw.clone() + r.clone() * v2
                - c(2) * r.clone() * big2.clone() * s2.clone()
                + var_sq.clone(),
            c(4) * r.clone() * s4
                + c(6) * r.clone() * s2v
                + c(4) * r * sw
                + c(6) * big2.clone() * s2
                + big4.clone(),
        ];
        for (a, d) in acc.iter_mut().zip(increments) {
            a.add(d);
        }
        let [s2, sv, s3, sw, v2, s2v, s4] = acc.clone().map(|a| a.value());
        let m1s2 = m1.clone() * s2.clone();
        table.push(ExactMomentRow {
            n: n + 1,
            st: sv.clone() + c(2) * m1s2.clone(),
            su: sw + c(3) * m1.clone() * (sv.clone() + m1s2.clone()),
            t2: v2 + c(4) * m1.clone() * (sv + m1s2),
            s2t: s2v + c(2) * m1.clone() * s3.clone(),
            s2,
            s3,
            s4,
        });
    }
    table
}

pub const EXACT_CSV_HEADER: &str = "n,s2,st,s3,su,t2,s2t,s4";

/// Writes the table as CSV; `f64` `Display` is the shortest round-trip form.
pub fn write_exact_csv<W: Write>(out: &mut W, rows: &[ExactMomentRow<f64>]) -> io::Result<()> {
    writeln!(out, "{EXACT_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n, r.s2, r.st, r.s3, r.su, r.t2, r.s2t, r.s4
        )?;
    }
    Ok(())
}
