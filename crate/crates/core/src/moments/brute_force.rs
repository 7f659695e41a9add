use std::collections::HashMap;

use super::{ExactMomentRow, MemoryParameter};
use crate::distributions::StepDistribution;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

pub const MAX_ENUMERATION_STEPS: usize = 8;
pub const MAX_ENUMERATION_SUPPORT: usize = 4;

/// Exact expectations at step `n` by enumerating every outcome tree of a
/// finitely supported walk.
///
/// After `k` steps the walk branches into the `k` repeat choices (each with
/// probability `α/k`) and into every support point (probability
/// `(1 − α)·weight`). Each leaf contributes its probability times the exact
/// values of the seven mixed moments; leaves that realize the same sequence
/// of step values are pooled before the moments are evaluated. This path
/// shares nothing with the moment recursions and serves as their oracle.
pub fn brute_force_moments<T: Scalar>(
    dist: &StepDistribution,
    mp: &MemoryParameter<T>,
    n: usize,
) -> Result<ExactMomentRow<T>> {
    dist.validate()?;
    let support = dist.support().ok_or_else(|| {
        Error::InvalidDistribution("enumeration needs a finitely supported law".into())
    })?;
    if n == 0 || n > MAX_ENUMERATION_STEPS || support.len() > MAX_ENUMERATION_SUPPORT {
        return Err(Error::SizeGuard {
            n,
            support: support.len(),
        });
    }
    let raw = dist.raw_moments::<T>();
    let points: Vec<T> = support.iter().map(|(x, _)| T::lit(*x)).collect();
    let weights: Vec<T> = support.iter().map(|(_, w)| T::lit(*w)).collect();

    let mut walker = Enumerator {
        alpha: mp.alpha(),
        points,
        weights,
        n,
        m: [raw.m1, raw.m2, raw.m3],
        path: Vec::with_capacity(n),
        leaves: HashMap::new(),
    };
    for j in 0..walker.points.len() {
        let w = walker.weights[j].clone();
        if w.is_zero() {
            continue;
        }
        walker.path.push(j);
        walker.descend(w);
        walker.path.pop();
    }
    let mut acc: [CompensatedSum<T>; 7] = Default::default();
    let mut leaves: Vec<_> = std::mem::take(&mut walker.leaves).into_iter().collect();
    leaves.sort_by_key(|(key, _)| *key);
    for (key, prob) in leaves {
        let path = decode(key, walker.points.len(), n);
        for (a, v) in acc.iter_mut().zip(walker.leaf_values(&path)) {
            a.add(prob.value() * v);
        }
    }
    let [s2, st, s3, su, t2, s2t, s4] = acc.map(|a| a.value());
    Ok(ExactMomentRow {
        n,
        s2,
        st,
        s3,
        su,
        t2,
        s2t,
        s4,
    })
}

struct Enumerator<T> {
    alpha: T,
    points: Vec<T>,
    weights: Vec<T>,
    n: usize,
    m: [T; 3],
    /// Support indices of the steps taken so far.
    path: Vec<usize>,
    /// Leaf probability per sequence of support indices (base-`s` digits).
    /// Compensated, so the f64 oracle stays within a few ulps over
    /// thousands of leaves.
    leaves: HashMap<u32, CompensatedSum<T>>,
}

fn decode(mut key: u32, base: usize, n: usize) -> Vec<usize> {
    let mut path = vec![0; n];
    for slot in path.iter_mut().rev() {
        *slot = (key % base as u32) as usize;
        key /= base as u32;
    }
    path
}

impl<T: Scalar> Enumerator<T> {
    fn descend(&mut self, prob: T) {
        let k = self.path.len();
        if k == self.n {
            self.leaf(prob);
            return;
        }
        let repeat = self.alpha.clone() / T::from_count(k);
        if !repeat.is_zero() {
            for i in 0..k {
                let j = self.path[i];
                self.path.push(j);
                self.descend(prob.clone() * repeat.clone());
                self.path.pop();
            }
        }
        let fresh = T::one() - self.alpha.clone();
        if !fresh.is_zero() {
            for j in 0..self.points.len() {
                let w = self.weights[j].clone();
                if w.is_zero() {
                    continue;
                }
                self.path.push(j);
                self.descend(prob.clone() * fresh.clone() * w);
                self.path.pop();
            }
        }
    }

    fn leaf(&mut self, prob: T) {
        let base = self.points.len() as u32;
        let key = self.path.iter().fold(0u32, |k, &j| k * base + j as u32);
        self.leaves.entry(key).or_default().add(prob);
    }

    fn leaf_values(&self, path: &[usize]) -> [T; 7] {
        let mut sums = [T::zero(), T::zero(), T::zero()];
        for &j in path {
            let x = self.points[j].clone();
            let x2 = x.clone() * x.clone();
            sums[0] = sums[0].clone() + x.clone();
            sums[1] = sums[1].clone() + x2.clone();
            sums[2] = sums[2].clone() + x2 * x;
        }
        let nn = T::from_count(self.n);
        let s = sums[0].clone() - nn.clone() * self.m[0].clone();
        let t = sums[1].clone() - nn.clone() * self.m[1].clone();
        let u = sums[2].clone() - nn * self.m[2].clone();
        let s2 = s.clone() * s.clone();
        [
            s2.clone(),
            s.clone() * t.clone(),
            s2.clone() * s.clone(),
            s * u,
            t.clone() * t.clone(),
            s2.clone() * t,
            s2.clone() * s2,
        ]
    }
}
