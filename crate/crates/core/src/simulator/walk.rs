use rand::{Rng, RngCore};

use super::replicate_rng;
use crate::distributions::{sample_step, RawMoments, StepDistribution};
use crate::gamma::martingale_scale;
use crate::moments::{CenteredSums, MemoryParameter};

/// Generator state of one walk: the stored steps and their power sums.
#[derive(Clone, Debug)]
pub struct ElephantWalk<'a> {
    dist: &'a StepDistribution,
    alpha: f64,
    steps: Vec<f64>,
    sum1: f64,
    sum2: f64,
    sum3: f64,
}

impl<'a> ElephantWalk<'a> {
    pub fn new(dist: &'a StepDistribution, mp: &MemoryParameter<f64>) -> Self {
        Self::with_capacity(dist, mp, 0)
    }

    pub fn with_capacity(dist: &'a StepDistribution, mp: &MemoryParameter<f64>, n: usize) -> Self {
        Self {
            dist,
            alpha: mp.alpha(),
            steps: Vec::with_capacity(n),
            sum1: 0.0,
            sum2: 0.0,
            sum3: 0.0,
        }
    }

    /// Starts from a fixed prefix.
    pub fn from_prefix(
        dist: &'a StepDistribution,
        mp: &MemoryParameter<f64>,
        prefix: &[f64],
    ) -> Self {
        let mut w = Self::with_capacity(dist, mp, prefix.len() + 1);
        for &x in prefix {
            w.push(x);
        }
        w
    }

    /// Samples what the next step would be without taking it.
    ///
    /// The first step is a fresh draw. Later steps draw one uniform for the
    /// repeat coin, then either one word for the repeated index or one fresh
    /// sample.
    pub fn propose<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.steps.is_empty() {
            return sample_step(self.dist, rng);
        }
        if rng.random::<f64>() < self.alpha {
            self.steps[super::uniform_index(rng.next_u64(), self.steps.len())]
        } else {
            sample_step(self.dist, rng)
        }
    }

    pub fn step<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let x = self.propose(rng);
        self.push(x);
        x
    }

    /// Forgets all steps, keeping the allocation.
    pub fn reset(&mut self) {
        self.steps.clear();
        self.sum1 = 0.0;
        self.sum2 = 0.0;
        self.sum3 = 0.0;
    }

    fn push(&mut self, x: f64) {
        self.steps.push(x);
        self.sum1 += x;
        self.sum2 += x * x;
        self.sum3 += x * x * x;
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn position(&self) -> f64 {
        self.sum1
    }

    pub fn centered(&self, m: &RawMoments<f64>) -> CenteredSums<f64> {
        let n = self.steps.len() as f64;
        CenteredSums {
            s: self.sum1 - n * m.m1,
            t: self.sum2 - n * m.m2,
            u: self.sum3 - n * m.m3,
        }
    }

    pub fn state(&self) -> WalkState {
        let m = self.dist.raw_moments::<f64>();
        let sums = self.centered(&m);
        let n = self.steps.len();
        WalkState {
            n,
            alpha: self.alpha,
            steps: self.steps.clone(),
            s: self.sum1,
            s_tilde: sums.s,
            t_tilde: sums.t,
            u_tilde: sums.u,
            q: if n == 0 {
                0.0
            } else {
                martingale_scale(n, self.alpha) * sums.s
            },
        }
    }
}

/// A realized walk prefix with its centered sums and martingale value
/// `q = a_n S̃_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    pub n: usize,
    pub alpha: f64,
    pub steps: Vec<f64>,
    pub s: f64,
    pub s_tilde: f64,
    pub t_tilde: f64,
    pub u_tilde: f64,
    pub q: f64,
}

impl WalkState {
    /// Builds the state of an explicit step sequence.
    pub fn from_steps(dist: &StepDistribution, mp: &MemoryParameter<f64>, steps: &[f64]) -> Self {
        ElephantWalk::from_prefix(dist, mp, steps).state()
    }

    pub fn sums(&self) -> CenteredSums<f64> {
        CenteredSums {
            s: self.s_tilde,
            t: self.t_tilde,
            u: self.u_tilde,
        }
    }
}

/// One path of `n` steps; a deterministic function of its arguments.
///
/// Uses the same stream as replicate 0 of a batch seeded with `seed`.
pub fn simulate_path(
    dist: &StepDistribution,
    mp: &MemoryParameter<f64>,
    n: usize,
    seed: u64,
) -> WalkState {
    assert!(n >= 1, "a path has at least one step");
    let mut rng = replicate_rng(seed, 0);
    let mut walk = ElephantWalk::with_capacity(dist, mp, n);
    for _ in 0..n {
        walk.step(&mut rng);
    }
    walk.state()
}

/// Table of `a_k = Γ(k)/Γ(k+α)` for `k = 1..=n`.
#[derive(Clone, Debug)]
pub struct MartingaleScales {
    values: Vec<f64>,
}

impl MartingaleScales {
    pub fn new(alpha: f64, n: usize) -> Self {
        Self {
            values: (1..=n).map(|k| martingale_scale(k, alpha)).collect(),
        }
    }

    /// `a_k`, 1-based.
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
