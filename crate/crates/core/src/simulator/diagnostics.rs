//! Stochastic checks on simulated paths: the martingale decomposition,
//! marginal step moments, and one-step conditional moments.

use std::ops::Range;

use rayon::prelude::*;

use super::{replicate_rng, ElephantWalk, MartingaleScales, WalkState};
use crate::distributions::{MomentSet, RawMoments, StepDistribution};
use crate::error::{Error, Result};
use crate::exact_sum::ExactSum;
use crate::moments::{conditional_step_moments, ConditionalMoments, MemoryParameter};

/// Relative reconstruction error above which a path is reported as faulty.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

/// Mean of a sample with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// NaN for fewer than two observations.
    pub stderr: f64,
    pub count: u64,
}

impl Estimate {
    /// `(mean − target)/stderr`; 0 when both the error and the gap vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = self.mean - target;
        if self.stderr > 0.0 {
            gap / self.stderr
        } else if gap.abs() <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(gap)
        }
    }

    /// `|mean − target| <= k·stderr`, with a 1e-12 floor for exact samples.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12 * target.abs().max(1.0)
    }
}

/// Exact running sums for a sample mean and its standard error.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    sum: ExactSum,
    sum_sq: ExactSum,
}

impl MeanAccumulator {
    pub fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.count as f64;
        let mean = self.sum.value() / n;
        let stderr = if self.count < 2 {
            f64::NAN
        } else {
            let var = ((self.sum_sq.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        };
        Estimate {
            mean,
            stderr,
            count: self.count,
        }
    }
}

/// The martingale differences of one path and the two routes to `Q_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleView {
    /// `ε_1 = X_1 − m1`, `ε_k = S̃_k − (1 + α/(k−1)) S̃_{k−1}`.
    pub epsilons: Vec<f64>,
    /// `Σ_{j<=k} a_j ε_j`.
    pub partial_sums: Vec<f64>,
    /// `a_k S̃_k`.
    pub direct: Vec<f64>,
    /// Worst `|partial − direct|` over the path, relative to `max_k |Q_k|`.
    pub max_rel_error: f64,
}

impl MartingaleView {
    pub fn compute(state: &WalkState, ms: &MomentSet<f64>, scales: &MartingaleScales) -> Self {
        assert!(scales.len() >= state.n, "scale table too short");
        let alpha = state.alpha;
        let n = state.n;
        let mut epsilons = Vec::with_capacity(n);
        let mut partial_sums = Vec::with_capacity(n);
        let mut direct = Vec::with_capacity(n);
        let mut s_prev = 0.0;
        let mut position = 0.0;
        let mut q_sum = 0.0;
        let mut worst = 0.0f64;
        let mut magnitude = 0.0f64;
        for (i, &x) in state.steps.iter().enumerate() {
            let k = i + 1;
            position += x;
            let s = position - k as f64 * ms.m1;
            let eps = if k == 1 {
                x - ms.m1
            } else {
                s - (1.0 + alpha / (k - 1) as f64) * s_prev
            };
            let a = scales.get(k);
            q_sum += a * eps;
            let q = a * s;
            magnitude = magnitude.max(q.abs());
            if magnitude > 0.0 {
                worst = worst.max((q_sum - q).abs() / magnitude);
            }
            epsilons.push(eps);
            partial_sums.push(q_sum);
            direct.push(q);
            s_prev = s;
        }
        Self {
            epsilons,
            partial_sums,
            direct,
            max_rel_error: worst,
        }
    }
}

/// Martingale differences of a completed path and the check that they
/// telescope back to `a_n S̃_n`.
pub fn martingale_diagnostics(
    state: &WalkState,
    mp: &MemoryParameter<f64>,
    ms: &MomentSet<f64>,
) -> Result<MartingaleView> {
    if state.alpha != mp.alpha() {
        return Err(Error::Domain(format!(
            "path was generated with alpha = {}, not {}",
            state.alpha,
            mp.alpha()
        )));
    }
    let scales = MartingaleScales::new(mp.alpha(), state.n);
    let view = MartingaleView::compute(state, ms, &scales);
    if view.max_rel_error > RECONSTRUCTION_TOLERANCE {
        return Err(Error::Reconstruction {
            n: state.n,
            rel_error: view.max_rel_error,
        });
    }
    Ok(view)
}

/// Batch statistics over many paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStatistics {
    pub n: usize,
    pub replicates: u64,
    /// `step_moments[k − 1][p − 1]` estimates `E(X_k^p)`, `k <= marginal_steps`.
    pub step_moments: Vec<[Estimate; 4]>,
    pub sample_ns: Vec<usize>,
    /// `E|ε_n|²` and `E|ε_n|⁴` at each sampled `n`.
    pub epsilon_abs: Vec<[Estimate; 2]>,
    /// `E(Q_{n+1} − Q_n)` at each sampled `n < path length`.
    pub increments: Vec<(usize, Estimate)>,
    /// Largest relative reconstruction error seen on any path.
    pub max_reconstruction_error: f64,
}

#[derive(Clone, Debug, Default)]
struct PathSums {
    step: Vec<[MeanAccumulator; 4]>,
    eps: Vec<[MeanAccumulator; 2]>,
    inc: Vec<MeanAccumulator>,
    worst: f64,
    count: u64,
}

impl PathSums {
    fn new(marginal: usize, samples: usize) -> Self {
        Self {
            step: vec![Default::default(); marginal],
            eps: vec![Default::default(); samples],
            inc: vec![Default::default(); samples],
            worst: 0.0,
            count: 0,
        }
    }

    fn merge(&mut self, other: &PathSums) {
        for (a, b) in self.step.iter_mut().zip(&other.step) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.eps.iter_mut().zip(&other.eps) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.inc.iter_mut().zip(&other.inc) {
            a.merge(b);
        }
        self.worst = self.worst.max(other.worst);
        self.count += other.count;
    }
}

/// Runs `replicates` paths of length `n` and collects marginal step moments
/// for the first `marginal_steps` steps, `|ε|` moments and martingale
/// increments at `sample_ns`, and the worst reconstruction error.
pub fn path_statistics(
    dist: &StepDistribution,
    mp: &MemoryParameter<f64>,
    n: usize,
    replicates: u64,
    master_seed: u64,
    marginal_steps: usize,
    sample_ns: &[usize],
) -> Result<PathStatistics> {
    dist.validate()?;
    if n == 0 || marginal_steps > n || sample_ns.iter().any(|&k| k == 0 || k > n) {
        return Err(Error::Checkpoints(format!(
            "sampled steps must lie in [1, {n}] (marginal_steps = {marginal_steps}, samples = {sample_ns:?})"
        )));
    }
    let raw: RawMoments<f64> = dist.raw_moments();
    let alpha = mp.alpha();
    let scales = MartingaleScales::new(alpha, n);
    let chunks: Vec<Range<u64>> = (0..replicates)
        .step_by(256)
        .map(|s| s..(s + 256).min(replicates))
        .collect();

    let total = chunks
        .into_par_iter()
        .map(|chunk| {
            let mut sums = PathSums::new(marginal_steps, sample_ns.len());
            let mut walk = ElephantWalk::with_capacity(dist, mp, n);
            let mut eps_at = Vec::with_capacity(n + 1);
            for i in chunk {
                walk.reset();
                eps_at.clear();
                eps_at.push(0.0);
                let mut rng = replicate_rng(master_seed, i);
                let mut s_prev = 0.0;
                let mut q_sum = 0.0;
                let mut magnitude = 0.0f64;
                for k in 1..=n {
                    let x = walk.step(&mut rng);
                    if k <= marginal_steps {
                        let mut xp = x;
                        for acc in sums.step[k - 1].iter_mut() {
                            acc.add(xp);
                            xp *= x;
                        }
                    }
                    let s = walk.position() - k as f64 * raw.m1;
                    let eps = if k == 1 {
                        x - raw.m1
                    } else {
                        s - (1.0 + alpha / (k - 1) as f64) * s_prev
                    };
                    eps_at.push(eps);
                    let a = scales.get(k);
                    q_sum += a * eps;
                    magnitude = magnitude.max((a * s).abs());
                    if magnitude > 0.0 {
                        sums.worst = sums.worst.max((q_sum - a * s).abs() / magnitude);
                    }
                    s_prev = s;
                }
                for (j, &k) in sample_ns.iter().enumerate() {
                    let e2 = eps_at[k] * eps_at[k];
                    sums.eps[j][0].add(e2);
                    sums.eps[j][1].add(e2 * e2);
                    if k < n {
                        sums.inc[j].add(scales.get(k + 1) * eps_at[k + 1]);
                    }
                }
                sums.count += 1;
            }
            sums
        })
        .reduce(
            || PathSums::new(marginal_steps, sample_ns.len()),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );

    Ok(PathStatistics {
        n,
        replicates: total.count,
        step_moments: total
            .step
            .iter()
            .map(|accs| [0, 1, 2, 3].map(|p| accs[p].estimate()))
            .collect(),
        sample_ns: sample_ns.to_vec(),
        epsilon_abs: total
            .eps
            .iter()
            .map(|a| [a[0].estimate(), a[1].estimate()])
            .collect(),
        increments: sample_ns
            .iter()
            .zip(&total.inc)
            .filter(|(k, _)| **k < n)
            .map(|(k, a)| (*k, a.estimate()))
            .collect(),
        max_reconstruction_error: total.worst,
    })
}

/// Empirical versus predicted conditional moments of the step after a
/// frozen prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationReport {
    pub n: usize,
    pub predicted: ConditionalMoments<f64>,
    /// Same order as [`ConditionalMoments::to_array`].
    pub empirical: [Estimate; 6],
}

impl ContinuationReport {
    pub fn z_scores(&self) -> [f64; 6] {
        let pred = self.predicted.to_array();
        std::array::from_fn(|i| self.empirical[i].z_score(pred[i]))
    }
}

/// Samples `continuations` independent next steps after `prefix` and
/// compares their moments with [`conditional_step_moments`].
pub fn conditional_continuation_test(
    prefix: &WalkState,
    dist: &StepDistribution,
    mp: &MemoryParameter<f64>,
    continuations: u64,
    seed: u64,
) -> Result<ContinuationReport> {
    if prefix.n == 0 {
        return Err(Error::Domain(
            "continuation needs a prefix of at least one step".into(),
        ));
    }
    dist.validate()?;
    let ms: MomentSet<f64> = dist.moment_set();
    let walk = ElephantWalk::from_prefix(dist, mp, &prefix.steps);
    let predicted = conditional_step_moments(&walk.centered(&ms.raw()), prefix.n, &ms, mp);

    let chunks: Vec<Range<u64>> = (0..continuations)
        .step_by(4096)
        .map(|s| s..(s + 4096).min(continuations))
        .collect();
    let sums = chunks
        .into_par_iter()
        .map(|chunk| {
            let mut accs: [MeanAccumulator; 6] = Default::default();
            for i in chunk {
                let mut rng = replicate_rng(seed, i);
                let x = walk.propose(&mut rng);
                let c = x - ms.m1;
                let sq = x * x - ms.m2;
                let values = [c, c * c, c * c * c, sq, sq * c, x * x * x - ms.m3];
                for (a, v) in accs.iter_mut().zip(values) {
                    a.add(v);
                }
            }
            accs
        })
        .reduce(Default::default, |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
            a
        });

    Ok(ContinuationReport {
        n: prefix.n,
        predicted,
        empirical: std::array::from_fn(|i| sums[i].estimate()),
    })
}
