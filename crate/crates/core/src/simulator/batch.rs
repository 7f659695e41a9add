use std::io::{self, Write};
use std::ops::Range;

use rayon::prelude::*;

use super::{replicate_rng, ElephantWalk};
use crate::distributions::{RawMoments, StepDistribution};
use crate::error::{Error, Result};
use crate::exact_sum::ExactSum;
use crate::moments::MemoryParameter;

/// Highest power of `S̃_n` accumulated; twice the highest estimated moment
/// so that fourth-moment standard errors are available.
pub const MAX_POWER: usize = 8;

/// Replicates handled by one task. Results do not depend on it.
const CHUNK: u64 = 512;

/// Exact power sums of `S̃_n` over replicates at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointSums {
    pub n: usize,
    pub count: u64,
    /// `power_sums[p − 1] = Σ S̃_n^p`.
    pub power_sums: Vec<ExactSum>,
}

impl CheckpointSums {
    fn new(n: usize) -> Self {
        Self {
            n,
            count: 0,
            power_sums: vec![ExactSum::new(); MAX_POWER],
        }
    }

    fn record(&mut self, s_tilde: f64) {
        self.count += 1;
        let mut x = s_tilde;
        for sum in self.power_sums.iter_mut() {
            sum.add(x);
            x *= s_tilde;
        }
    }

    /// `Σ S̃^p / count`.
    pub fn mean_power(&self, p: usize) -> f64 {
        self.power_sums[p - 1].value() / self.count as f64
    }
}

/// Monte Carlo power sums at a fixed set of checkpoints.
///
/// Sums are exact, so [`merge`](Self::merge) is associative and commutative
/// bit for bit: any partition of the replicates gives the same accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchAccumulator {
    pub checkpoints: Vec<usize>,
    pub cells: Vec<CheckpointSums>,
}

impl BatchAccumulator {
    pub fn new(checkpoints: &[usize]) -> Self {
        Self {
            checkpoints: checkpoints.to_vec(),
            cells: checkpoints
                .iter()
                .map(|&n| CheckpointSums::new(n))
                .collect(),
        }
    }

    pub fn replicates(&self) -> u64 {
        self.cells.first().map_or(0, |c| c.count)
    }

    pub fn merge(&mut self, other: &BatchAccumulator) {
        assert_eq!(
            self.checkpoints, other.checkpoints,
            "checkpoint sets differ"
        );
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.count += b.count;
            for (x, y) in a.power_sums.iter_mut().zip(&b.power_sums) {
                x.merge(y);
            }
        }
    }
}

fn check_checkpoints(n: usize, checkpoints: &[usize]) -> Result<()> {
    if n == 0 {
        return Err(Error::Checkpoints("path length must be at least 1".into()));
    }
    if checkpoints.is_empty() {
        return Err(Error::Checkpoints("no checkpoints given".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Checkpoints(format!(
            "checkpoints must be strictly increasing: {checkpoints:?}"
        )));
    }
    if checkpoints[0] == 0 || *checkpoints.last().unwrap() > n {
        return Err(Error::Checkpoints(format!(
            "checkpoints must lie in [1, {n}]: {checkpoints:?}"
        )));
    }
    Ok(())
}

/// Simulates replicates `range` (indices into the `master_seed` stream
/// family) and accumulates `S̃` powers at each checkpoint.
pub fn simulate_replicates(
    dist: &StepDistribution,
    mp: &MemoryParameter<f64>,
    n: usize,
    master_seed: u64,
    range: Range<u64>,
    checkpoints: &[usize],
) -> Result<BatchAccumulator> {
    dist.validate()?;
    check_checkpoints(n, checkpoints)?;
    let moments: RawMoments<f64> = dist.raw_moments();

    let chunks: Vec<Range<u64>> = (range.start..range.end)
        .step_by(CHUNK as usize)
        .map(|s| s..(s + CHUNK).min(range.end))
        .collect();
    let parts: Vec<BatchAccumulator> = chunks
        .into_par_iter()
        .map(|chunk| {
            let mut acc = BatchAccumulator::new(checkpoints);
            let mut walk = ElephantWalk::with_capacity(dist, mp, n);
            for i in chunk {
                run_one(&mut walk, n, master_seed, i, &moments, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = BatchAccumulator::new(checkpoints);
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

fn run_one(
    walk: &mut ElephantWalk<'_>,
    n: usize,
    master_seed: u64,
    replicate: u64,
    moments: &RawMoments<f64>,
    acc: &mut BatchAccumulator,
) {
    walk.reset();
    let mut rng = replicate_rng(master_seed, replicate);
    let mut next = 0;
    for k in 1..=n {
        walk.step(&mut rng);
        if acc.checkpoints[next] == k {
            let s_tilde = walk.position() - k as f64 * moments.m1;
            acc.cells[next].record(s_tilde);
            next += 1;
            if next == acc.checkpoints.len() {
                break;
            }
        }
    }
}

/// `replicates` paths of length `n` seeded from `master_seed`.
///
/// Bit-identical for any thread count: replicate `i` always uses stream
/// `i`, and the power sums are exact.
pub fn simulate_batch(
    dist: &StepDistribution,
    mp: &MemoryParameter<f64>,
    n: usize,
    replicates: u64,
    master_seed: u64,
    checkpoints: &[usize],
) -> Result<BatchAccumulator> {
    simulate_replicates(dist, mp, n, master_seed, 0..replicates, checkpoints)
}

/// Estimate of `n^(−pα) E(S̃_n^p)` with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct QMomentEstimate {
    pub n: usize,
    pub p: usize,
    pub estimate: f64,
    /// NaN when fewer than two replicates are available.
    pub stderr: f64,
    pub n_replicates: u64,
    pub degenerate: bool,
}

/// Scaled moment estimates for `p = 1..=4` at every checkpoint.
pub fn empirical_q_moments(
    acc: &BatchAccumulator,
    mp: &MemoryParameter<f64>,
) -> Result<Vec<QMomentEstimate>> {
    if acc.replicates() == 0 {
        return Err(Error::Domain("accumulator holds no replicates".into()));
    }
    let alpha = mp.alpha();
    let mut out = Vec::with_capacity(acc.cells.len() * 4);
    for cell in &acc.cells {
        let count = cell.count as f64;
        for p in 1..=MAX_POWER / 2 {
            let scale = (cell.n as f64).powf(p as f64 * alpha);
            let mean = cell.mean_power(p);
            let degenerate = cell.count < 2;
            let stderr = if degenerate {
                f64::NAN
            } else {
                let second = cell.mean_power(2 * p);
                let var = ((second - mean * mean) * count / (count - 1.0)).max(0.0);
                (var / count).sqrt() / scale
            };
            out.push(QMomentEstimate {
                n: cell.n,
                p,
                estimate: mean / scale,
                stderr,
                n_replicates: cell.count,
                degenerate,
            });
        }
    }
    Ok(out)
}

pub const Q_CSV_HEADER: &str = "n,p,estimate,stderr,n_replicates";

pub fn write_q_moments_csv<W: Write>(out: &mut W, rows: &[QMomentEstimate]) -> io::Result<()> {
    writeln!(out, "{Q_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n, r.p, r.estimate, r.stderr, r.n_replicates
        )?;
    }
    Ok(())
}
