//! Monte Carlo realization of the elephant random walk.
//!
//! Every replicate owns a ChaCha8 stream selected by `(master_seed,
//! replicate)`, so any replicate can be regenerated in isolation and batch
//! results do not depend on how replicates are scheduled.

mod batch;
mod diagnostics;
mod walk;

pub use batch::{
    empirical_q_moments, simulate_batch, simulate_replicates, write_q_moments_csv,
    BatchAccumulator, CheckpointSums, QMomentEstimate, MAX_POWER, Q_CSV_HEADER,
};
pub use diagnostics::{
    conditional_continuation_test, martingale_diagnostics, path_statistics, ContinuationReport,
    Estimate, MartingaleView, MeanAccumulator, PathStatistics, RECONSTRUCTION_TOLERANCE,
};
pub use walk::{simulate_path, ElephantWalk, MartingaleScales, WalkState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type WalkRng = ChaCha8Rng;

/// Generator for replicate `replicate` of a run seeded with `master_seed`.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> WalkRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Uniform index in `0..len` from one 64-bit draw (Lemire's multiply-shift,
/// no rejection so the draw count per step is fixed).
#[inline]
pub(crate) fn uniform_index(word: u64, len: usize) -> usize {
    ((word as u128 * len as u128) >> 64) as usize
}

/// Accepts `123`, `0x7b` or `0X7B`.
pub fn parse_seed(text: &str) -> Result<u64, std::num::ParseIntError> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    }
}
