use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid step distribution: {0}")]
    InvalidDistribution(String),

    #[error("inconsistent raw moments: centered second moment {central2:e} is negative")]
    InconsistentMoments { central2: f64 },

    #[error("memory parameter {0} is outside [0, 1]")]
    InvalidMemory(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular formula at alpha = {alpha}: denominator {denominator} vanishes")]
    Singular {
        denominator: &'static str,
        alpha: f64,
    },

    #[error("alpha = {alpha} is not superdiffusive; the limit Q exists only for alpha > 1/2")]
    NotSuperdiffusive { alpha: f64 },

    #[error(
        "enumeration too large: n = {n}, support size = {support} (limits n <= 8, support <= 4)"
    )]
    SizeGuard { n: usize, support: usize },

    #[error("invalid checkpoints: {0}")]
    Checkpoints(String),

    #[error("martingale reconstruction mismatch at n = {n}: relative error {rel_error:e}")]
    Reconstruction { n: usize, rel_error: f64 },

    #[error("malformed distribution descriptor: {0}")]
    Descriptor(String),
}
