//! Error type shared by every module.

use thiserror::Error;

/// Everything that can go wrong while building a configuration or evaluating a quantity.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cavity damping rate must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("feedback delay must be non-negative, got {0}")]
    InvalidTau(f64),
    #[error("detection efficiency must lie in (0, 1], got {0}")]
    InvalidEta(f64),
    #[error("parameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("time must be non-negative and finite, got {0}")]
    InvalidTime(f64),
    #[error("series term {index} overflows direct summation; use log-domain summation")]
    SeriesOverflow { index: usize },
    #[error("delay series needs {needed} terms, above the cap of {cap}")]
    TermCapExceeded { needed: usize, cap: usize },
    #[error("oracle step {dx} is too large for delay {y} (need dx <= y/4)")]
    StepTooLarge { dx: f64, y: f64 },
    #[error("oracle step {dx} does not subdivide delay {y} into whole steps")]
    StepNotCommensurate { dx: f64, y: f64 },
    #[error("adaptive quadrature failed to converge on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("phase convention requires phi = 0, got {0}")]
    PhaseConvention(f64),
    #[error("time {t} lies outside the early segment [0, 2 tau] = [0, {limit}]")]
    OutsideEarlySegment { t: f64, limit: f64 },
    #[error("zero-delay trajectories require tau = 0, got {0}")]
    NonZeroDelay(f64),
    #[error("Fock truncation leak: top population {population:e} exceeds 1e-8 of the norm at t = {t}")]
    TruncationLeak { population: f64, t: f64 },
    #[error("state has no terms")]
    EmptyState,
    #[error("state cannot be normalised (squared norm {0})")]
    Unnormalisable(f64),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
