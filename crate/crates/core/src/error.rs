use thiserror::Error;

/// Which density-matrix property an invariant check rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    Trace,
    Hermiticity,
    Positivity,
}

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Invariant::Trace => "unit trace",
            Invariant::Hermiticity => "hermiticity",
            Invariant::Positivity => "positive semidefiniteness",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid filling: {n_bosons} bosons on {n_sites} sites")]
    InvalidFilling { n_sites: usize, n_bosons: usize },

    #[error("occupation pattern {pattern:?} does not match basis ({reason})")]
    PatternMismatch { pattern: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem: L_A = {l_a} must satisfy 0 < L_A < {n_sites}")]
    InvalidSubsystem { l_a: usize, n_sites: usize },

    #[error("post-selection weight {weight:e} fell below {threshold:e}")]
    DenominatorVanished { weight: f64, threshold: f64 },

    #[error("{invariant} violated at step {step}: deviation {deviation:e}")]
    InvariantViolation {
        step: usize,
        invariant: Invariant,
        deviation: f64,
    },

    #[error("purity {0:e} is not positive")]
    NonPositivePurity(f64),

    #[error("swap trace {re:e}{im:+e}i is not a positive real number")]
    NonPositiveSwapTrace { re: f64, im: f64 },

    #[error("jump channel {channel} annihilated the state")]
    ZeroNormAfterJump { channel: usize },

    #[error("records have mismatched time grids")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
