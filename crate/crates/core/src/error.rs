//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at step {step}: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        step: usize,
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("non-symmetric Q at step {step}")]
    NonSymmetricNoise { step: usize },

    #[error("non-PSD Q at step {step} (min pivot {min_pivot:e})")]
    NonPsdNoise { step: usize, min_pivot: f64 },

    #[error("non-PSD initial covariance (min pivot {min_pivot:e})")]
    NonPsdInit { min_pivot: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("diffuse initial values required for simulation: expected {expected} values, got {got}")]
    DiffuseInitUnset { expected: usize, got: usize },

    #[error("insufficient data to absorb diffuse dimensions: absorbed {absorbed} of {needed}")]
    InsufficientDiffuseData { absorbed: usize, needed: usize },

    #[error("numerically singular innovation variance at step {step}, observation {obs}")]
    SingularInnovation { step: usize, obs: usize },

    #[error("covariance diagonal went negative at step {step} (value {value:e})")]
    NegativeVariance { step: usize, value: f64 },

    #[error("{family} curve evaluated to a non-finite value at t = {t}")]
    NonFiniteCurve { family: &'static str, t: f64 },

    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),

    #[error("selector length {got} does not match state dimension {expected}")]
    SelectorLength { expected: usize, got: usize },

    #[error("operation requires a parametric fit (sigma2_eta must be zero)")]
    NotParametric,

    #[error("operation requires a fit with random-walk deviations")]
    NotFme,

    #[error("confidence level {0} outside (0, 1)")]
    LevelOutOfRange(f64),

    #[error("grid is not uniform: spacing varies at index {index}")]
    GridNotUniform { index: usize },

    #[error("series grids do not match: {0}")]
    GridMismatch(String),

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("effective sample size {n_used} does not exceed diffuse count {d}")]
    SampleTooSmall { n_used: usize, d: usize },

    #[error("no likelihood is finite at any starting point")]
    NoFiniteStart,

    #[error("all candidate fits failed: {0}")]
    AllCandidatesFailed(String),

    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("line {line}: duplicate (group, replicate, time) record")]
    DuplicateRecord { line: usize },

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for usage/input problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InsufficientDiffuseData { .. }
            | Error::SingularInnovation { .. }
            | Error::NegativeVariance { .. }
            | Error::NonFiniteCurve { .. }
            | Error::NoFiniteStart
            | Error::AllCandidatesFailed(_)
            | Error::SampleTooSmall { .. }
            | Error::NonPsdNoise { .. }
            | Error::NonPsdInit { .. } => 2,
            _ => 1,
        }
    }
}
