use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown domain preset `{0}`")]
    UnknownPreset(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("grid needs at least 4 nodes per axis, axis {axis} has {nodes}")]
    GridTooSmall { axis: usize, nodes: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("weight profile violates its invariants: {0}")]
    ProfileInvariant(String),

    #[error("epsilon too large for horizon T: delta_2 = {delta2} but T/2 = {half_horizon}")]
    EpsilonTooLarge { delta2: f64, half_horizon: f64 },

    #[error("empty admissible interval for beta: ({lower}, {upper})")]
    EmptyBetaInterval { lower: f64, upper: f64 },

    #[error("inconsistent parameter set: mu_0 = {0} is not positive")]
    NonPositiveMu0(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid source parameters: {0}")]
    InvalidSource(String),

    #[error("data tier {requested} is not available: {reason}")]
    TierUnavailable { requested: String, reason: String },

    #[error("discretization inconsistency: right-hand side vanishes while left-hand side is {0}")]
    DegenerateRhs(f64),

    #[error("field is not compactly supported: max boundary magnitude {0}")]
    NotCompactlySupported(f64),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
