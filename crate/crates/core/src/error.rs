use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension n = {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("no ground state: lambda = {lambda} >= (n-1)^2/4 = {threshold}")]
    NoGroundState { lambda: f64, threshold: f64 },

    #[error("shooting search failed: {0}")]
    SearchFailure(String),

    #[error("inner nonlinear solve failed at t = {t}")]
    InnerSolveFailure { t: f64 },

    #[error("mass-constrained minimum does not exist for p >= 1 + 4/n (p = {p}, n = {n})")]
    MassSupercritical { p: f64, n: usize },

    #[error("spectral analysis is only implemented for n = 3 (got n = {0})")]
    SpectralDimension(usize),

    #[error("diagnostic series too short: {got} records, need at least {need}")]
    TooFewRecords { got: usize, need: usize },

    #[error("virial check requires completed run")]
    RunNotCompleted,

    #[error("corrupt ground-state file: {0}")]
    CorruptGroundState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
