use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("trace row {row}: {reason}")]
    TraceRow { row: usize, reason: String },

    #[error("power flow did not converge after {iterations} iterations (residual {residual:.3e} pu)")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("length mismatch: expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("no active samples: all {candidates} candidate samples fell below the power threshold")]
    NoActiveSamples { candidates: usize },

    #[error("simulation aborted at t = {t:.6} s: {source}; last state: {state}")]
    StepFailure {
        t: f64,
        state: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
