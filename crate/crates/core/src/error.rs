use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for a {order}-way tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("invalid observation set: {0}")]
    InvalidObservations(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("negative threshold {0}")]
    NegativeThreshold(f64),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("detected rank is zero in mode {0}")]
    EmptyModel(usize),

    #[error("non-finite intermediate in {0}")]
    NumericalFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
