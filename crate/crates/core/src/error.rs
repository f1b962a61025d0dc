use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("interferer index {index} out of range ({count} interferers)")]
    InterfererIndex { index: usize, count: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("sampling rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero {0} signal")]
    ZeroSignal(&'static str),

    #[error("target SINR0 of {target_db} dB is unreachable with the given noise")]
    UnreachableSinr0 { target_db: f64 },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("empty signal")]
    EmptySignal,

    #[error("malformed signal file: {0}")]
    Malformed(String),

    #[error("singular value decomposition failed to converge")]
    Svd,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
