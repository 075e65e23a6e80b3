use thiserror::Error;

pub type Result<T> = std::result::Result<T, OpeError>;

#[derive(Debug, Error)]
pub enum OpeError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("self-normalization degenerate at t={t}: all weights are zero")]
    DegenerateNormalization { t: usize },

    #[error("estimator {estimator} produced a non-finite estimate for policy {policy}")]
    NonFiniteEstimate { estimator: String, policy: String },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported dataset version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("dataset checksum mismatch: header {expected}, content {actual}")]
    Checksum { expected: String, actual: String },

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl OpeError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        OpeError::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        OpeError::Shape(msg.into())
    }
}
