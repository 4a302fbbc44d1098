use thiserror::Error;

/// Errors raised by the simulator and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("unsupported operator: {0}")]
    UnsupportedOperator(String),

    #[error("resource ceiling exceeded: {0}")]
    ResourceCeiling(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("disconnected coupling graph")]
    DisconnectedGraph,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
