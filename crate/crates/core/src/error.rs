use thiserror::Error;

/// Errors raised across the transceiver, channel and analysis code.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition (length, range, count).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A channel model cannot be realized under the configured numerology.
    #[error("invalid channel model: {0}")]
    Model(String),

    /// No preamble correlation peak above the detection threshold.
    #[error("packet not detected (best metric {metric:.3}, threshold {threshold:.3})")]
    NotDetected { metric: f64, threshold: f64 },

    /// Channel or phase estimation could not produce a usable estimate.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Malformed key file or key vector.
    #[error("invalid key: {0}")]
    Key(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
