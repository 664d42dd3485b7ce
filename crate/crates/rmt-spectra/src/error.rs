//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by
//! failure class rather than by module: callers mostly care whether a
//! failure is a caller mistake (`Validation`, `Dimension`), a numerical
//! breakdown (`Numerical`, `Training`), a resource guard (`Resource`),
//! or an I/O / serialization problem.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration value.
    #[error("validation error: {0}")]
    Validation(String),

    /// Matrix or dataset dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical error at index {index}: {message}")]
    Numerical { index: usize, message: String },

    /// Training diverged (non-finite loss).
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Training { epoch: usize, loss: f64 },

    /// A guard against excessive memory or runtime was hit.
    #[error("resource guard: {0}")]
    Resource(String),

    /// A CSV or JSON record could not be interpreted.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Shorthand used throughout the crate.
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
