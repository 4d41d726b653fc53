//! Error type shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed FCIDUMP input. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite values, non-hermitian residue and similar numerical faults.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A one- or two-parameter screening optimization failed.
    #[error("screening error: {0}")]
    Screening(String),

    /// Ansatz assembly rejected its inputs.
    #[error("construction error: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
