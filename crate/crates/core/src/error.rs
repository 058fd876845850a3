use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("no construction: {0}")]
    NoConstruction(String),
    #[error("incomplete candidate: {0}")]
    IncompleteCandidate(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inapplicable: {0}")]
    Inapplicable(String),
    #[error("extension failed on face {face}: {reason}")]
    Extension { face: String, reason: String },
    #[error("certificate violated: {0}")]
    Certificate(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
