use thiserror::Error;

use crate::poly::Var;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("no value supplied for coordinate {0}")]
    MissingCoordinate(Var),
    #[error("point has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid relaxation order: {0}")]
    Order(String),
    #[error("malformed conic program: {0}")]
    Conic(String),
    #[error("extraction failed: {0}")]
    Extraction(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
