use thiserror::Error;

use crate::solve::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

/// Indices are stored 0-based but shown 1-based.
fn one_based(index: &[usize]) -> String {
    let parts: Vec<String> = index.iter().map(|k| (k + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("entry {} is negative ({value})", one_based(index))]
    NegativeEntry { index: Vec<usize>, value: f64 },

    #[error("entry {} is not finite", one_based(index))]
    NonFinite { index: Vec<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("scale factors must be strictly positive (got {0})")]
    NonPositiveScale(f64),

    #[error("zero matrix has rank 0")]
    ZeroInput,

    #[error("matrix is not symmetric: |A({},{}) - A({},{})| = {diff}", i + 1, j + 1, j + 1, i + 1)]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig})")]
    NotPsd { min_eig: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exact search: {what} has size {size}, cap is {cap}")]
    TooLarge { what: &'static str, size: usize, cap: usize },

    #[error("solver did not certify a bound: status {0}")]
    Solver(SolveStatus),

    #[error("invalid conic problem: {0}")]
    InvalidProblem(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
