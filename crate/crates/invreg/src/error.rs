//! Error type shared across the crate.

use std::fmt;

use crate::solvers::SolveReport;

/// Errors produced by solvers, model assembly and experiment I/O.
#[derive(Debug)]
pub enum Error {
    /// A vector or matrix had the wrong length for the requested operation.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A dense factorization found the matrix singular to working precision.
    SingularMatrix(&'static str),
    /// An iterative solver failed to converge and the caller required convergence.
    SolverFailure {
        context: String,
        report: SolveReport,
    },
    /// Invalid configuration value or unparseable config file.
    InvalidConfig(String),
    /// A driver could not establish or maintain its bracket.
    BracketFailure(String),
    /// File I/O while reading or writing experiment artifacts.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in {context}: expected {expected}, found {found}"
            ),
            Error::SingularMatrix(context) => {
                write!(f, "matrix singular to working precision in {context}")
            }
            Error::SolverFailure { context, report } => write!(
                f,
                "linear solver did not converge in {context}: {} iterations, residual {:.3e}",
                report.iterations, report.final_residual_norm
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::BracketFailure(msg) => write!(f, "bracketing failure: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
