use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lambda {0} is outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("toy matrix has no nonzero entries; cannot derive a scaling factor")]
    DegenerateToy,

    #[error("exhaustive enumeration refused for n = {n}: at most {max} variables are supported")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("excess is undefined for an optimum of 0")]
    ZeroOptimum,

    #[error("parse error at line {line}, token {token:?}: {message}")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
