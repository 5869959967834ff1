use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    Asymmetric(f64),

    #[error("factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("{0}")]
    InvalidData(String),

    #[error("operation requires a classification model")]
    NotClassification,
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    /// Whether the failure is numerical rather than caused by bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Factorization { .. } | Error::Asymmetric(_))
    }
}
