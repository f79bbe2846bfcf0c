use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input")]
    Empty,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid value at index {index}: {reason}")]
    InvalidValue { index: usize, reason: String },

    #[error("zero-spread sample")]
    ZeroSpread,

    #[error("asymmetric distance matrix: S[{i},{j}]={a} but S[{j},{i}]={b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("negative distance {value} at ({i},{j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },

    #[error("correlation {value} outside [-1, 1] at ({i},{j})")]
    CorrelationOutOfRange { i: usize, j: usize, value: f64 },

    #[error("covariance matrix is singular even after ridge regularisation")]
    SingularCovariance,

    #[error("OLS underdetermined: n={n} observations for {p} coefficients (need n > m + 1)")]
    Underdetermined { n: usize, p: usize },

    #[error("{what} is not available for the {design} design")]
    Unsupported { what: String, design: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Errors caused by malformed or inconsistent input data, as opposed to
    /// bad configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::Empty
                | Error::InvalidValue { .. }
                | Error::ZeroSpread
                | Error::Asymmetric { .. }
                | Error::NegativeDistance { .. }
                | Error::CorrelationOutOfRange { .. }
                | Error::SingularCovariance
                | Error::Parse { .. }
                | Error::Io { .. }
        )
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
