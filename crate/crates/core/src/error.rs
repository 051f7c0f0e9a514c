use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mixture model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("second-order system is unstable: spectral radius of V*A is {spectral_radius:.6}")]
    Unstable { spectral_radius: f64 },

    #[error("linear solve failed: {reason} (lambda = {lambda:e}, n = {n}, d = {d})")]
    SolveFailed {
        reason: String,
        lambda: f64,
        n: usize,
        d: usize,
    },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("no feasible cell in the search grid")]
    InfeasibleGrid,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidModel(_) | Error::InvalidConfig(_) | Error::InfeasibleGrid => {
                ErrorCategory::Usage
            }
            Error::DimensionMismatch { .. }
            | Error::InvalidData(_)
            | Error::Csv { .. }
            | Error::Io(_) => ErrorCategory::Data,
            Error::NoConvergence { .. }
            | Error::Unstable { .. }
            | Error::SolveFailed { .. }
            | Error::Numerical(_) => ErrorCategory::Numerical,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Csv {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}
