use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("local block of subdomain {center} is not positive definite (pivot {pivot})")]
    SingularSubdomain { center: usize, pivot: usize },

    #[error(
        "quadrature failure at degree {degree}: coefficient {value:e} is not finite and positive"
    )]
    QuadratureFailure { degree: usize, value: f64 },

    #[error("Lanczos breakdown at iteration {iteration} with residual {residual:e}")]
    Breakdown { iteration: usize, residual: f64 },

    #[error(
        "preconditioner is not positive definite: <r, M^-1 r> = {value:e} at iteration {iteration}"
    )]
    IndefinitePreconditioner { iteration: usize, value: f64 },

    #[error(
        "Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})"
    )]
    EigenNoConvergence { sweeps: usize, off: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
