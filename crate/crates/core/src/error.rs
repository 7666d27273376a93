use thiserror::Error;

/// Errors raised by builders, solvers and analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} with {n_sites} sites exceeds the configured cap of {cap}")]
    TooLarge {
        what: &'static str,
        n_sites: usize,
        cap: usize,
    },

    #[error("stationary state is not unique: {0}")]
    DegenerateKernel(String),

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("profile is not unimodal: {message}")]
    NonUnimodal {
        message: String,
        scan: Vec<(f64, f64)>,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
