use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not on the manifold: {0}")]
    OffManifold(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("all level coefficients are zero")]
    DegenerateLevels,

    #[error("Dobrushin condition violated: |J|_op = {0} >= 1")]
    Dobrushin(f64),

    #[error("numerically singular Gram matrix (min eigenvalue {0:e})")]
    Singular(f64),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Decode(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
