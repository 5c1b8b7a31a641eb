use thiserror::Error;

/// Errors raised by the approximation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// An index lies outside the materialized window.
    #[error("index out of range: {0}")]
    Range(String),

    /// A numerical configuration cannot deliver the requested accuracy.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two objects live on different spectral grids.
    #[error("grid mismatch: {left} nodes vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    /// The finite-section Gram matrix failed the positive-definiteness check.
    #[error("Gram matrix is not positive definite (smallest eigenvalue {smallest:e}); eigenvalues: {eigenvalues:?}")]
    NotPositiveDefinite { smallest: f64, eigenvalues: Vec<f64> },

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn range(msg: impl Into<String>) -> Error {
    Error::Range(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
