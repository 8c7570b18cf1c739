use thiserror::Error;

/// Errors produced by the tensor-train tomography toolkit.
#[derive(Error, Debug)]
pub enum Error {
    /// Tensor or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A dense representation would exceed the desk-scale capacity guard.
    #[error("capacity guard exceeded: {0}")]
    Capacity(String),

    /// An input failed validation (bad probabilities, non-unit state, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// The iterative solver diverged.
    #[error("solver diverged at iteration {iteration} (loss {loss:.6e})")]
    Divergence { iteration: usize, loss: f64 },

    /// A tabular operation needed columns that are absent.
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
