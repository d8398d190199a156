use alloc::string::String;

/// Failures raised by the matching core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e}, allowed {threshold:e})")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },
    #[error("instance too large for exhaustive search: {rows}x{cols} (limit {max_rows}x{max_cols})")]
    TooLarge {
        rows: usize,
        cols: usize,
        max_rows: usize,
        max_cols: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
