use alloc::string::String;

/// Errors raised by the modal toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The time step cannot resolve the fastest retained mode.
    #[error("time step too coarse: lambda * dt = {product:.4} exceeds {limit} (lambda = {lambda:.6e}, dt = {dt:.3e})")]
    Unresolved {
        lambda: f64,
        dt: f64,
        product: f64,
        limit: f64,
    },

    /// The Gram matrix is singular or indefinite beyond tolerance.
    #[error(
        "degenerate Gram matrix: minimum eigenvalue {min_eig:.6e} <= threshold {threshold:.6e}"
    )]
    GramDegenerate { min_eig: f64, threshold: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
