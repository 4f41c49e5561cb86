//! Crate-wide error type.

/// Errors reported by the numeric and measure-construction layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Gamma function evaluated at a pole (a non-positive integer).
    #[error("gamma pole at {0}")]
    Pole(String),
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Structurally invalid argument (ordering, state space, grids).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Sampling requested from a measure that is not a probability measure.
    #[error("measure is not normalized")]
    NotNormalized,
    /// An iterative scheme failed its convergence check.
    #[error("convergence failure: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
