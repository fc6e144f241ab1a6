//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A state contains a non-finite coefficient, or an operation produced one.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Statistical estimator had no usable samples.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// Time grids that must align do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Numerical non-finiteness during time stepping. Carries the last index
    /// at which the state was still finite. Distinct from a blow-up
    /// announcement, which is a recorded event, not an error.
    #[error("numerical blow-up after step {last_valid_index}")]
    NumericalBlowup { last_valid_index: usize },

    /// A required precondition (e.g. a verification pass) has not been met.
    #[error("precondition not met: {0}")]
    Precondition(String),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
