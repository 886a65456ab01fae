//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// State/matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A configuration is incomplete or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A feasibility condition of a rate certificate fails.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The operation is declared but intentionally unimplemented.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// An optimizer or Lyapunov certificate could not be produced.
    #[error("certification failed: {0}")]
    Certification(String),

    /// A size budget (e.g. the transport cost-matrix budget) is exceeded.
    #[error("size budget exceeded: {0}")]
    SizeBudget(String),

    /// NaN or infinity showed up where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
