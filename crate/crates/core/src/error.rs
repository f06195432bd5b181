use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields (or a field and a symbol) live on different lattices.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid lattice, potential, or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Picard iteration failed to reach the tolerance.
    #[error("fixed-point iteration did not contract after {iterations} iterations (last residual {residual:e})")]
    NonContraction { iterations: usize, residual: f64 },

    #[error("dense oracle refused: {sites} sites exceeds the cap of {cap}")]
    SizeCap { sites: usize, cap: usize },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}
