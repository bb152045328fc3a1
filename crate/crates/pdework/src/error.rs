//! Error taxonomy shared across the workbench.

use thiserror::Error;

/// Workbench-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside an operation's documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Matrix, vector, or network shapes do not line up.
    #[error("structural mismatch: {0}")]
    Structural(String),
    /// A pivot collapsed below tolerance during factorization.
    #[error("singular system: {0}")]
    SingularSystem(String),
    /// An input violated a solver's mathematical precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A computation produced non-finite or otherwise unusable values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Mesh construction produced degenerate geometry.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Run configuration is inconsistent or incomplete.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
