//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates a structural requirement.
    #[error("configuration error: {0}")]
    Config(String),

    /// An internal quantity left its admissible range; indicates a bug or
    /// numerically divergent state, not a user error.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Malformed input while reading back emitted files.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
