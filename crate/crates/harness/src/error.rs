//! Harness error type with the process exit codes it maps to.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration (file, flag, or cross-field validation).
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Numerical failure surfaced by the core library.
    #[error(transparent)]
    Core(#[from] otca_core::Error),

    /// Numerical failure detected by the harness itself (divergence, NaN).
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl HarnessError {
    /// CLI exit code: 1 for configuration problems, 2 for numerical ones.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 1,
            HarnessError::Core(_) | HarnessError::Numeric(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
