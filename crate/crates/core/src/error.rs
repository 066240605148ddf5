//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the core numeric routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector with zero norm was passed where a direction is required.
    #[error("degenerate latent: zero-norm vector")]
    DegenerateLatent,

    /// The final latent of a trajectory has zero norm, so alignment toward
    /// it is undefined.
    #[error("degenerate trajectory: final latent has zero norm")]
    DegenerateTrajectory,

    /// An input that must vary is constant.
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("{what}: need at least {needed} values, got {got}")]
    TooFewValues {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A temporal weight floor that cannot be satisfied after renormalization.
    #[error("infeasible weight floor w_min={0}")]
    InfeasibleFloor(f64),

    /// Log-density of a deterministic (zero-std) transition was requested.
    #[error("step is not stochastic (std = 0)")]
    NotStochastic,

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
