//! Experiment harness: configuration, the GRPO training loop with
//! credit-assignment ablation switches, metric logging, ablation tables,
//! curve export, and proxy validation.

pub mod ablate;
pub mod config;
pub mod curves;
pub mod error;
pub mod metrics;
pub mod runner;

pub use config::{ExperimentConfig, Variant};
pub use error::{HarnessError, Result};
