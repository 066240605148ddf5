//! Objective-aware trajectory credit assignment (OTCA) for group-relative
//! policy optimization over a toy flow-matching generative policy.
//!
//! The crate is organized around the stages of one training step:
//!
//! - [`numerics`]: seeded randomness, vector kernels, and the statistics
//!   (Pearson/Spearman, population moments) everything else builds on.
//! - [`flow`]: a small velocity-field network, the deterministic ODE sampler
//!   and its stochastic SDE counterpart with per-step Gaussian transition
//!   densities and exact parameter gradients.
//! - [`tcd`]: trajectory-level credit decomposition — per-timestep weights
//!   from the growth of cosine alignment between intermediate latents and
//!   the final denoised latent.
//! - [`moca`]: multi-objective credit allocation — a closed-form solver for
//!   the exploration-biased quadratic over the probability simplex that
//!   fuses per-objective advantages into one scalar per sample.
//! - [`grpo`]: group-relative advantage normalization, effective-advantage
//!   assembly, and the clipped policy surrogate with its gradient.
//! - [`rewards`]: synthetic, deliberately conflicting reward objectives over
//!   generated samples.
//! - [`proxy`]: correlation and localization metrics validating the
//!   alignment-delta profile as a proxy for per-step reward improvement.

pub mod error;
pub mod flow;
pub mod grpo;
pub mod moca;
pub mod numerics;
pub mod proxy;
pub mod rewards;
pub mod tcd;

pub use error::{Error, Result};
