//! Synthetic reward objectives over generated samples.
//!
//! The registry deliberately mixes heterogeneous, partially conflicting
//! objectives so multi-objective fusion has real work to do. Intermediate
//! trajectory states are scored on their one-step clean prediction; the
//! terminal state is scored as-is.

use crate::error::{Error, Result};
use crate::flow::{predict_final, VelocityField};
use crate::numerics::{cosine_similarity, ensure_finite, norm};
use crate::tcd::LatentTrajectory;

/// Functional form of one reward objective.
#[derive(Debug, Clone)]
pub enum RewardKind {
    /// Negative scaled distance to a target point: `-‖x - target‖ / scale`.
    ModeProximity { target: Vec<f64>, scale: f64 },
    /// Cosine alignment with a fixed axis; zero vectors score 0.
    DirectionAlignment { axis: Vec<f64> },
    /// Negative distance of the norm from a ring radius: `-| ‖x‖ - radius |`.
    NormPenalty { radius: f64 },
}

#[derive(Debug, Clone)]
pub struct RewardSpec {
    pub name: String,
    pub kind: RewardKind,
}

impl RewardSpec {
    pub fn mode_proximity(name: &str, target: Vec<f64>, scale: f64) -> Result<Self> {
        ensure_finite(&target, "reward target")?;
        if scale.is_nan() || scale <= 0.0 || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mode proximity scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            kind: RewardKind::ModeProximity { target, scale },
        })
    }

    pub fn direction_alignment(name: &str, axis: Vec<f64>) -> Result<Self> {
        ensure_finite(&axis, "reward axis")?;
        if norm(&axis) == 0.0 {
            return Err(Error::DegenerateLatent);
        }
        Ok(Self {
            name: name.to_string(),
            kind: RewardKind::DirectionAlignment { axis },
        })
    }

    pub fn norm_penalty(name: &str, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius < 0.0 || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "norm penalty radius must be nonnegative, got {radius}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            kind: RewardKind::NormPenalty { radius },
        })
    }
}

/// Score one point under one objective.
pub fn evaluate(spec: &RewardSpec, x: &[f64]) -> Result<f64> {
    ensure_finite(x, "reward input")?;
    Ok(match &spec.kind {
        RewardKind::ModeProximity { target, scale } => {
            if target.len() != x.len() {
                return Err(Error::ShapeMismatch(format!(
                    "reward '{}': target dim {} vs input {}",
                    spec.name,
                    target.len(),
                    x.len()
                )));
            }
            let dist: f64 = x
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            -dist / scale
        }
        RewardKind::DirectionAlignment { axis } => {
            if axis.len() != x.len() {
                return Err(Error::ShapeMismatch(format!(
                    "reward '{}': axis dim {} vs input {}",
                    spec.name,
                    axis.len(),
                    x.len()
                )));
            }
            if norm(x) == 0.0 {
                0.0 // defined limit at the origin
            } else {
                cosine_similarity(x, axis)?
            }
        }
        RewardKind::NormPenalty { radius } => -(norm(x) - radius).abs(),
    })
}

/// Score one point under every objective, in spec order.
pub fn evaluate_all(specs: &[RewardSpec], x: &[f64]) -> Result<Vec<f64>> {
    specs.iter().map(|s| evaluate(s, x)).collect()
}

/// Default desk-scale suite: two opposing attraction points plus a ring
/// penalty. No point maximizes all three at once.
pub fn default_suite() -> Vec<RewardSpec> {
    vec![
        RewardSpec::mode_proximity("near_right", vec![1.5, 0.0], 1.0).expect("valid"),
        RewardSpec::mode_proximity("near_left", vec![-1.5, 0.0], 1.0).expect("valid"),
        RewardSpec::norm_penalty("unit_ring", 1.0).expect("valid"),
    ]
}

/// Per-transition reward improvements along a trajectory: entry `[t][k]` is
/// objective `k` evaluated at the clean prediction of state `t+1` minus the
/// same at state `t`. The terminal state uses the exact final latent instead
/// of a prediction.
pub fn reward_delta_profile(
    traj: &LatentTrajectory,
    cond: usize,
    field: &impl VelocityField,
    specs: &[RewardSpec],
) -> Result<Vec<Vec<f64>>> {
    let states = traj.states();
    let times = traj.times();
    let last = states.len() - 1;
    let mut scores = Vec::with_capacity(states.len());
    for (j, state) in states.iter().enumerate() {
        let x_hat = if j == last {
            state.clone()
        } else {
            predict_final(field, state, times[j], cond)
        };
        scores.push(evaluate_all(specs, &x_hat)?);
    }
    Ok(scores
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
        .collect())
}
