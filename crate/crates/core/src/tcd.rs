//! Trajectory-level credit decomposition.
//!
//! Each sampled trajectory is scored by how much every transition increases
//! the cosine alignment between the current latent and the final denoised
//! latent:
//!
//! ```text
//! S_j  = cos(z_j, z_final)            similarity profile, one per state
//! ΔS_j = S_{j+1} - S_j                per-transition alignment gain
//! w_j  = (max(0, ΔS_j) + ε) / Σ_τ (max(0, ΔS_τ) + ε)
//! ```
//!
//! Trajectories are stored in sampling order (noise first, final state
//! last), so a positive `ΔS_j` means transition `j` moved the latent toward
//! the final result. The weights are strictly positive and sum to one; an
//! all-negative profile collapses to the uniform distribution.

use crate::error::{Error, Result};
use crate::numerics::{cosine_similarity, ensure_finite};

/// Recorded latent states of one sampled generation, in sampling order.
///
/// Holds `T+1` states; entry `0` is the initial noise, the last entry is the
/// final denoised latent. Timestamps are the continuous times of each state
/// in `[0, 1]` and are strictly monotone (decreasing for the usual
/// noise-to-data grid).
#[derive(Debug, Clone)]
pub struct LatentTrajectory {
    states: Vec<Vec<f64>>,
    times: Vec<f64>,
}

impl LatentTrajectory {
    pub fn new(states: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::TooFewValues {
                what: "trajectory states",
                needed: 2,
                got: states.len(),
            });
        }
        if times.len() != states.len() {
            return Err(Error::ShapeMismatch(format!(
                "trajectory: {} states vs {} times",
                states.len(),
                times.len()
            )));
        }
        let d = states[0].len();
        for s in &states {
            if s.len() != d {
                return Err(Error::ShapeMismatch(
                    "trajectory states of mixed dimension".into(),
                ));
            }
            ensure_finite(s, "trajectory state")?;
        }
        ensure_finite(&times, "trajectory times")?;
        if times.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidParameter(
                "trajectory times must lie in [0, 1]".into(),
            ));
        }
        let increasing = times.windows(2).all(|w| w[1] > w[0]);
        let decreasing = times.windows(2).all(|w| w[1] < w[0]);
        if !increasing && !decreasing {
            return Err(Error::InvalidParameter(
                "trajectory times must be strictly monotone".into(),
            ));
        }
        Ok(Self { states, times })
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Number of transitions `T` (one fewer than the number of states).
    pub fn transitions(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("validated nonempty")
    }
}

/// Normalized nonnegative per-transition credit weights.
///
/// Weights produced by [`temporal_weights`] are strictly positive; the type
/// itself only requires nonnegativity so that hand-built degenerate inputs
/// (e.g. a one-hot weighting) remain expressible in tests and diagnostics.
#[derive(Debug, Clone)]
pub struct TemporalWeights(Vec<f64>);

impl TemporalWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewValues {
                what: "temporal weights",
                needed: 1,
                got: 0,
            });
        }
        ensure_finite(&values, "temporal weights")?;
        if values.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidParameter(
                "temporal weights must be nonnegative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "temporal weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform weights need at least one transition");
        Self(vec![1.0 / len as f64; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shannon entropy `-Σ w ln w` (with `0·ln 0 = 0`); `ln T` for uniform.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| w * w.ln())
            .sum::<f64>()
    }
}

/// Cosine similarity of every recorded state against the final latent.
///
/// The last entry is 1 by definition (the final state against itself).
pub fn similarity_profile(traj: &LatentTrajectory) -> Result<Vec<f64>> {
    let zf = traj.final_state();
    if crate::numerics::norm(zf) == 0.0 {
        return Err(Error::DegenerateTrajectory);
    }
    let mut out = Vec::with_capacity(traj.states().len());
    for state in &traj.states()[..traj.states().len() - 1] {
        out.push(cosine_similarity(state, zf)?);
    }
    out.push(1.0);
    Ok(out)
}

/// Per-transition alignment gains: `ΔS_j = S[j+1] - S[j]` in storage order.
///
/// With states stored noise-first, a positive entry marks a transition that
/// moved the latent toward the final state. (Under the diffusion-time
/// convention where larger indices are noisier, the same quantity reads
/// `S_t - S_{t+1}`; only the bookkeeping differs.)
pub fn step_deltas(similarities: &[f64]) -> Vec<f64> {
    assert!(similarities.len() >= 2, "need at least two states");
    similarities.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Normalized temporal weights from alignment gains.
///
/// Negative gains are floored at zero; `eps > 0` keeps every weight strictly
/// positive, and an all-nonpositive profile degrades to uniform.
pub fn temporal_weights(delta_s: &[f64], eps: f64) -> Result<TemporalWeights> {
    if delta_s.is_empty() {
        return Err(Error::TooFewValues {
            what: "alignment gains",
            needed: 1,
            got: 0,
        });
    }
    ensure_finite(delta_s, "alignment gains")?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "temporal_weights eps must be positive, got {eps}"
        )));
    }
    let numerators: Vec<f64> = delta_s.iter().map(|d| d.max(0.0) + eps).collect();
    let denom: f64 = numerators.iter().sum();
    Ok(TemporalWeights(
        numerators.into_iter().map(|n| n / denom).collect(),
    ))
}

/// Floor each raw weight `T·w_j` at `w_min`, then renormalize.
///
/// `w_min = 0` disables the floor. The renormalization can push entries
/// slightly back below the raw floor; the procedure is exactly
/// floor-then-renormalize, not a projection.
pub fn apply_weight_floor(w: &TemporalWeights, w_min: f64) -> Result<TemporalWeights> {
    if w_min == 0.0 {
        return Ok(w.clone());
    }
    if w_min.is_nan() || w_min <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "weight floor must be nonnegative, got {w_min}"
        )));
    }
    if w_min > 1.0 {
        // T entries each at least w_min/T would already sum past 1.
        return Err(Error::InfeasibleFloor(w_min));
    }
    let per_step = w_min / w.len() as f64;
    let floored: Vec<f64> = w.values().iter().map(|v| v.max(per_step)).collect();
    let sum: f64 = floored.iter().sum();
    Ok(TemporalWeights(
        floored.into_iter().map(|v| v / sum).collect(),
    ))
}
