//! Group-relative policy optimization with objective-aware trajectory
//! credit assignment.
//!
//! For a group of `G` rollouts sharing one condition, raw rewards are
//! normalized per objective (zero mean, unit population std within the
//! group), fused across objectives by a per-sample simplex coefficient
//! vector, and spread across timesteps by per-transition temporal weights:
//!
//! ```text
//! Ã[i][t] = w_t^i · Σ_k c_k^i · A_k^i
//! ```
//!
//! The policy objective is the clipped surrogate
//!
//! ```text
//! J = mean_{i,t} min(ρ_t^i Ã[i][t], clip(ρ_t^i, 1-ε, 1+ε) Ã[i][t])
//! ```
//!
//! with `ρ` the per-step new/old density ratio. [`otca_step`] runs the
//! whole credit pipeline for one group; bypass flags degrade it to the
//! uniform-broadcast baseline (every timestep receives the plain mean of
//! the normalized advantages), to temporal weighting only, or to objective
//! fusion only.

use crate::error::{Error, Result};
use crate::flow::{step_log_density, NoiseSchedule, Rollout, VelocityNet};
use crate::moca::{
    exploration_lambda, exploration_signal, moca_solve, trajectory_score, AdvantageVector,
    CoefficientVector,
};
use crate::numerics::{axpy, ensure_finite, mean_std};
use crate::tcd::{
    apply_weight_floor, similarity_profile, step_deltas, temporal_weights, TemporalWeights,
};

/// `G` rollouts sharing one condition, with their raw per-objective rewards.
#[derive(Debug, Clone)]
pub struct SampleGroup {
    rollouts: Vec<Rollout>,
    /// `G × K` raw rewards.
    rewards: Vec<Vec<f64>>,
}

impl SampleGroup {
    pub fn new(rollouts: Vec<Rollout>, rewards: Vec<Vec<f64>>) -> Result<Self> {
        if rollouts.len() < 2 {
            return Err(Error::TooFewValues {
                what: "group rollouts",
                needed: 2,
                got: rollouts.len(),
            });
        }
        if rewards.len() != rollouts.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rollouts vs {} reward rows",
                rollouts.len(),
                rewards.len()
            )));
        }
        let t = rollouts[0].transitions();
        let cond = rollouts[0].cond;
        for r in &rollouts {
            if r.transitions() != t {
                return Err(Error::ShapeMismatch(
                    "rollouts of mixed length in one group".into(),
                ));
            }
            if r.cond != cond {
                return Err(Error::ShapeMismatch(
                    "rollouts of mixed condition in one group".into(),
                ));
            }
            if r.steps.iter().any(|s| !s.is_stochastic()) {
                return Err(Error::NotStochastic);
            }
        }
        let k = rewards[0].len();
        if k == 0 {
            return Err(Error::TooFewValues {
                what: "reward objectives",
                needed: 1,
                got: 0,
            });
        }
        for row in &rewards {
            if row.len() != k {
                return Err(Error::ShapeMismatch("ragged reward matrix".into()));
            }
            ensure_finite(row, "group rewards")?;
        }
        Ok(Self { rollouts, rewards })
    }

    pub fn size(&self) -> usize {
        self.rollouts.len()
    }

    pub fn objectives(&self) -> usize {
        self.rewards[0].len()
    }

    pub fn transitions(&self) -> usize {
        self.rollouts[0].transitions()
    }

    pub fn cond(&self) -> usize {
        self.rollouts[0].cond
    }

    pub fn rollouts(&self) -> &[Rollout] {
        &self.rollouts
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.rewards
    }
}

/// Group-normalized advantages plus a per-objective degeneracy flag for
/// columns that were constant (those normalize to all zeros).
#[derive(Debug, Clone)]
pub struct NormalizedAdvantages {
    pub values: Vec<AdvantageVector>,
    pub degenerate_columns: Vec<bool>,
}

/// Per-objective group normalization `(r - mean) / std` with the population
/// std over the group. Constant columns yield zero advantages and a warning
/// flag instead of an error, so degenerate groups skip updates gracefully.
pub fn normalize_advantages(rewards: &[Vec<f64>]) -> Result<NormalizedAdvantages> {
    if rewards.len() < 2 {
        return Err(Error::TooFewValues {
            what: "reward rows",
            needed: 2,
            got: rewards.len(),
        });
    }
    let k = rewards[0].len();
    if k == 0 || rewards.iter().any(|r| r.len() != k) {
        return Err(Error::ShapeMismatch("ragged reward matrix".into()));
    }
    let g = rewards.len();
    let mut out = vec![vec![0.0; k]; g];
    let mut degenerate = vec![false; k];
    for col in 0..k {
        let column: Vec<f64> = rewards.iter().map(|row| row[col]).collect();
        let (mean, std) = mean_std(&column)?;
        if std == 0.0 {
            degenerate[col] = true;
            continue;
        }
        for (i, r) in column.iter().enumerate() {
            out[i][col] = (r - mean) / std;
        }
    }
    Ok(NormalizedAdvantages {
        values: out
            .into_iter()
            .map(AdvantageVector::new)
            .collect::<Result<_>>()?,
        degenerate_columns: degenerate,
    })
}

/// `G × T` per-timestep training signal.
#[derive(Debug, Clone)]
pub struct EffectiveAdvantage {
    values: Vec<Vec<f64>>,
}

impl EffectiveAdvantage {
    pub fn from_values(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewValues {
                what: "effective advantages",
                needed: 1,
                got: 0,
            });
        }
        let t = values[0].len();
        for row in &values {
            if row.len() != t {
                return Err(Error::ShapeMismatch("ragged effective advantages".into()));
            }
            ensure_finite(row, "effective advantages")?;
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn samples(&self) -> usize {
        self.values.len()
    }

    pub fn transitions(&self) -> usize {
        self.values[0].len()
    }
}

/// `Ã[i][t] = w[i][t] · Σ_k c[i][k]·A[i][k]`.
pub fn effective_advantages(
    advantages: &[AdvantageVector],
    coefficients: &[CoefficientVector],
    weights: &[TemporalWeights],
) -> Result<EffectiveAdvantage> {
    if advantages.len() != coefficients.len() || advantages.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "effective_advantages: {} advantages, {} coefficients, {} weights",
            advantages.len(),
            coefficients.len(),
            weights.len()
        )));
    }
    let mut rows = Vec::with_capacity(advantages.len());
    for ((adv, coeff), w) in advantages.iter().zip(coefficients).zip(weights) {
        if adv.len() != coeff.len() {
            return Err(Error::ShapeMismatch(format!(
                "sample with {} advantages but {} coefficients",
                adv.len(),
                coeff.len()
            )));
        }
        let fused = coeff.fuse(adv);
        rows.push(w.values().iter().map(|wt| wt * fused).collect());
    }
    EffectiveAdvantage::from_values(rows)
}

/// Importance-ratio clipping rule: a clip half-width, with an optional
/// hard floor on `ρ` itself as the alternative reading of ratio clipping.
#[derive(Debug, Clone, Copy)]
pub struct ClipRule {
    pub half_width: f64,
    pub rho_floor: Option<f64>,
}

impl ClipRule {
    pub fn half_width(eps: f64) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "clip half-width must be positive, got {eps}"
            )));
        }
        Ok(Self {
            half_width: eps,
            rho_floor: None,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if floor.is_nan() || floor <= 0.0 || !floor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho floor must be positive, got {floor}"
            )));
        }
        self.rho_floor = Some(floor);
        Ok(self)
    }
}

/// One clipped cell: value and the coefficient multiplying `∇logπ` in the
/// gradient (zero when the clip or the floor is binding).
fn clipped_cell(rho_raw: f64, adv: f64, clip: &ClipRule) -> (f64, f64) {
    let floored = clip.rho_floor.is_some_and(|f| rho_raw < f);
    let rho = clip.rho_floor.map_or(rho_raw, |f| rho_raw.max(f));
    let clipped = rho.clamp(1.0 - clip.half_width, 1.0 + clip.half_width);
    let unclipped_val = rho * adv;
    let clipped_val = clipped * adv;
    if unclipped_val <= clipped_val {
        // Unclipped branch active (ties included): gradient flows unless the
        // floor replaced ρ.
        let coef = if floored { 0.0 } else { adv * rho_raw };
        (unclipped_val, coef)
    } else {
        // Clipped branch strictly smaller: ρ is outside the clip range, the
        // branch is flat, no gradient.
        (clipped_val, 0.0)
    }
}

/// Clipped surrogate value (the maximization objective) from per-cell
/// log-densities: `mean_{i,t} min(ρÃ, clip(ρ)Ã)` with
/// `ρ = exp(new_logp - old_logp)`.
pub fn clipped_surrogate(
    eff: &EffectiveAdvantage,
    new_logp: &[Vec<f64>],
    old_logp: &[Vec<f64>],
    clip: &ClipRule,
) -> Result<f64> {
    let g = eff.samples();
    let t = eff.transitions();
    if new_logp.len() != g || old_logp.len() != g {
        return Err(Error::ShapeMismatch(format!(
            "surrogate: {} advantage rows, {} new rows, {} old rows",
            g,
            new_logp.len(),
            old_logp.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..g {
        if new_logp[i].len() != t || old_logp[i].len() != t {
            return Err(Error::ShapeMismatch("ragged log-density matrix".into()));
        }
        ensure_finite(&new_logp[i], "new log-densities")?;
        ensure_finite(&old_logp[i], "old log-densities")?;
        for j in 0..t {
            let rho = (new_logp[i][j] - old_logp[i][j]).exp();
            total += clipped_cell(rho, eff.values()[i][j], clip).0;
        }
    }
    Ok(total / (g * t) as f64)
}

/// Surrogate value together with its exact gradient w.r.t. the policy
/// parameters. Old-policy log-densities come from the rollout records; new
/// ones are recomputed (with gradients) under `net`.
///
/// Accumulation order is fixed (sample-major, then step), so results are
/// bit-reproducible.
pub fn surrogate_gradient(
    group: &SampleGroup,
    eff: &EffectiveAdvantage,
    net: &VelocityNet,
    schedule: &NoiseSchedule,
    clip: &ClipRule,
) -> Result<(f64, Vec<f64>)> {
    let g = group.size();
    let t = group.transitions();
    if eff.samples() != g || eff.transitions() != t {
        return Err(Error::ShapeMismatch(format!(
            "surrogate_gradient: group {}×{} vs advantages {}×{}",
            g,
            t,
            eff.samples(),
            eff.transitions()
        )));
    }
    let cells = (g * t) as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; net.param_count()];
    for (i, rollout) in group.rollouts().iter().enumerate() {
        for (j, step) in rollout.steps.iter().enumerate() {
            let old = step.log_density.ok_or(Error::NotStochastic)?;
            let ld = step_log_density(net, schedule, step, rollout.cond)?;
            if !ld.logp.is_finite() {
                return Err(Error::NonFinite("recomputed log-density"));
            }
            let rho = (ld.logp - old).exp();
            let (value, coef) = clipped_cell(rho, eff.values()[i][j], clip);
            total += value;
            if coef != 0.0 {
                axpy(&mut grad, coef / cells, &ld.grad);
            }
        }
    }
    Ok((total / cells, grad))
}

/// Configuration of one credit-assignment step.
#[derive(Debug, Clone)]
pub struct OtcaConfig {
    /// Smoothing constant of the temporal weights.
    pub tcd_eps: f64,
    /// Closed-form solver tolerance.
    pub moca_tol: f64,
    /// Divide-guard of the exploration signal and lambda modulation.
    pub explore_eps: f64,
    /// Optional temporal weight floor (0 disables).
    pub w_min: f64,
    /// Broadcast the fused advantage uniformly to every timestep instead of
    /// using the temporal weights.
    pub uniform_w: bool,
    /// Use uniform objective coefficients instead of the solver.
    pub uniform_c: bool,
    /// Enable the exploration bias (irrelevant when `uniform_c` is set).
    pub exploration: bool,
}

impl Default for OtcaConfig {
    fn default() -> Self {
        Self {
            tcd_eps: 1e-4,
            moca_tol: 1e-8,
            explore_eps: 1e-6,
            w_min: 0.0,
            uniform_w: false,
            uniform_c: false,
            exploration: true,
        }
    }
}

/// Per-sample diagnostics of one credit-assignment step.
#[derive(Debug, Clone)]
pub struct SampleDiagnostics {
    /// Weighted alignment-gain score of the trajectory.
    pub q: f64,
    /// Normalized structural deviation from the group.
    pub e: f64,
    /// Exploration strength actually used by the solver.
    pub lambda: f64,
    /// Objective coefficients actually used for fusion.
    pub coefficients: Vec<f64>,
    /// Entropy of the structural temporal weights (before any bypass).
    pub weight_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct OtcaDiagnostics {
    pub samples: Vec<SampleDiagnostics>,
    pub degenerate_columns: Vec<bool>,
}

/// One full credit-assignment step over a sample group:
///
/// 1. temporal weights per trajectory from the alignment-gain profile;
/// 2. exploration signal and simplex coefficients per sample;
/// 3. effective-advantage construction.
///
/// The structural weights (and the exploration signal derived from them)
/// are always computed; `uniform_w` only switches step 3 to broadcasting
/// the fused advantage to every timestep, which reproduces the classic
/// uniform-baseline objective exactly.
pub fn otca_step(
    group: &SampleGroup,
    config: &OtcaConfig,
) -> Result<(EffectiveAdvantage, OtcaDiagnostics)> {
    let g = group.size();
    let t = group.transitions();
    let k = group.objectives();

    let normalized = normalize_advantages(group.rewards())?;

    // Step 1: trajectory-level credit decomposition.
    let mut weights = Vec::with_capacity(g);
    let mut gains = Vec::with_capacity(g);
    for rollout in group.rollouts() {
        let profile = similarity_profile(&rollout.latent)?;
        let delta_s = step_deltas(&profile);
        let mut w = temporal_weights(&delta_s, config.tcd_eps)?;
        if config.w_min > 0.0 {
            w = apply_weight_floor(&w, config.w_min)?;
        }
        weights.push(w);
        gains.push(delta_s);
    }

    // Step 2: exploration signal and objective coefficients.
    let group_q: Vec<f64> = weights
        .iter()
        .zip(&gains)
        .map(|(w, ds)| trajectory_score(w, ds))
        .collect::<Result<_>>()?;
    let mut coefficients = Vec::with_capacity(g);
    let mut diagnostics = Vec::with_capacity(g);
    for i in 0..g {
        let signal = exploration_signal(&weights[i], &gains[i], &group_q, config.explore_eps)?;
        let adv = &normalized.values[i];
        let lambda = if config.exploration && !config.uniform_c {
            exploration_lambda(adv, signal.e, config.explore_eps)?
        } else {
            0.0
        };
        let coeff = if config.uniform_c {
            CoefficientVector::uniform(k)
        } else {
            moca_solve(adv, lambda, config.moca_tol)?
        };
        diagnostics.push(SampleDiagnostics {
            q: signal.q,
            e: signal.e,
            lambda,
            coefficients: coeff.values().to_vec(),
            weight_entropy: weights[i].entropy(),
        });
        coefficients.push(coeff);
    }

    // Step 3: effective-advantage construction.
    let eff = if config.uniform_w {
        let rows: Vec<Vec<f64>> = (0..g)
            .map(|i| {
                let fused = coefficients[i].fuse(&normalized.values[i]);
                vec![fused; t]
            })
            .collect();
        EffectiveAdvantage::from_values(rows)?
    } else {
        effective_advantages(&normalized.values, &coefficients, &weights)?
    };

    Ok((
        eff,
        OtcaDiagnostics {
            samples: diagnostics,
            degenerate_columns: normalized.degenerate_columns,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{sde_sample, VelocityNet};
    use crate::numerics::SeededRng;

    fn test_group(seed: u64, g: usize, t: usize, k: usize) -> (SampleGroup, VelocityNet, NoiseSchedule) {
        let mut rng = SeededRng::new(seed);
        let net = VelocityNet::new(2, &[8], &mut rng);
        let schedule = NoiseSchedule::rectified(0.3);
        let mut rollouts = Vec::new();
        let mut rewards = Vec::new();
        for i in 0..g {
            let z0 = rng.fork(100 + i as u64).normal_vec(2);
            let r = sde_sample(&net, &schedule, &z0, t, 1, &mut rng.fork(200 + i as u64)).unwrap();
            rollouts.push(r);
            rewards.push((0..k).map(|_| rng.next_normal()).collect());
        }
        (SampleGroup::new(rollouts, rewards).unwrap(), net, schedule)
    }

    #[test]
    fn normalize_hand_computed_column() {
        let got = normalize_advantages(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let e = 1.224_744_871_391_589;
        assert!((got.values[0].values()[0] + e).abs() < 1e-12);
        assert!(got.values[1].values()[0].abs() < 1e-12);
        assert!((got.values[2].values()[0] - e).abs() < 1e-12);
        assert!(!got.degenerate_columns[0]);
    }

    #[test]
    fn normalize_constant_column_flags_degenerate() {
        let got = normalize_advantages(&[vec![5.0, 0.0], vec![5.0, 2.0]]).unwrap();
        assert!(got.degenerate_columns[0]);
        assert!(!got.degenerate_columns[1]);
        assert_eq!(got.values[0].values()[0], 0.0);
        assert_eq!(got.values[1].values()[0], 0.0);
        assert_eq!(got.values[0].values()[1], -1.0);
        assert_eq!(got.values[1].values()[1], 1.0);
    }

    #[test]
    fn normalize_columns_have_zero_mean_unit_std() {
        let mut rng = SeededRng::new(70);
        for _ in 0..50 {
            let g = 2 + rng.next_index(10);
            let k = 1 + rng.next_index(4);
            let rewards: Vec<Vec<f64>> = (0..g)
                .map(|_| (0..k).map(|_| rng.next_normal() * 3.0).collect())
                .collect();
            let adv = normalize_advantages(&rewards).unwrap();
            for col in 0..k {
                let column: Vec<f64> = adv.values.iter().map(|a| a.values()[col]).collect();
                let (m, s) = mean_std(&column).unwrap();
                assert!(m.abs() < 1e-9);
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalize_invariant_to_common_rescaling() {
        let mut rng = SeededRng::new(71);
        let rewards: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..3).map(|_| rng.next_normal()).collect())
            .collect();
        let scaled: Vec<Vec<f64>> = rewards
            .iter()
            .map(|row| row.iter().map(|r| r * 37.5).collect())
            .collect();
        let a = normalize_advantages(&rewards).unwrap();
        let b = normalize_advantages(&scaled).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            for (p, q) in x.values().iter().zip(y.values()) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn effective_advantage_one_hot_uniform() {
        let adv = vec![AdvantageVector::new(vec![2.0, -1.0]).unwrap()];
        let coeff = vec![CoefficientVector::new(vec![1.0, 0.0]).unwrap()];
        let w = vec![TemporalWeights::uniform(4)];
        let eff = effective_advantages(&adv, &coeff, &w).unwrap();
        for v in &eff.values()[0] {
            assert!((v - 0.5).abs() < 1e-12); // A_{k*}/T
        }
    }

    #[test]
    fn effective_advantage_zero_advantages() {
        let adv = vec![AdvantageVector::new(vec![0.0, 0.0]).unwrap(); 2];
        let coeff = vec![CoefficientVector::uniform(2); 2];
        let w = vec![TemporalWeights::uniform(3); 2];
        let eff = effective_advantages(&adv, &coeff, &w).unwrap();
        for row in eff.values() {
            assert!(row.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn effective_advantage_hand_computed() {
        let adv = vec![AdvantageVector::new(vec![-2.0, 0.0, 3.0]).unwrap()];
        let coeff = vec![CoefficientVector::new(vec![0.0, 5.0 / 6.0, 1.0 / 6.0]).unwrap()];
        let w = vec![TemporalWeights::new(vec![0.25, 0.75]).unwrap()];
        let eff = effective_advantages(&adv, &coeff, &w).unwrap();
        assert!((eff.values()[0][0] - 0.125).abs() < 1e-12);
        assert!((eff.values()[0][1] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn surrogate_at_rho_one_is_mean_advantage() {
        let eff = EffectiveAdvantage::from_values(vec![
            vec![0.5, -0.25],
            vec![1.0, 0.0],
        ])
        .unwrap();
        let logp = vec![vec![-1.3, 0.2], vec![0.7, -2.0]];
        let clip = ClipRule::half_width(0.2).unwrap();
        let value = clipped_surrogate(&eff, &logp, &logp, &clip).unwrap();
        assert!((value - (0.5 - 0.25 + 1.0 + 0.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn surrogate_clip_branches() {
        let clip = ClipRule::half_width(0.2).unwrap();
        // ρ = 1.5 with positive advantage: upper clip engages.
        let (v, coef) = clipped_cell(1.5, 1.0, &clip);
        assert!((v - 1.2).abs() < 1e-15);
        assert_eq!(coef, 0.0);
        // ρ = 0.5 with negative advantage: min picks the clipped branch.
        let (v, coef) = clipped_cell(0.5, -1.0, &clip);
        assert!((v + 0.8).abs() < 1e-15);
        assert_eq!(coef, 0.0);
        // In-range ρ keeps gradient flowing.
        let (v, coef) = clipped_cell(1.1, 2.0, &clip);
        assert!((v - 2.2).abs() < 1e-15);
        assert!((coef - 2.2).abs() < 1e-15);
    }

    #[test]
    fn surrogate_rho_floor() {
        let clip = ClipRule::half_width(0.5).unwrap().with_floor(0.9).unwrap();
        // Below the floor: value uses the floored ratio, gradient dies.
        let (v, coef) = clipped_cell(0.2, -1.0, &clip);
        assert!((v + 0.9).abs() < 1e-15);
        assert_eq!(coef, 0.0);
    }

    #[test]
    fn uniform_mode_broadcasts_mean_advantage() {
        let (group, _, _) = test_group(81, 4, 6, 3);
        let config = OtcaConfig {
            uniform_w: true,
            uniform_c: true,
            ..Default::default()
        };
        let (eff, diag) = otca_step(&group, &config).unwrap();
        let normalized = normalize_advantages(group.rewards()).unwrap();
        for i in 0..group.size() {
            let mean_adv = normalized.values[i].sum() / group.objectives() as f64;
            for v in &eff.values()[i] {
                assert!((v - mean_adv).abs() < 1e-12);
            }
        }
        for d in &diag.samples {
            for c in &d.coefficients {
                assert!((c - 1.0 / 3.0).abs() < 1e-12);
            }
            assert_eq!(d.lambda, 0.0);
        }
    }

    #[test]
    fn identical_trajectories_guarded_lambda_finite() {
        let mut rng = SeededRng::new(82);
        let net = VelocityNet::new(2, &[8], &mut rng);
        let schedule = NoiseSchedule::rectified(0.3);
        let z0 = [0.4, -0.2];
        // Same seed per rollout: identical trajectories, so q has zero
        // variance across the group.
        let rollouts: Vec<Rollout> = (0..3)
            .map(|_| sde_sample(&net, &schedule, &z0, 5, 0, &mut SeededRng::new(7)).unwrap())
            .collect();
        let rewards = vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, -1.0]];
        let group = SampleGroup::new(rollouts, rewards).unwrap();
        let (_, diag) = otca_step(&group, &OtcaConfig::default()).unwrap();
        for d in &diag.samples {
            assert!(d.e.is_finite());
            assert!(d.lambda.is_finite());
            assert!((0.0..1.0).contains(&d.lambda));
        }
    }

    #[test]
    fn otca_step_coefficients_on_simplex() {
        let (group, _, _) = test_group(83, 6, 8, 3);
        let (_, diag) = otca_step(&group, &OtcaConfig::default()).unwrap();
        for d in &diag.samples {
            let sum: f64 = d.coefficients.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(d.coefficients.iter().all(|c| *c >= 0.0));
            let nonzero = d.coefficients.iter().filter(|c| **c > 0.0).count();
            assert!(nonzero <= 2, "solver output must be sparse");
        }
    }
}
