//! Validation metrics for the timestep-contribution proxy: how well the
//! per-transition alignment gains `ΔS` track per-transition reward
//! improvements `ΔR` along sampled trajectories.
//!
//! Per trajectory the two length-`T` profiles are compared by Pearson and
//! Spearman correlation, pairwise order agreement, top-`k` recall, and the
//! distance between their argmax positions. Ties break to the lowest index
//! everywhere.

use crate::error::{Error, Result};
use crate::flow::{Rollout, VelocityField};
use crate::numerics::{mean_std, pearson, spearman};
use crate::rewards::{reward_delta_profile, RewardSpec};
use crate::tcd::{similarity_profile, step_deltas};

/// Fraction of unordered index pairs whose relative ordering agrees between
/// the two profiles. A pair tied in one profile agrees only if it is tied in
/// both.
pub fn pairwise_order_agreement(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "profiles must have equal length");
    assert!(x.len() >= 2, "need at least two entries");
    fn sign(v: f64) -> i8 {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    }
    let n = x.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            total += 1;
            if sign(x[a] - x[b]) == sign(y[a] - y[b]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// Indices of the `k` largest entries, value-descending with index-order
/// tie-break.
fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].partial_cmp(&x[a])
            .expect("finite values")
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// `|top-k(x) ∩ top-k(y)| / k`.
pub fn recall_at_k(x: &[f64], y: &[f64], k: usize) -> f64 {
    assert_eq!(x.len(), y.len(), "profiles must have equal length");
    assert!(k >= 1 && k <= x.len(), "k must satisfy 1 <= k <= T");
    let tx = top_k_indices(x, k);
    let ty = top_k_indices(y, k);
    let hits = tx.iter().filter(|i| ty.contains(i)).count();
    hits as f64 / k as f64
}

/// `|argmax(x) - argmax(y)|` with first-index tie-break.
pub fn argmax_distance(x: &[f64], y: &[f64]) -> usize {
    assert_eq!(x.len(), y.len(), "profiles must have equal length");
    assert!(!x.is_empty(), "need at least one entry");
    let am = |v: &[f64]| {
        let mut best = 0usize;
        for (i, val) in v.iter().enumerate() {
            if *val > v[best] {
                best = i;
            }
        }
        best
    };
    am(x).abs_diff(am(y))
}

/// How the `K` per-objective reward deltas collapse to one profile.
#[derive(Debug, Clone, Copy)]
pub enum AggregateRule {
    /// Unweighted mean across objectives (default).
    Mean,
    /// A single objective by index.
    Objective(usize),
}

/// Aggregated proxy-validation metrics over a batch of trajectories.
/// Correlations and agreement are per-trajectory means ± population std;
/// recalls and the argmax distance are plain means.
#[derive(Debug, Clone)]
pub struct ProxyReport {
    pub n_trajectories: usize,
    /// Trajectories with a constant profile, skipped by the correlation
    /// metrics (but still counted by the ordering metrics).
    pub n_degenerate: usize,
    pub pearson_mean: f64,
    pub pearson_std: f64,
    pub spearman_mean: f64,
    pub spearman_std: f64,
    pub agreement_mean: f64,
    pub agreement_std: f64,
    pub recall_at_3: f64,
    pub recall_at_5: f64,
    pub argmax_distance_mean: f64,
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

/// Build the report from precomputed `(ΔS, ΔR)` profile pairs. Exposed so
/// synthetic profiles can exercise the metric path directly.
pub fn proxy_report_from_profiles(profiles: &[(Vec<f64>, Vec<f64>)]) -> Result<ProxyReport> {
    if profiles.len() < 2 {
        return Err(Error::TooFewValues {
            what: "proxy profiles",
            needed: 2,
            got: profiles.len(),
        });
    }
    let mut pearsons = Vec::new();
    let mut spearmans = Vec::new();
    let mut agreements = Vec::new();
    let mut recalls3 = Vec::new();
    let mut recalls5 = Vec::new();
    let mut argmaxes = Vec::new();
    let mut degenerate = 0usize;
    for (ds, dr) in profiles {
        if ds.len() != dr.len() {
            return Err(Error::ShapeMismatch(format!(
                "profile lengths {} vs {}",
                ds.len(),
                dr.len()
            )));
        }
        if ds.len() < 5 {
            return Err(Error::TooFewValues {
                what: "profile entries",
                needed: 5,
                got: ds.len(),
            });
        }
        if is_constant(ds) || is_constant(dr) {
            degenerate += 1;
        } else {
            pearsons.push(pearson(ds, dr)?);
            spearmans.push(spearman(ds, dr)?);
        }
        agreements.push(pairwise_order_agreement(ds, dr));
        recalls3.push(recall_at_k(ds, dr, 3));
        recalls5.push(recall_at_k(ds, dr, 5));
        argmaxes.push(argmax_distance(ds, dr) as f64);
    }
    if pearsons.len() < 2 {
        return Err(Error::ZeroVariance("proxy correlation profiles"));
    }
    let (p_mean, p_std) = mean_std(&pearsons)?;
    let (s_mean, s_std) = mean_std(&spearmans)?;
    let (a_mean, a_std) = mean_std(&agreements)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ProxyReport {
        n_trajectories: profiles.len(),
        n_degenerate: degenerate,
        pearson_mean: p_mean,
        pearson_std: p_std,
        spearman_mean: s_mean,
        spearman_std: s_std,
        agreement_mean: a_mean,
        agreement_std: a_std,
        recall_at_3: mean(&recalls3),
        recall_at_5: mean(&recalls5),
        argmax_distance_mean: mean(&argmaxes),
    })
}

/// Full proxy validation: alignment gains against aggregated reward
/// improvements for every trajectory, then the metric aggregation.
pub fn proxy_report(
    trajectories: &[Rollout],
    field: &impl VelocityField,
    specs: &[RewardSpec],
    rule: AggregateRule,
) -> Result<ProxyReport> {
    if trajectories.len() < 2 {
        return Err(Error::TooFewValues {
            what: "trajectories",
            needed: 2,
            got: trajectories.len(),
        });
    }
    let mut profiles = Vec::with_capacity(trajectories.len());
    for rollout in trajectories {
        let s = similarity_profile(&rollout.latent)?;
        let ds = step_deltas(&s);
        let per_objective = reward_delta_profile(&rollout.latent, rollout.cond, field, specs)?;
        let dr: Vec<f64> = match rule {
            AggregateRule::Mean => per_objective
                .iter()
                .map(|row| row.iter().sum::<f64>() / row.len() as f64)
                .collect(),
            AggregateRule::Objective(k) => {
                if k >= specs.len() {
                    return Err(Error::InvalidParameter(format!(
                        "objective index {k} out of range for {} objectives",
                        specs.len()
                    )));
                }
                per_objective.iter().map(|row| row[k]).collect()
            }
        };
        profiles.push((ds, dr));
    }
    proxy_report_from_profiles(&profiles)
}
