//! Multi-objective credit allocation.
//!
//! For one sample with per-objective advantages `A = (A_1 … A_K)` the fused
//! training signal is `z = cᵀA` where `c` lies on the probability simplex.
//! The coefficient vector solves
//!
//! ```text
//! min_c  (cᵀA)² - λ·cᵀA      s.t.  Σ c_k = 1,  c_k ≥ 0
//! ```
//!
//! which reduces to a one-dimensional convex quadratic `z² - λz` over the
//! simplex image `[min A, max A]`. The closed-form solver clips the
//! unconstrained minimizer `z* = λ/2` into that interval and recovers a
//! sparse `c` (one-hot, or a two-point interpolation between the advantages
//! bracketing the target).
//!
//! The exploration strength `λ ≥ 0` is derived from how much a trajectory's
//! weighted alignment-gain score deviates from its group: distinctive
//! trajectories with positive aggregated advantage get biased away from the
//! conservative minimum-norm point (`λ = 0` reproduces it exactly).

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, mean_std};
use crate::tcd::TemporalWeights;

/// Group-normalized per-objective advantages of one sample.
#[derive(Debug, Clone)]
pub struct AdvantageVector(Vec<f64>);

impl AdvantageVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewValues {
                what: "advantages",
                needed: 1,
                got: 0,
            });
        }
        ensure_finite(&values, "advantages")?;
        Ok(Self(values))
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

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Objective weights on the probability simplex.
///
/// The closed-form solver returns at most two nonzero entries (the
/// interpolation case) or exactly one (the one-hot cases).
#[derive(Debug, Clone)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewValues {
                what: "coefficients",
                needed: 1,
                got: 0,
            });
        }
        ensure_finite(&values, "coefficients")?;
        if values.iter().any(|c| *c < 0.0) {
            return Err(Error::InvalidParameter(
                "coefficients must be nonnegative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform coefficients need at least one objective");
        Self(vec![1.0 / k as f64; k])
    }

    fn one_hot(k: usize, index: usize) -> Self {
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Self(v)
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

    /// The fused scalar `cᵀA`.
    pub fn fuse(&self, adv: &AdvantageVector) -> f64 {
        debug_assert_eq!(self.0.len(), adv.len());
        crate::numerics::dot(&self.0, adv.values())
    }
}

/// Structural-deviation exploration signal of one sample.
#[derive(Debug, Clone, Copy)]
pub struct ExplorationSignal {
    /// Weighted alignment-gain score `q = Σ_t w_t ΔS_t`.
    pub q: f64,
    /// Deviation normalized by the group spread: `|q| / (std(q_group) + ε)`.
    pub e: f64,
}

/// Weighted structural contribution `q = Σ_t w_t ΔS_t` of one trajectory.
pub fn trajectory_score(weights: &TemporalWeights, delta_s: &[f64]) -> Result<f64> {
    if weights.len() != delta_s.len() {
        return Err(Error::ShapeMismatch(format!(
            "trajectory_score: {} weights vs {} gains",
            weights.len(),
            delta_s.len()
        )));
    }
    ensure_finite(delta_s, "alignment gains")?;
    Ok(crate::numerics::dot(weights.values(), delta_s))
}

/// Exploration signal of one sample against its group.
///
/// `group_q` holds the `q` scores of every sample in the group, including
/// this one at its own index; the deviation uses the population standard
/// deviation over the group with `eps` guarding the zero-variance case.
pub fn exploration_signal(
    weights: &TemporalWeights,
    delta_s: &[f64],
    group_q: &[f64],
    eps: f64,
) -> Result<ExplorationSignal> {
    if group_q.len() < 2 {
        return Err(Error::TooFewValues {
            what: "group scores",
            needed: 2,
            got: group_q.len(),
        });
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "exploration eps must be positive, got {eps}"
        )));
    }
    let q = trajectory_score(weights, delta_s)?;
    let (_, std) = mean_std(group_q)?;
    Ok(ExplorationSignal {
        q,
        e: q.abs() / (std + eps),
    })
}

/// Exploration strength `λ = max(0, ΣA) / (|ΣA| + ε) · tanh(e)`.
///
/// Zero whenever the aggregated advantage is nonpositive; otherwise a
/// smooth, bounded function of the structural deviation, so `λ ∈ [0, 1)`.
pub fn exploration_lambda(advantages: &AdvantageVector, e: f64, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "exploration eps must be positive, got {eps}"
        )));
    }
    if !e.is_finite() {
        return Err(Error::NonFinite("exploration deviation"));
    }
    let total = advantages.sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(total / (total.abs() + eps) * e.tanh())
}

/// Closed-form solution of the exploration-biased simplex quadratic.
///
/// Three cases, checked in order with tolerance `eps`:
/// 1. all advantages equal → one-hot on the argmax (first index on ties);
/// 2. the clipped target `ẑ = clip(λ/2, min A, max A)` coincides with some
///    `A_k` → one-hot on the smallest such `k`;
/// 3. otherwise interpolate between the two advantages bracketing `ẑ` in
///    sorted order, which reproduces `cᵀA = ẑ` exactly.
pub fn moca_solve(
    advantages: &AdvantageVector,
    lambda: f64,
    eps: f64,
) -> Result<CoefficientVector> {
    let a = advantages.values();
    let k = a.len();
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance must be positive, got {eps}"
        )));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "exploration strength must be finite and nonnegative, got {lambda}"
        )));
    }
    if k == 1 {
        return Ok(CoefficientVector::one_hot(1, 0));
    }

    let s_min = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Case 1: all advantages (numerically) equal. Ties break to the first
    // index holding the maximum.
    if s_max - s_min < eps {
        let argmax = a.iter().position(|&v| v == s_max).expect("max exists");
        return Ok(CoefficientVector::one_hot(k, argmax));
    }

    let z_hat = (lambda / 2.0).clamp(s_min, s_max);

    // Case 2: target coincides with an advantage.
    if let Some(idx) = a.iter().position(|&v| (v - z_hat).abs() < eps) {
        return Ok(CoefficientVector::one_hot(k, idx));
    }

    // Case 3: two-point interpolation in sorted order. The ascending scan
    // takes the first bracket containing the target.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| a[i].partial_cmp(&a[j]).expect("finite"));
    for w in order.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if a[lo] <= z_hat && z_hat <= a[hi] {
            let gap = a[hi] - a[lo];
            let mut c = vec![0.0; k];
            c[lo] = (a[hi] - z_hat) / gap;
            c[hi] = (z_hat - a[lo]) / gap;
            return Ok(CoefficientVector(c));
        }
    }
    unreachable!("clipped target lies inside [min A, max A]")
}

/// Exhaustive grid minimizer of `z² - λz` over the simplex image
/// `[min A, max A]`; the verification oracle for the closed-form solver.
///
/// Returns `(argmin z, minimum objective)` over grid points spaced by
/// `resolution` (endpoints included).
pub fn brute_force_oracle(
    advantages: &AdvantageVector,
    lambda: f64,
    resolution: f64,
) -> (f64, f64) {
    assert!(resolution > 0.0, "resolution must be positive");
    let a = advantages.values();
    let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let steps = ((hi - lo) / resolution).ceil() as usize;
    let mut best_z = lo;
    let mut best_obj = lo * lo - lambda * lo;
    for i in 1..=steps {
        let z = (lo + i as f64 * resolution).min(hi);
        let obj = z * z - lambda * z;
        if obj < best_obj {
            best_obj = obj;
            best_z = z;
        }
    }
    (best_z, best_obj)
}

/// Objective value `z² - λz` at `z = cᵀA`.
pub fn objective(c: &CoefficientVector, advantages: &AdvantageVector, lambda: f64) -> f64 {
    let z = c.fuse(advantages);
    z * z - lambda * z
}
