//! Desk-scale flow-matching generative policy.
//!
//! The model transports standard Gaussian noise at `t = 1` to data at
//! `t = 0` along the rectified (linear) schedule `α_t = 1 - t`, `σ_t = t`,
//! so the interpolant is `z_t = (1-t)·x + t·ε` and the target velocity is
//! `ε - x`. Sampling integrates either the deterministic ODE
//! `dz = u dt` or its stochastic counterpart
//!
//! ```text
//! dz = (u - ½ ε_t² ∇log p_t(z)) dt + ε_t dw
//! ```
//!
//! with the score obtained in closed form from the one-step clean
//! prediction `x̂ = z - t·u`:
//!
//! ```text
//! ∇log p_t(z) = -(z - (1-t)·x̂) / t²  =  -(z + (1-t)·u) / t
//! ```
//!
//! Each stochastic transition is an isotropic Gaussian whose mean, std, and
//! exact log-density are recorded, making the sampler a policy with
//! differentiable per-step action densities. With `ε_t ≡ 0` the SDE path
//! reproduces the ODE path bit for bit on the same grid.

mod checkpoint;
mod net;
mod pretrain;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use net::{Adam, ForwardCache, VelocityField, VelocityNet};
pub use pretrain::{flow_pretrain, GaussianMixture, MixtureMode, PretrainConfig};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::tcd::LatentTrajectory;

/// Rectified-flow noise schedule plus the SDE stochasticity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    /// Overall stochasticity level; `0` makes sampling deterministic.
    pub eta: f64,
    pub shape: NoiseShape,
}

/// Functional form of the per-time noise magnitude `ε_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseShape {
    /// `ε_t = η·√(t / (1 - t + delta))`, capped at `cap`: noise proportional
    /// to the remaining noise-to-signal ratio, guarded at the `t = 1` end.
    Scaled { delta: f64, cap: f64 },
    /// Constant `ε_t = η`.
    Constant,
}

impl NoiseSchedule {
    /// Default shape: scaled with `delta = 1e-3`, capped at `2.0`.
    pub fn rectified(eta: f64) -> Self {
        Self {
            eta,
            shape: NoiseShape::Scaled {
                delta: 1e-3,
                cap: 2.0,
            },
        }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        1.0 - t
    }

    pub fn sigma(&self, t: f64) -> f64 {
        t
    }

    /// Noise magnitude `ε_t` at time `t`.
    pub fn noise_level(&self, t: f64) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        match self.shape {
            NoiseShape::Scaled { delta, cap } => {
                (self.eta * (t / (1.0 - t + delta)).sqrt()).min(cap)
            }
            NoiseShape::Constant => self.eta,
        }
    }
}

/// One recorded stochastic transition of the sampler-as-policy.
#[derive(Debug, Clone)]
pub struct SampledStep {
    /// Time of the state the step departs from.
    pub t: f64,
    /// Positive step size `t - t_next`.
    pub dt: f64,
    pub state_before: Vec<f64>,
    pub state_after: Vec<f64>,
    /// Standard normal draw used for the transition (zero when
    /// deterministic), so `state_after = mean + std·action_noise` exactly.
    pub action_noise: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: f64,
    /// Gaussian log-density of `state_after`; `None` for deterministic
    /// steps, where no density exists.
    pub log_density: Option<f64>,
}

impl SampledStep {
    pub fn is_stochastic(&self) -> bool {
        self.std > 0.0
    }
}

/// One sampled generation: the latent trajectory plus per-step transition
/// records and the condition label it was generated under.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub latent: LatentTrajectory,
    pub steps: Vec<SampledStep>,
    pub cond: usize,
}

impl Rollout {
    pub fn transitions(&self) -> usize {
        self.steps.len()
    }

    pub fn final_state(&self) -> &[f64] {
        self.latent.final_state()
    }
}

/// Uniform time grid from the noise end to the data end:
/// `t_j = (steps - j) / steps` for `j = 0..=steps`. The score is only ever
/// evaluated at the departure times `t_0 … t_{steps-1}`, all positive.
pub fn time_grid(steps: usize) -> Vec<f64> {
    assert!(steps >= 1, "need at least one step");
    (0..=steps)
        .map(|j| (steps - j) as f64 / steps as f64)
        .collect()
}

/// Drift of the reverse-time SDE at `(z, t)` given the velocity `u` there.
///
/// Substituting the closed-form score turns the drift into
/// `g(t)·u + h(t)·z` with `g = 1 + ε_t²(1-t)/(2t)` and `h = ε_t²/(2t)`.
/// `ε_t = 0` short-circuits to `u` so the deterministic path is bit-equal
/// to plain Euler on the ODE.
fn drift(z: &[f64], u: &[f64], t: f64, eps_t: f64) -> Vec<f64> {
    if eps_t == 0.0 {
        return u.to_vec();
    }
    let g = 1.0 + eps_t * eps_t * (1.0 - t) / (2.0 * t);
    let h = eps_t * eps_t / (2.0 * t);
    z.iter().zip(u).map(|(zi, ui)| g * ui + h * zi).collect()
}

fn euler_mean(z: &[f64], drift: &[f64], dt: f64) -> Vec<f64> {
    z.iter().zip(drift).map(|(zi, di)| zi - dt * di).collect()
}

fn isotropic_gaussian_logp(x: &[f64], mean: &[f64], std: f64) -> f64 {
    let log_norm = -0.5 * (std::f64::consts::TAU * std * std).ln();
    x.iter()
        .zip(mean)
        .map(|(xi, mi)| {
            let r = xi - mi;
            log_norm - r * r / (2.0 * std * std)
        })
        .sum()
}

/// Deterministic Euler integration of `dz = u dt` from noise to data.
pub fn ode_sample(
    field: &impl VelocityField,
    schedule: &NoiseSchedule,
    z_init: &[f64],
    steps: usize,
    cond: usize,
) -> Result<LatentTrajectory> {
    let _ = schedule; // the deterministic path needs no noise profile
    let times = time_grid(steps);
    let mut states = Vec::with_capacity(steps + 1);
    let mut z = z_init.to_vec();
    crate::numerics::ensure_finite(&z, "ode initial state")?;
    states.push(z.clone());
    for j in 0..steps {
        let t = times[j];
        let dt = t - times[j + 1];
        let u = field.velocity(&z, t, cond);
        z = euler_mean(&z, &u, dt);
        crate::numerics::ensure_finite(&z, "ode state")?;
        states.push(z.clone());
    }
    LatentTrajectory::new(states, times)
}

/// Euler–Maruyama integration of the reverse-time SDE, recording the
/// Gaussian transition of every step. With `η = 0` the trajectory equals
/// [`ode_sample`] exactly and steps are marked non-stochastic.
pub fn sde_sample(
    field: &impl VelocityField,
    schedule: &NoiseSchedule,
    z_init: &[f64],
    steps: usize,
    cond: usize,
    rng: &mut SeededRng,
) -> Result<Rollout> {
    let times = time_grid(steps);
    let d = z_init.len();
    let mut states = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps);
    let mut z = z_init.to_vec();
    crate::numerics::ensure_finite(&z, "sde initial state")?;
    states.push(z.clone());
    for j in 0..steps {
        let t = times[j];
        let dt = t - times[j + 1];
        let u = field.velocity(&z, t, cond);
        let eps_t = schedule.noise_level(t);
        let mean = euler_mean(&z, &drift(&z, &u, t, eps_t), dt);
        let std = eps_t * dt.sqrt();
        let (after, noise, logp) = if std > 0.0 {
            let noise = rng.normal_vec(d);
            let after: Vec<f64> = mean
                .iter()
                .zip(&noise)
                .map(|(m, n)| m + std * n)
                .collect();
            let logp = isotropic_gaussian_logp(&after, &mean, std);
            (after, noise, Some(logp))
        } else {
            (mean.clone(), vec![0.0; d], None)
        };
        crate::numerics::ensure_finite(&after, "sde state")?;
        records.push(SampledStep {
            t,
            dt,
            state_before: z.clone(),
            state_after: after.clone(),
            action_noise: noise,
            mean,
            std,
            log_density: logp,
        });
        z = after;
        states.push(z.clone());
    }
    Ok(Rollout {
        latent: LatentTrajectory::new(states, times)?,
        steps: records,
        cond,
    })
}

/// One-step clean prediction `x̂ = z - t·u(z, t)` under the rectified
/// interpolant (`z = (1-t)x + tε` and `u = ε - x` make this exact).
pub fn predict_final(field: &impl VelocityField, z: &[f64], t: f64, cond: usize) -> Vec<f64> {
    let u = field.velocity(z, t, cond);
    z.iter().zip(&u).map(|(zi, ui)| zi - t * ui).collect()
}

/// Log-density of a recorded step under the current parameters, with its
/// exact parameter gradient.
pub struct LogDensityGrad {
    pub logp: f64,
    pub grad: Vec<f64>,
}

fn recomputed_mean(
    net: &VelocityNet,
    schedule: &NoiseSchedule,
    step: &SampledStep,
    cond: usize,
) -> (Vec<f64>, ForwardCache, f64) {
    let cache = net.forward_cached(&step.state_before, step.t, cond);
    let u = cache.output();
    let eps_t = schedule.noise_level(step.t);
    let mean = euler_mean(
        &step.state_before,
        &drift(&step.state_before, u, step.t, eps_t),
        step.dt,
    );
    // d(mean)/d(u) is the diagonal -dt·g(t).
    let g = if eps_t == 0.0 {
        1.0
    } else {
        1.0 + eps_t * eps_t * (1.0 - step.t) / (2.0 * step.t)
    };
    (mean, cache, -step.dt * g)
}

/// Recompute the step log-density under `net` without gradients.
pub fn step_log_prob(
    net: &VelocityNet,
    schedule: &NoiseSchedule,
    step: &SampledStep,
    cond: usize,
) -> Result<f64> {
    if !step.is_stochastic() {
        return Err(Error::NotStochastic);
    }
    let (mean, _, _) = recomputed_mean(net, schedule, step, cond);
    Ok(isotropic_gaussian_logp(&step.state_after, &mean, step.std))
}

/// Recompute the step log-density and its gradient w.r.t. the network
/// parameters via reverse accumulation through the velocity net.
pub fn step_log_density(
    net: &VelocityNet,
    schedule: &NoiseSchedule,
    step: &SampledStep,
    cond: usize,
) -> Result<LogDensityGrad> {
    if !step.is_stochastic() {
        return Err(Error::NotStochastic);
    }
    let (mean, cache, dmean_du) = recomputed_mean(net, schedule, step, cond);
    let logp = isotropic_gaussian_logp(&step.state_after, &mean, step.std);
    let var = step.std * step.std;
    // d(logp)/d(mean_i) = (x_i - mean_i)/σ², chained through mean = f(u).
    let cot: Vec<f64> = step
        .state_after
        .iter()
        .zip(&mean)
        .map(|(x, m)| (x - m) / var * dmean_du)
        .collect();
    let grad = net.backward(&cache, &cot);
    Ok(LogDensityGrad { logp, grad })
}
