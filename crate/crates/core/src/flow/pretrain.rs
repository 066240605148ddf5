//! Flow-matching pretraining on labeled Gaussian-mixture data.
//!
//! Standard rectified-flow regression: draw `(x, label)` from the data,
//! `ε ~ N(0, I)`, `t ~ U(0, 1)`, form `z_t = (1-t)x + tε`, and fit
//! `u_θ(z_t, t, label)` to the interpolant velocity `ε - x` by mean squared
//! error.

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

use super::net::{Adam, VelocityNet};

/// One mixture component with its condition label.
#[derive(Debug, Clone)]
pub struct MixtureMode {
    pub mean: Vec<f64>,
    pub std: f64,
    pub weight: f64,
    pub label: usize,
}

/// Labeled Gaussian mixture; the desk-scale stand-in for a prompt-
/// conditioned data distribution.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    modes: Vec<MixtureMode>,
    total_weight: f64,
}

impl GaussianMixture {
    pub fn new(modes: Vec<MixtureMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::TooFewValues {
                what: "mixture modes",
                needed: 1,
                got: 0,
            });
        }
        let d = modes[0].mean.len();
        for m in &modes {
            if m.mean.len() != d {
                return Err(Error::ShapeMismatch(
                    "mixture modes of mixed dimension".into(),
                ));
            }
            crate::numerics::ensure_finite(&m.mean, "mixture mean")?;
            if m.std.is_nan() || m.std <= 0.0 || !m.std.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mixture std must be positive, got {}",
                    m.std
                )));
            }
            if m.weight.is_nan() || m.weight <= 0.0 || !m.weight.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mixture weight must be positive, got {}",
                    m.weight
                )));
            }
        }
        let total_weight = modes.iter().map(|m| m.weight).sum();
        Ok(Self {
            modes,
            total_weight,
        })
    }

    pub fn dim(&self) -> usize {
        self.modes[0].mean.len()
    }

    pub fn modes(&self) -> &[MixtureMode] {
        &self.modes
    }

    /// Number of distinct condition labels (max label + 1).
    pub fn label_count(&self) -> usize {
        self.modes.iter().map(|m| m.label).max().unwrap_or(0) + 1
    }

    /// One draw: sample a mode by weight, then its Gaussian.
    pub fn sample(&self, rng: &mut SeededRng) -> (Vec<f64>, usize) {
        let mut pick = rng.next_f64() * self.total_weight;
        let mut chosen = &self.modes[self.modes.len() - 1];
        for m in &self.modes {
            if pick < m.weight {
                chosen = m;
                break;
            }
            pick -= m.weight;
        }
        let x: Vec<f64> = chosen
            .mean
            .iter()
            .map(|m| m + chosen.std * rng.next_normal())
            .collect();
        (x, chosen.label)
    }

    /// A fixed dataset of `n` labeled points.
    pub fn sample_dataset(&self, n: usize, rng: &mut SeededRng) -> Vec<(Vec<f64>, usize)> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PretrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            steps: 4000,
            batch: 64,
            lr: 3e-3,
            seed: 0,
        }
    }
}

fn batch_loss_and_grad(
    net: &VelocityNet,
    dataset: &[(Vec<f64>, usize)],
    batch: usize,
    rng: &mut SeededRng,
    grad: Option<&mut Vec<f64>>,
) -> f64 {
    let d = net.dim();
    let mut loss = 0.0;
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    for _ in 0..batch {
        let (x, label) = &dataset[rng.next_index(dataset.len())];
        let t = rng.next_f64();
        let noise = rng.normal_vec(d);
        let z: Vec<f64> = x
            .iter()
            .zip(&noise)
            .map(|(xi, ni)| (1.0 - t) * xi + t * ni)
            .collect();
        let target: Vec<f64> = noise.iter().zip(x).map(|(ni, xi)| ni - xi).collect();
        let cache = net.forward_cached(&z, t, *label);
        let residual: Vec<f64> = cache
            .output()
            .iter()
            .zip(&target)
            .map(|(u, tg)| u - tg)
            .collect();
        loss += residual.iter().map(|r| r * r).sum::<f64>();
        if let Some(g) = grad.as_deref_mut() {
            let cot: Vec<f64> = residual.iter().map(|r| 2.0 * r / batch as f64).collect();
            let sample_grad = net.backward(&cache, &cot);
            crate::numerics::axpy(g, 1.0, &sample_grad);
        }
    }
    loss / batch as f64
}

/// Train `net` by flow matching on the dataset; returns the final
/// validation loss (one large held-out batch). Zero steps leave the
/// parameters untouched.
pub fn flow_pretrain(
    dataset: &[(Vec<f64>, usize)],
    net: &mut VelocityNet,
    config: &PretrainConfig,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::TooFewValues {
            what: "pretraining dataset",
            needed: 1,
            got: 0,
        });
    }
    for (x, _) in dataset {
        if x.len() != net.dim() {
            return Err(Error::ShapeMismatch(format!(
                "dataset dimension {} vs network {}",
                x.len(),
                net.dim()
            )));
        }
        crate::numerics::ensure_finite(x, "dataset point")?;
    }
    let mut rng = SeededRng::new(config.seed);
    let mut opt = Adam::new(net.param_count(), config.lr);
    let mut grad = vec![0.0; net.param_count()];
    for step in 0..config.steps {
        let loss = batch_loss_and_grad(net, dataset, config.batch, &mut rng, Some(&mut grad));
        if !loss.is_finite() {
            return Err(Error::Diverged(format!(
                "pretraining loss became non-finite at step {step}"
            )));
        }
        opt.step(net.params_mut(), &grad);
    }
    let val = batch_loss_and_grad(net, dataset, 256.max(config.batch), &mut rng, None);
    if !val.is_finite() {
        return Err(Error::Diverged("validation loss non-finite".into()));
    }
    Ok(val)
}
