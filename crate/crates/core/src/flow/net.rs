//! Velocity-field network: a small fully-connected net with tanh hidden
//! layers and a linear output, storing its parameters as one flat vector so
//! finite-difference checks, checkpointing, and optimizer updates stay
//! trivial.
//!
//! Input features are `[z_0 … z_{d-1}, t, label]` — the latent coordinates,
//! the continuous time, and the discrete condition label fed as a plain
//! scalar feature.

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Anything that can evaluate a velocity `u(z, t, cond)`. Samplers are
/// generic over this so tests can drive them with closed-form fields.
pub trait VelocityField {
    fn velocity(&self, z: &[f64], t: f64, cond: usize) -> Vec<f64>;
}

/// Fully-connected velocity network `u_θ(z, t, label) → R^d`.
#[derive(Debug, Clone)]
pub struct VelocityNet {
    /// Layer widths, input first, output (`d`) last.
    widths: Vec<usize>,
    /// Per layer: weight matrix (out×in, row-major), then bias (out).
    params: Vec<f64>,
}

/// Activations recorded during a forward pass, for reverse-mode gradients.
pub struct ForwardCache {
    /// Post-activation values per layer, input included as entry 0.
    layers: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("forward produces output")
    }
}

fn param_count_for(widths: &[usize]) -> usize {
    widths
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum::<usize>()
}

impl VelocityNet {
    /// Fresh network for `d`-dimensional latents with the given hidden
    /// widths. Weights are drawn `N(0, 1/fan_in)`, biases start at zero.
    pub fn new(d: usize, hidden: &[usize], rng: &mut SeededRng) -> Self {
        assert!(d > 0, "latent dimension must be positive");
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(d + 2); // z, t, label
        widths.extend_from_slice(hidden);
        widths.push(d);
        let mut params = Vec::with_capacity(param_count_for(&widths));
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.next_normal() * scale);
            }
            params.resize(params.len() + fan_out, 0.0);
        }
        Self { widths, params }
    }

    /// All-zero parameters; the velocity is identically zero.
    pub fn zeroed(d: usize, hidden: &[usize]) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(d + 2);
        widths.extend_from_slice(hidden);
        widths.push(d);
        let params = vec![0.0; param_count_for(&widths)];
        Self { widths, params }
    }

    /// Rebuild a network from checkpointed widths and parameters.
    pub fn from_parts(widths: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "bad layer widths {widths:?}"
            )));
        }
        let expect = param_count_for(&widths);
        if params.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "expected {expect} parameters for widths {widths:?}, got {}",
                params.len()
            )));
        }
        crate::numerics::ensure_finite(&params, "network parameters")?;
        Ok(Self { widths, params })
    }

    /// Latent dimension (output width).
    pub fn dim(&self) -> usize {
        *self.widths.last().expect("validated")
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn features(&self, z: &[f64], t: f64, cond: usize) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim());
        let mut input = Vec::with_capacity(z.len() + 2);
        input.extend_from_slice(z);
        input.push(t);
        input.push(cond as f64);
        input
    }

    pub fn forward(&self, z: &[f64], t: f64, cond: usize) -> Vec<f64> {
        self.forward_cached(z, t, cond).layers.pop().expect("output")
    }

    /// Forward pass keeping every activation for a later backward pass.
    pub fn forward_cached(&self, z: &[f64], t: f64, cond: usize) -> ForwardCache {
        let n_layers = self.widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(self.features(z, t, cond));
        let mut offset = 0;
        for (l, w) in self.widths.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let input = layers.last().expect("previous layer");
            let mut out = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let mut acc = biases[o];
                for (wi, xi) in row.iter().zip(input) {
                    acc += wi * xi;
                }
                // tanh on hidden layers, linear output.
                out.push(if l + 1 < n_layers { acc.tanh() } else { acc });
            }
            layers.push(out);
        }
        ForwardCache { layers }
    }

    /// Parameter gradient of `⟨cotangent, output⟩` by reverse accumulation.
    pub fn backward(&self, cache: &ForwardCache, output_cotangent: &[f64]) -> Vec<f64> {
        let n_layers = self.widths.len() - 1;
        debug_assert_eq!(output_cotangent.len(), self.dim());
        debug_assert_eq!(cache.layers.len(), n_layers + 1);

        let mut grad = vec![0.0; self.params.len()];
        // Layer parameter offsets, front to back.
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for w in self.widths.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }

        let mut delta = output_cotangent.to_vec(); // d(objective)/d(post-activation)
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let base = offsets[l];
            let input = &cache.layers[l];
            let output = &cache.layers[l + 1];
            // Through the activation: linear output layer passes unchanged,
            // hidden layers multiply by 1 - tanh².
            let mut dpre = delta;
            if l + 1 < n_layers {
                for (dp, y) in dpre.iter_mut().zip(output) {
                    *dp *= 1.0 - y * y;
                }
            }
            for o in 0..n_out {
                let row = base + o * n_in;
                let d = dpre[o];
                for (i, xi) in input.iter().enumerate() {
                    grad[row + i] += d * xi;
                }
                grad[base + n_in * n_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[base..base + n_in * n_out];
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                for (ni, wi) in next.iter_mut().zip(row) {
                    *ni += dpre[o] * wi;
                }
            }
            delta = next;
        }
        grad
    }
}

impl VelocityField for VelocityNet {
    fn velocity(&self, z: &[f64], t: f64, cond: usize) -> Vec<f64> {
        self.forward(z, t, cond)
    }
}

/// Plain Adam over a flat parameter vector (minimization).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// One descent step along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroed_net_outputs_zero() {
        let net = VelocityNet::zeroed(2, &[8, 8]);
        assert_eq!(net.forward(&[1.3, -0.4], 0.5, 2), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = SeededRng::new(1);
        let net = VelocityNet::new(2, &[16], &mut rng);
        let a = net.forward(&[0.1, 0.2], 0.7, 1);
        let b = net.forward(&[0.1, 0.2], 0.7, 1);
        assert_eq!(a, b);
    }

    #[test]
    fn param_count_matches_layout() {
        let net = VelocityNet::zeroed(2, &[8, 8]);
        // (4*8+8) + (8*8+8) + (8*2+2)
        assert_eq!(net.param_count(), 40 + 72 + 18);
        assert_eq!(net.widths(), &[4, 8, 8, 2]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = SeededRng::new(7);
        let net = VelocityNet::new(2, &[6, 5], &mut rng);
        let z = [0.3, -0.8];
        let (t, cond) = (0.4, 1);
        let cot = [0.7, -1.2];

        let cache = net.forward_cached(&z, t, cond);
        let grad = net.backward(&cache, &cot);

        let h = 1e-6;
        let mut worst = 0.0f64;
        for p in 0..net.param_count() {
            let mut plus = net.clone();
            plus.params_mut()[p] += h;
            let mut minus = net.clone();
            minus.params_mut()[p] -= h;
            let f = |n: &VelocityNet| -> f64 {
                let out = n.forward(&z, t, cond);
                out.iter().zip(&cot).map(|(o, c)| o * c).sum()
            };
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let denom = fd.abs().max(grad[p].abs()).max(1e-8);
            worst = worst.max((fd - grad[p]).abs() / denom);
        }
        assert!(worst < 1e-5, "worst relative gradient error {worst}");
    }

    #[test]
    fn adam_reduces_a_quadratic() {
        let mut params = vec![5.0, -3.0];
        let mut opt = Adam::new(2, 0.1);
        for _ in 0..500 {
            let grad: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
            opt.step(&mut params, &grad);
        }
        assert!(params.iter().all(|p| p.abs() < 1e-3));
    }
}
