//! Fully connected sigmoid network with a choice of output head.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AsPayoffs, Role, PAYOFF_MAX};
use crate::math;
use crate::rng;

pub const INPUT_DIM: usize = 8;

/// Output transformation applied to the final linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Two logits through a softmax; the first entry is `p(first action)`.
    Probability,
    /// One value through softplus, strictly positive.
    Positive,
    /// Four logits through a softmax (weights over levels 0..=3).
    Simplex4,
}

impl Head {
    pub fn raw_dim(self) -> usize {
        match self {
            Head::Probability => 2,
            Head::Positive => 1,
            Head::Simplex4 => 4,
        }
    }

    /// Head outputs from raw outputs.
    pub fn forward(self, raw: &[f64]) -> Vec<f64> {
        match self {
            Head::Probability => {
                let p = math::logistic(raw[0] - raw[1]);
                vec![p, math::logistic(raw[1] - raw[0])]
            }
            Head::Positive => vec![math::softplus(raw[0]) + f64::MIN_POSITIVE],
            Head::Simplex4 => softmax(raw),
        }
    }

    /// Gradient with respect to the raw outputs, given the gradient with
    /// respect to the head outputs `out = forward(raw)`.
    pub fn backward(self, raw: &[f64], out: &[f64], d_out: &[f64], d_raw: &mut [f64]) {
        match self {
            Head::Probability => {
                let g = (d_out[0] - d_out[1]) * out[0] * out[1];
                d_raw[0] = g;
                d_raw[1] = -g;
            }
            Head::Positive => d_raw[0] = d_out[0] * math::logistic(raw[0]),
            Head::Simplex4 => {
                let dot: f64 = out.iter().zip(d_out).map(|(p, g)| p * g).sum();
                for i in 0..out.len() {
                    d_raw[i] = out[i] * (d_out[i] - dot);
                }
            }
        }
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| math::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub head: Head,
}

impl MlpConfig {
    /// Three hidden layers of 300 units.
    pub fn standard(head: Head) -> Self {
        MlpConfig { input_dim: INPUT_DIM, hidden: vec![300, 300, 300], head }
    }

    pub fn with_hidden(head: Head, hidden: &[usize]) -> Self {
        MlpConfig { input_dim: INPUT_DIM, hidden: hidden.to_vec(), head }
    }

    fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim];
        d.extend_from_slice(&self.hidden);
        d.push(self.head.raw_dim());
        d
    }

    pub fn param_count(&self) -> usize {
        self.dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Network input: the game from `role`'s point of view, payoffs scaled by
/// the maximum payoff into `(0, 1]`.
pub fn game_input(g: &impl AsPayoffs, role: Role) -> [f64; INPUT_DIM] {
    let p = g.payoffs().perspective(role);
    let s = f64::from(PAYOFF_MAX);
    let [a, b, c, d] = p.row;
    let [x, y, z, w] = p.col;
    [a / s, b / s, c / s, d / s, x / s, y / s, z / s, w / s]
}

/// Parameters of all layers in one flat vector: for each layer the
/// `out x in` weights (row-major) followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    pub params: Vec<f64>,
}

/// Activations of a batch forward pass, kept for backpropagation.
pub struct Cache {
    batch: usize,
    /// Input followed by every layer's output (raw outputs last).
    acts: Vec<Vec<f64>>,
}

impl Cache {
    /// Raw outputs, `batch x raw_dim`.
    pub fn raw(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

fn sigmoid(z: f64) -> f64 {
    math::logistic(z)
}

impl Mlp {
    /// Uniform initialization in `±1/sqrt(fan_in)`.
    pub fn new(config: MlpConfig, seed: u64) -> Self {
        let mut r = rng::stream(seed, 0);
        let mut params = Vec::with_capacity(config.param_count());
        for w in config.dims().windows(2) {
            let bound = 1.0 / math::sqrt(w[0] as f64);
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(r.gen_range(-bound..=bound));
            }
        }
        Mlp { config, params }
    }

    pub fn zeros(config: MlpConfig) -> Self {
        let n = config.param_count();
        Mlp { config, params: vec![0.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.config.param_count() {
            return Err(Error::InvalidInput(alloc::format!(
                "network has {} parameters, its shape needs {}",
                self.params.len(),
                self.config.param_count()
            )));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Overwrite the biases of the output layer.
    pub fn set_output_bias(&mut self, bias: &[f64]) {
        let n = self.params.len();
        let k = bias.len().min(self.config.head.raw_dim());
        self.params[n - self.config.head.raw_dim()..][..k].copy_from_slice(&bias[..k]);
    }

    /// `(offset, fan_in, fan_out)` per layer.
    fn layers(&self) -> Vec<(usize, usize, usize)> {
        let mut offset = 0;
        let mut out = Vec::new();
        for w in self.config.dims().windows(2) {
            out.push((offset, w[0], w[1]));
            offset += w[0] * w[1] + w[1];
        }
        out
    }

    /// Forward pass over `batch` inputs stored row-major.
    pub fn forward(&self, inputs: &[f64], batch: usize) -> Cache {
        let mut acts = vec![inputs.to_vec()];
        let layers = self.layers();
        let last = layers.len() - 1;
        for (l, &(offset, n_in, n_out)) in layers.iter().enumerate() {
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let x = &acts[l];
            let mut out = vec![0.0; batch * n_out];
            for row in out.chunks_exact_mut(n_out) {
                row.copy_from_slice(b);
            }
            // out += x * w^T
            unsafe {
                matrixmultiply::dgemm(
                    batch, n_in, n_out, 1.0,
                    x.as_ptr(), n_in as isize, 1,
                    w.as_ptr(), 1, n_in as isize,
                    1.0,
                    out.as_mut_ptr(), n_out as isize, 1,
                );
            }
            if l != last {
                for v in out.iter_mut() {
                    *v = sigmoid(*v);
                }
            }
            acts.push(out);
        }
        Cache { batch, acts }
    }

    /// Accumulate parameter gradients into `grad` given the gradient of the
    /// loss with respect to the raw outputs (`batch x raw_dim`).
    pub fn backward(&self, cache: &Cache, d_raw: &[f64], grad: &mut [f64]) {
        let layers = self.layers();
        let batch = cache.batch;
        let mut delta = d_raw.to_vec();
        for l in (0..layers.len()).rev() {
            let (offset, n_in, n_out) = layers[l];
            let x = &cache.acts[l];
            let (gw, rest) = grad[offset..].split_at_mut(n_in * n_out);
            // gw += delta^T * x
            unsafe {
                matrixmultiply::dgemm(
                    n_out, batch, n_in, 1.0,
                    delta.as_ptr(), 1, n_out as isize,
                    x.as_ptr(), n_in as isize, 1,
                    1.0,
                    gw.as_mut_ptr(), n_in as isize, 1,
                );
            }
            let gb = &mut rest[..n_out];
            for row in delta.chunks_exact(n_out) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[offset..offset + n_in * n_out];
            let mut d_x = vec![0.0; batch * n_in];
            unsafe {
                matrixmultiply::dgemm(
                    batch, n_out, n_in, 1.0,
                    delta.as_ptr(), n_out as isize, 1,
                    w.as_ptr(), n_in as isize, 1,
                    0.0,
                    d_x.as_mut_ptr(), n_in as isize, 1,
                );
            }
            // through the sigmoid that produced x
            for (d, a) in d_x.iter_mut().zip(x) {
                *d *= a * (1.0 - a);
            }
            delta = d_x;
        }
    }

    /// Head outputs for a single input.
    pub fn predict(&self, input: &[f64]) -> Vec<f64> {
        let cache = self.forward(input, 1);
        self.config.head.forward(cache.raw())
    }

    /// Head outputs for each row of a batch.
    pub fn predict_batch(&self, inputs: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let cache = self.forward(inputs, batch);
        let k = self.config.head.raw_dim();
        cache.raw().chunks_exact(k).map(|r| self.config.head.forward(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_is_symmetric() {
        let x = [0.5; INPUT_DIM];
        assert_eq!(Mlp::zeros(MlpConfig::with_hidden(Head::Probability, &[4])).predict(&x), [0.5, 0.5]);
        assert_eq!(Mlp::zeros(MlpConfig::with_hidden(Head::Simplex4, &[4])).predict(&x), [0.25; 4]);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = Mlp::new(MlpConfig::with_hidden(Head::Probability, &[16, 8]), 3);
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let a = net.predict(&x);
        assert_eq!(a, net.predict(&x));
        assert!((a[0] + a[1] - 1.0).abs() < 1e-15);
        assert_eq!(Mlp::new(net.config.clone(), 3), net);
    }

    #[test]
    fn positive_head_never_zero() {
        let mut net = Mlp::zeros(MlpConfig::with_hidden(Head::Positive, &[2]));
        net.set_output_bias(&[-1e4]);
        assert!(net.predict(&[0.0; INPUT_DIM])[0] > 0.0);
    }

    #[test]
    fn batch_matches_single() {
        let net = Mlp::new(MlpConfig::with_hidden(Head::Simplex4, &[5, 3]), 1);
        let xs: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let batch = net.predict_batch(&xs, 3);
        for (i, out) in batch.iter().enumerate() {
            let single = net.predict(&xs[i * 8..(i + 1) * 8]);
            for (a, b) in out.iter().zip(&single) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn param_count() {
        assert_eq!(MlpConfig::standard(Head::Probability).param_count(), 8 * 300 + 300 + 2 * (300 * 300 + 300) + 300 * 2 + 2);
    }
}
