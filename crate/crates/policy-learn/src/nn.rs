//! Minimal feedforward network: tanh hidden layers, linear output,
//! hand-written backpropagation over a flat parameter vector.
//!
//! The flat layout (per layer: row-major weights, then biases) is shared
//! by [`MlpGradients`], the optimizer and checkpoints, so parameters can
//! be treated as one opaque `&[f64]` everywhere outside this module.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths, input first, output last.
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Gradient accumulator with the same flat layout as [`Mlp::params`].
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub params: Vec<f64>,
}

/// Post-activation values per layer, input included; everything the
/// backward pass needs.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache always holds the input layer")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.gen_range(-bound..bound));
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Self { sizes: sizes.to_vec(), params }
    }

    /// Shrink the output layer's weights. A near-zero head keeps early
    /// policy means near the origin, which tames the first updates.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.sizes.len() - 2;
        let offset: usize = param_count(&self.sizes[..=last]);
        for p in &mut self.params[offset..] {
            *p *= factor;
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Rebuild from a flat parameter vector (checkpoint load).
    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        (params.len() == param_count(sizes))
            .then(|| Self { sizes: sizes.to_vec(), params })
    }

    pub fn zero_gradients(&self) -> MlpGradients {
        MlpGradients { params: vec![0.0; self.params.len()] }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).output().to_vec()
    }

    pub fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        assert_eq!(input.len(), self.sizes[0], "input width mismatch");
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(input.to_vec());
        let mut offset = 0;
        let last_layer = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let prev = activations.last().unwrap();
            let mut out = Vec::with_capacity(fan_out);
            for i in 0..fan_out {
                let row = &weights[i * fan_in..(i + 1) * fan_in];
                let z: f64 = biases[i]
                    + row.iter().zip(prev.iter()).map(|(w, a)| w * a).sum::<f64>();
                out.push(if l == last_layer { z } else { z.tanh() });
            }
            activations.push(out);
            offset += fan_in * fan_out + fan_out;
        }
        ForwardCache { activations }
    }

    /// Accumulate parameter gradients for one sample given `dL/d output`.
    /// Returns nothing; chain further samples by reusing `grads`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut MlpGradients) {
        assert_eq!(grad_output.len(), self.output_dim());
        assert_eq!(grads.params.len(), self.params.len());

        // Visit layers in reverse; `delta` is dL/dz for the current layer.
        let mut delta = grad_output.to_vec();
        let layer_offsets: Vec<usize> = {
            let mut offs = vec![0];
            for w in self.sizes.windows(2) {
                offs.push(offs.last().unwrap() + w[0] * w[1] + w[1]);
            }
            offs
        };
        for l in (0..self.sizes.len() - 1).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let offset = layer_offsets[l];
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let input = &cache.activations[l];

            let (grad_w, grad_b) = grads.params[offset..offset + fan_in * fan_out + fan_out]
                .split_at_mut(fan_in * fan_out);
            let mut grad_input = vec![0.0; fan_in];
            for i in 0..fan_out {
                grad_b[i] += delta[i];
                let row = &weights[i * fan_in..(i + 1) * fan_in];
                let grad_row = &mut grad_w[i * fan_in..(i + 1) * fan_in];
                for j in 0..fan_in {
                    grad_row[j] += delta[i] * input[j];
                    grad_input[j] += delta[i] * row[j];
                }
            }
            if l > 0 {
                // The layer below is tanh: convert dL/da into dL/dz.
                for (g, a) in grad_input.iter_mut().zip(input.iter()) {
                    *g *= 1.0 - a * a;
                }
            }
            delta = grad_input;
        }
    }
}
