//! Diagonal Gaussian policy over a normalized action box.
//!
//! The mean network maps a standardized observation to 7 action means;
//! a state-independent `log_std` vector sets per-dimension exploration.
//! Sampling happens in the normalized box `[-1, 1]^7`: the Gaussian draw
//! is kept unclamped for the density math (PPO ratios need the true
//! density of what was sampled), while the environment receives the
//! clamped draw scaled by the motor force limit.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::nn::{ForwardCache, Mlp};
use crate::{LearnError, Result};

pub const ACTION_DIM: usize = sim_core::NUM_JOINTS;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    /// ln of per-dimension standard deviation, in normalized action
    /// units. Initialized at ln(0.5): half the box as one sigma.
    pub log_std: [f64; ACTION_DIM],
}

/// One sampled act: the raw Gaussian draw (for densities and ratios)
/// and the boxed, force-scaled command the environment executes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySample {
    /// Unclamped draw in normalized units.
    pub raw: [f64; ACTION_DIM],
    /// `clamp(raw, -1, 1) * max_force`, ready for the environment.
    pub env_action: [f64; ACTION_DIM],
    /// Diagonal Gaussian log-density of `raw`.
    pub log_prob: f64,
}

impl GaussianPolicy {
    pub fn new(obs_dim: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(ACTION_DIM);
        let mut mean_net = Mlp::new(&sizes, rng);
        // A quiet head keeps initial means near zero so early exploration
        // comes from the sigma, not from arbitrary init weights.
        mean_net.scale_output_layer(0.01);
        Self { mean_net, log_std: [0.5f64.ln(); ACTION_DIM] }
    }

    pub fn obs_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    /// Flat parameter vector: mean network, then log_std.
    pub fn param_count(&self) -> usize {
        self.mean_net.params().len() + ACTION_DIM
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.mean_net.params());
        out.extend_from_slice(&self.log_std);
    }

    pub fn read_params(&mut self, params: &[f64]) {
        let net_len = self.mean_net.params().len();
        assert_eq!(params.len(), net_len + ACTION_DIM);
        self.mean_net.params_mut().copy_from_slice(&params[..net_len]);
        self.log_std.copy_from_slice(&params[net_len..]);
    }

    fn checked_mean(&self, obs: &[f64]) -> Result<(ForwardCache, [f64; ACTION_DIM])> {
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite { context: "policy observation" });
        }
        let cache = self.mean_net.forward_cached(obs);
        let out = cache.output();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite { context: "policy mean output" });
        }
        let mut mean = [0.0; ACTION_DIM];
        mean.copy_from_slice(out);
        Ok((cache, mean))
    }

    /// Forward pass plus cache, for update-time gradient work.
    pub fn mean_cached(&self, obs: &[f64]) -> Result<(ForwardCache, [f64; ACTION_DIM])> {
        self.checked_mean(obs)
    }

    pub fn sample(
        &self,
        obs: &[f64],
        max_force: f64,
        rng: &mut impl Rng,
    ) -> Result<PolicySample> {
        let (_, mean) = self.checked_mean(obs)?;
        let mut raw = [0.0; ACTION_DIM];
        let mut env_action = [0.0; ACTION_DIM];
        for i in 0..ACTION_DIM {
            let z: f64 = rng.sample(StandardNormal);
            raw[i] = mean[i] + self.log_std[i].exp() * z;
            env_action[i] = raw[i].clamp(-1.0, 1.0) * max_force;
        }
        Ok(PolicySample { raw, env_action, log_prob: self.density(&mean, &raw) })
    }

    /// Deterministic evaluation action: the clamped, scaled mean.
    pub fn mean_action(&self, obs: &[f64], max_force: f64) -> Result<[f64; ACTION_DIM]> {
        let (_, mean) = self.checked_mean(obs)?;
        let mut action = [0.0; ACTION_DIM];
        for i in 0..ACTION_DIM {
            action[i] = mean[i].clamp(-1.0, 1.0) * max_force;
        }
        Ok(action)
    }

    /// Log-density of a raw (unclamped) action at the given mean.
    pub fn density(&self, mean: &[f64; ACTION_DIM], raw: &[f64; ACTION_DIM]) -> f64 {
        let mut lp = 0.0;
        for i in 0..ACTION_DIM {
            let std = self.log_std[i].exp();
            let z = (raw[i] - mean[i]) / std;
            lp += -0.5 * z * z - self.log_std[i] - HALF_LN_2PI;
        }
        lp
    }

    pub fn log_prob(&self, obs: &[f64], raw: &[f64; ACTION_DIM]) -> Result<f64> {
        let (_, mean) = self.checked_mean(obs)?;
        Ok(self.density(&mean, raw))
    }

    /// Differential entropy of the diagonal Gaussian; independent of the
    /// observation because the sigma is state-independent.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
    }
}
