//! Clipped-surrogate policy optimization.
//!
//! One update runs several epochs of shuffled minibatches over a frozen
//! rollout batch. Policy, log-std and value parameters live in a single
//! concatenated vector driven by one adaptive-moment optimizer, and the
//! gradient norm clip is global across all of them, so the three pieces
//! cannot drift apart in scale.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::adam::Adam;
use crate::nn::{Mlp, MlpGradients};
use crate::policy::{GaussianPolicy, ACTION_DIM};
use crate::rollout::RolloutBatch;
use crate::{LearnError, Result};

/// Update hyperparameters.
///
/// The originating method does not publish values for this task, so the
/// defaults are conventional continuous-control settings; integration
/// tests pin the behavior they produce.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub gae_lambda: f64,
    /// Shared with the environment's return definition.
    pub discount: f64,
    pub learning_rate: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    /// Environment steps collected per update, summed across workers.
    pub steps_per_update: usize,
    pub value_loss_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            gae_lambda: 0.95,
            discount: 0.99,
            learning_rate: 3e-4,
            epochs_per_update: 10,
            minibatch_size: 256,
            steps_per_update: 9600,
            value_loss_coef: 0.5,
            entropy_coef: 0.003,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(LearnError::BadConfig(msg.into()));
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad("discount must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.epochs_per_update == 0 || self.minibatch_size == 0 || self.steps_per_update == 0 {
            return bad("epochs_per_update, minibatch_size and steps_per_update must be nonzero");
        }
        if !(self.value_loss_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }
}

/// Aggregated over every epoch and minibatch of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// `-mean(min(rho*A, clip(rho)*A))`, the quantity being minimized.
    pub policy_loss: f64,
    /// Mean squared error of the value head against return targets.
    pub value_loss: f64,
    pub entropy: f64,
    /// `mean(rho - 1 - ln(rho))`, a low-variance non-negative KL estimate.
    pub approx_kl: f64,
    /// Fraction of samples whose ratio left the `[1-eps, 1+eps]` band.
    pub clip_frac: f64,
}

/// Per-sample clipped surrogate objective (the quantity maximized).
pub fn clipped_objective(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// In-place shift to mean 0, scale to std 1 (population). A batch of one
/// sample is only centered; there is no spread to rescale.
pub fn normalize_advantages(advantages: &mut [f64]) {
    let n = advantages.len();
    if n == 0 {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n as f64;
    for a in advantages.iter_mut() {
        *a -= mean;
    }
    if n > 1 {
        let std = (advantages.iter().map(|a| a * a).sum::<f64>() / n as f64).sqrt();
        if std > 1e-12 {
            for a in advantages.iter_mut() {
                *a /= std;
            }
        }
    }
}

/// Gradients in the concatenated layout: policy mean net, log-std,
/// value net.
struct FlatGrads {
    policy_net: MlpGradients,
    log_std: [f64; ACTION_DIM],
    value_net: MlpGradients,
}

struct MinibatchEval {
    total_loss: f64,
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    kl_sum: f64,
    clipped: usize,
}

/// Loss (and optionally gradients) of one minibatch at the current
/// parameters. Kept separate from the optimizer step so tests can probe
/// the same scalar with finite differences.
fn eval_minibatch(
    policy: &GaussianPolicy,
    value: &Mlp,
    batch: &RolloutBatch,
    advantages: &[f64],
    indices: &[usize],
    cfg: &PpoConfig,
    mut grads: Option<&mut FlatGrads>,
) -> Result<MinibatchEval> {
    let b = indices.len() as f64;
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut kl_sum = 0.0;
    let mut clipped = 0;

    for &i in indices {
        let obs = batch.obs_row(i);
        let advantage = advantages[i];
        let (policy_cache, mean) = policy.mean_cached(obs)?;
        let log_prob_new = policy.density(&mean, &batch.actions[i]);
        let log_ratio = log_prob_new - batch.log_probs[i];
        let ratio = log_ratio.exp();

        let unclipped = ratio * advantage;
        let clipped_term = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * advantage;
        policy_loss -= unclipped.min(clipped_term) / b;
        kl_sum += ratio - 1.0 - log_ratio;
        if (ratio - 1.0).abs() > cfg.clip_epsilon {
            clipped += 1;
        }

        let value_cache = value.forward_cached(obs);
        let value_error = value_cache.output()[0] - batch.returns[i];
        value_loss += value_error * value_error / b;

        if let Some(g) = grads.as_deref_mut() {
            // The clipped branch is constant in the parameters, so only
            // samples on the unclipped branch push on the policy.
            if unclipped <= clipped_term {
                let d_log_prob = -ratio * advantage / b;
                let mut d_mean = [0.0; ACTION_DIM];
                for d in 0..ACTION_DIM {
                    let std = policy.log_std[d].exp();
                    let z = (batch.actions[i][d] - mean[d]) / std;
                    d_mean[d] = d_log_prob * z / std;
                    g.log_std[d] += d_log_prob * (z * z - 1.0);
                }
                policy.mean_net.backward(&policy_cache, &d_mean, &mut g.policy_net);
            }
            let d_value = cfg.value_loss_coef * 2.0 * value_error / b;
            value.backward(&value_cache, &[d_value], &mut g.value_net);
        }
    }

    let entropy = policy.entropy();
    if let Some(g) = grads.as_deref_mut() {
        for d in 0..ACTION_DIM {
            g.log_std[d] -= cfg.entropy_coef;
        }
    }

    let total_loss = policy_loss + cfg.value_loss_coef * value_loss - cfg.entropy_coef * entropy;
    Ok(MinibatchEval { total_loss, policy_loss, value_loss, entropy, kl_sum, clipped })
}

fn clip_global_norm(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
}

/// Runs one full PPO update in place. On any non-finite loss the
/// parameters are left partially updated and an error is returned; the
/// caller decides whether to restore a snapshot.
pub fn ppo_update(
    policy: &mut GaussianPolicy,
    value: &mut Mlp,
    optimizer: &mut Adam,
    batch: &RolloutBatch,
    cfg: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<UpdateStats> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(LearnError::BadConfig("empty rollout batch".into()));
    }

    let mut advantages = batch.advantages.clone();
    normalize_advantages(&mut advantages);

    let policy_len = policy.param_count();
    let value_len = value.params().len();
    let mut indices: Vec<usize> = (0..batch.len()).collect();

    let mut stat_sums = (0.0, 0.0, 0.0, 0.0); // policy, value, entropy, kl
    let mut clipped_total = 0usize;
    let mut sample_passes = 0usize;
    let mut minibatches = 0usize;

    for _ in 0..cfg.epochs_per_update {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.minibatch_size) {
            let mut grads = FlatGrads {
                policy_net: policy.mean_net.zero_gradients(),
                log_std: [0.0; ACTION_DIM],
                value_net: value.zero_gradients(),
            };
            let eval =
                eval_minibatch(policy, value, batch, &advantages, chunk, cfg, Some(&mut grads))?;
            if !eval.total_loss.is_finite() {
                return Err(LearnError::NonFinite { context: "minibatch loss" });
            }

            let mut flat_grads = Vec::with_capacity(policy_len + value_len);
            flat_grads.extend_from_slice(&grads.policy_net.params);
            flat_grads.extend_from_slice(&grads.log_std);
            flat_grads.extend_from_slice(&grads.value_net.params);
            clip_global_norm(&mut flat_grads, cfg.max_grad_norm);

            let mut flat_params = Vec::with_capacity(policy_len + value_len);
            policy.write_params(&mut flat_params);
            flat_params.extend_from_slice(value.params());
            optimizer.step(&mut flat_params, &flat_grads);
            policy.read_params(&flat_params[..policy_len]);
            value.params_mut().copy_from_slice(&flat_params[policy_len..]);

            stat_sums.0 += eval.policy_loss;
            stat_sums.1 += eval.value_loss;
            stat_sums.2 += eval.entropy;
            stat_sums.3 += eval.kl_sum;
            clipped_total += eval.clipped;
            sample_passes += chunk.len();
            minibatches += 1;
        }
    }

    let m = minibatches as f64;
    Ok(UpdateStats {
        policy_loss: stat_sums.0 / m,
        value_loss: stat_sums.1 / m,
        entropy: stat_sums.2 / m,
        approx_kl: stat_sums.3 / sample_passes as f64,
        clip_frac: clipped_total as f64 / sample_passes as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assume, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Synthesizes a small consistent batch. Old log-probs come from a
    /// perturbed copy of the policy so ratios start away from 1.
    fn synthetic_batch(
        policy: &GaussianPolicy,
        value: &Mlp,
        n: usize,
        perturb: f64,
        seed: u64,
    ) -> RolloutBatch {
        let obs_dim = policy.obs_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut behavior = policy.clone();
        for p in behavior.mean_net.params_mut() {
            *p += perturb * (rng.gen::<f64>() - 0.5);
        }

        let mut batch = RolloutBatch {
            obs_dim,
            obs: Vec::new(),
            raw_obs: Vec::new(),
            actions: Vec::new(),
            log_probs: Vec::new(),
            values: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        };
        for _ in 0..n {
            let obs: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sample = behavior.sample(&obs, 200.0, &mut rng).unwrap();
            batch.obs.extend_from_slice(&obs);
            batch.raw_obs.extend_from_slice(&obs);
            batch.actions.push(sample.raw);
            batch.log_probs.push(sample.log_prob);
            batch.values.push(value.forward(&obs)[0]);
            batch.rewards.push(rng.gen_range(-0.1..1.0));
            batch.dones.push(false);
            batch.advantages.push(rng.gen_range(-1.0..1.0));
            batch.returns.push(rng.gen_range(-0.5..1.5));
        }
        batch
    }

    #[test]
    fn identity_ratios_give_zero_policy_loss_after_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut policy = GaussianPolicy::new(4, &[6], &mut rng);
        let mut value = Mlp::new(&[4, 6, 1], &mut rng);
        // perturb = 0: behavior policy is the current policy, ratios 1.
        let batch = synthetic_batch(&policy, &value, 32, 0.0, 5);

        let cfg = PpoConfig {
            epochs_per_update: 1,
            minibatch_size: 32,
            learning_rate: 1e-9,
            ..PpoConfig::default()
        };
        let mut adam = Adam::new(policy.param_count() + value.params().len(), cfg.learning_rate);
        let stats =
            ppo_update(&mut policy, &mut value, &mut adam, &batch, &cfg, &mut rng).unwrap();
        // Single pass, so stats are exactly the first minibatch:
        // -mean(normalized A) == 0, nothing clipped, no divergence yet.
        assert!(stats.policy_loss.abs() <= 1e-9, "policy loss {}", stats.policy_loss);
        assert!(stats.approx_kl.abs() <= 1e-12);
        assert_eq!(stats.clip_frac, 0.0);
    }

    #[test]
    fn clipped_objective_matches_hand_cases() {
        // Ratio 2 with positive advantage clips at 1.2 * A.
        assert!((clipped_objective(2.0, 0.7, 0.2) - 1.2 * 0.7).abs() < 1e-15);
        // Identity ratio passes the advantage through.
        assert!((clipped_objective(1.0, -0.3, 0.2) - -0.3).abs() < 1e-15);
        // Pessimistic side stays unclipped: ratio 3, negative advantage.
        assert!((clipped_objective(3.0, -0.5, 0.2) - -1.5).abs() < 1e-15);
    }

    proptest! {
        /// The optimistic side is capped at (1+eps)*|A|. The pessimistic
        /// side is deliberately unbounded, so only the upper bound holds.
        #[test]
        fn objective_never_exceeds_the_clip_ceiling(
            ratio in 0.0f64..5.0,
            advantage in -2.0f64..2.0,
            epsilon in 0.05f64..0.5,
        ) {
            let obj = clipped_objective(ratio, advantage, epsilon);
            prop_assert!(obj <= (1.0 + epsilon) * advantage.abs() + 1e-12);
        }

        #[test]
        fn normalized_advantages_have_zero_mean_unit_std(
            mut advantages in prop::collection::vec(-10.0f64..10.0, 2..100),
        ) {
            // Skip degenerate all-equal draws; the scale guard leaves
            // them centered but unscaled.
            let spread = advantages.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - advantages.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-6);
            normalize_advantages(&mut advantages);
            let n = advantages.len() as f64;
            let mean = advantages.iter().sum::<f64>() / n;
            let std = (advantages.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-9, "mean {mean}");
            prop_assert!((std - 1.0).abs() <= 1e-6, "std {std}");
        }
    }

    #[test]
    fn loss_gradients_match_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        // Tiny heads: policy [2,3,7] + log_std = 44 params, value [2,3,1] = 13.
        let mut policy = GaussianPolicy::new(2, &[3], &mut rng);
        let mut value = Mlp::new(&[2, 3, 1], &mut rng);
        let batch = synthetic_batch(&policy, &value, 3, 0.05, 8);
        let mut advantages = batch.advantages.clone();
        normalize_advantages(&mut advantages);
        let cfg = PpoConfig { minibatch_size: 3, ..PpoConfig::default() };
        let indices = [0, 1, 2];

        let mut grads = FlatGrads {
            policy_net: policy.mean_net.zero_gradients(),
            log_std: [0.0; ACTION_DIM],
            value_net: value.zero_gradients(),
        };
        eval_minibatch(&policy, &value, &batch, &advantages, &indices, &cfg, Some(&mut grads))
            .unwrap();
        let mut analytic = Vec::new();
        analytic.extend_from_slice(&grads.policy_net.params);
        analytic.extend_from_slice(&grads.log_std);
        analytic.extend_from_slice(&grads.value_net.params);

        let policy_len = policy.param_count();
        let total = policy_len + value.params().len();
        let h = 1e-5;
        let loss_at = |policy: &mut GaussianPolicy, value: &mut Mlp, k: usize, delta: f64| {
            let mut flat = Vec::with_capacity(total);
            policy.write_params(&mut flat);
            flat.extend_from_slice(value.params());
            flat[k] += delta;
            policy.read_params(&flat[..policy_len]);
            value.params_mut().copy_from_slice(&flat[policy_len..]);
            let eval =
                eval_minibatch(policy, value, &batch, &advantages, &indices, &cfg, None).unwrap();
            flat[k] -= delta;
            policy.read_params(&flat[..policy_len]);
            value.params_mut().copy_from_slice(&flat[policy_len..]);
            eval.total_loss
        };

        for k in 0..total {
            let up = loss_at(&mut policy, &mut value, k, h);
            let down = loss_at(&mut policy, &mut value, k, -h);
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(analytic[k].abs()).max(1e-8);
            assert!(
                (numeric - analytic[k]).abs() / denom <= 1e-4,
                "param {k}: analytic {} vs numeric {numeric}",
                analytic[k]
            );
        }
    }

    #[test]
    fn update_is_deterministic_and_moves_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let policy0 = GaussianPolicy::new(4, &[8], &mut rng);
        let value0 = Mlp::new(&[4, 8, 1], &mut rng);
        let batch = synthetic_batch(&policy0, &value0, 64, 0.05, 13);
        let cfg = PpoConfig { minibatch_size: 16, epochs_per_update: 3, ..PpoConfig::default() };

        let run = |seed: u64| {
            let mut policy = policy0.clone();
            let mut value = value0.clone();
            let mut adam =
                Adam::new(policy.param_count() + value.params().len(), cfg.learning_rate);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats =
                ppo_update(&mut policy, &mut value, &mut adam, &batch, &cfg, &mut rng).unwrap();
            (policy, value, stats)
        };

        let (p1, v1, s1) = run(100);
        let (p2, v2, s2) = run(100);
        assert_eq!(p1, p2);
        assert_eq!(v1, v2);
        assert_eq!(s1, s2);
        assert_ne!(p1.mean_net.params(), policy0.mean_net.params());
        assert_ne!(v1.params(), value0.params());
        assert!(s1.value_loss.is_finite() && s1.approx_kl >= 0.0);

        // A different shuffle order changes the trajectory of updates.
        let (p3, _, _) = run(101);
        assert_ne!(p1.mean_net.params(), p3.mean_net.params());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut bad = PpoConfig { clip_epsilon: 0.0, ..PpoConfig::default() };
        assert!(bad.validate().is_err());
        bad = PpoConfig { gae_lambda: 1.5, ..PpoConfig::default() };
        assert!(bad.validate().is_err());
        bad = PpoConfig { learning_rate: 0.0, ..PpoConfig::default() };
        assert!(bad.validate().is_err());
        bad = PpoConfig { minibatch_size: 0, ..PpoConfig::default() };
        assert!(bad.validate().is_err());
        assert!(PpoConfig::default().validate().is_ok());
    }
}
