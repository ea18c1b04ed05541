//! The training loop: collect, update, evaluate, repeat.
//!
//! Failure policy: an environment fault discards that batch and skips the
//! update; a non-finite loss rolls policy, value and optimizer back to
//! the snapshot taken before the update. Both are recorded in the result
//! rather than aborting a long run.

use env_mdp::{EnvConfig, WidgetEnv, OBS_DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sim_core::WidgetKind;

use crate::adam::Adam;
use crate::checkpoint::Checkpoint;
use crate::metrics::MetricRow;
use crate::nn::Mlp;
use crate::obs_norm::RunningNorm;
use crate::policy::GaussianPolicy;
use crate::ppo::{ppo_update, PpoConfig};
use crate::rollout::{collect_rollouts, EnvWorker, KindSchedule};
use crate::seeds::derive_seed;
use crate::{LearnError, Result};

// Seed stream tags. Workers occupy tags 0..2*n_envs, so trainer-internal
// streams start far above any plausible worker count.
const INIT_STREAM: u64 = 1 << 40;
const SHUFFLE_STREAM: u64 = (1 << 40) + 1;
const EVAL_STREAM_BASE: u64 = (1 << 40) + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    /// Widget kind per episode: alternating Button/Slider for initial
    /// training, a single kind for adaptation runs.
    pub schedule: KindSchedule,
    pub n_envs: usize,
    /// Deterministic evaluation episodes per widget kind after each
    /// update.
    pub eval_episodes: usize,
    pub total_updates: usize,
    pub master_seed: u64,
    /// Worker threads for rollout collection. Batches are identical for
    /// any thread count; this only trades wall time.
    pub threads: usize,
    /// Forces sequential collection regardless of `threads`.
    pub deterministic: bool,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            schedule: KindSchedule::Alternating,
            n_envs: 8,
            eval_episodes: 10,
            total_updates: 300,
            master_seed: 0,
            threads: 1,
            deterministic: true,
            policy_hidden: vec![64, 64],
            value_hidden: vec![64, 64],
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        let bad = |msg: String| Err(LearnError::BadConfig(msg));
        if self.n_envs == 0 || self.threads == 0 {
            return bad("n_envs and threads must be nonzero".into());
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be nonzero".into());
        }
        if self.ppo.steps_per_update % self.n_envs != 0 {
            return bad(format!(
                "steps_per_update {} must divide evenly across {} envs",
                self.ppo.steps_per_update, self.n_envs
            ));
        }
        if self.ppo.discount != self.env.discount {
            return bad(format!(
                "discount mismatch: ppo {} vs env {}; returns and advantages must agree",
                self.ppo.discount, self.env.discount
            ));
        }
        if self.policy_hidden.is_empty() || self.value_hidden.is_empty() {
            return bad("policy_hidden and value_hidden need at least one layer".into());
        }
        Ok(())
    }

    /// The widget kinds this schedule trains on, also used for eval.
    pub fn eval_kinds(&self) -> Vec<WidgetKind> {
        match self.schedule {
            KindSchedule::Alternating => vec![WidgetKind::Button, WidgetKind::Slider],
            KindSchedule::Only(kind) => vec![kind],
        }
    }
}

/// Everything that defines the learned behavior: policy, value head and
/// the observation statistics they were trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub obs_norm: RunningNorm,
}

impl Agent {
    pub fn new(
        obs_dim: usize,
        policy_hidden: &[usize],
        value_hidden: &[usize],
        rng: &mut impl rand::Rng,
    ) -> Self {
        let mut value_sizes = vec![obs_dim];
        value_sizes.extend_from_slice(value_hidden);
        value_sizes.push(1);
        Self {
            policy: GaussianPolicy::new(obs_dim, policy_hidden, rng),
            value: Mlp::new(&value_sizes, rng),
            obs_norm: RunningNorm::new(obs_dim),
        }
    }

    pub fn from_checkpoint(checkpoint: Checkpoint) -> Self {
        Self {
            policy: checkpoint.policy,
            value: checkpoint.value,
            obs_norm: checkpoint.obs_norm,
        }
    }

    pub fn to_checkpoint(&self, updates_completed: u64, env_steps: u64) -> Checkpoint {
        Checkpoint {
            version: crate::checkpoint::CHECKPOINT_VERSION,
            architecture: Checkpoint::describe(&self.policy, &self.value),
            policy: self.policy.clone(),
            value: self.value.clone(),
            obs_norm: self.obs_norm.clone(),
            updates_completed,
            env_steps,
        }
    }

    /// Deterministic evaluation action for a raw observation.
    pub fn eval_action(&self, raw_obs: &[f64], max_force: f64) -> Result<[f64; crate::ACTION_DIM]> {
        self.policy.mean_action(&self.obs_norm.normalize(raw_obs), max_force)
    }
}

/// Deterministic-policy evaluation outcome for one widget kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub kind: WidgetKind,
    pub episodes: usize,
    pub successes: usize,
    pub mean_return: f64,
}

impl EvalSummary {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }
}

/// Output of [`train`]. `updates_completed` and `env_steps` inside the
/// checkpoint count this run only, even when resuming.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub checkpoint: Checkpoint,
    pub metrics: Vec<MetricRow>,
    /// Per update, one summary per evaluated kind, in `eval_kinds` order.
    pub evals: Vec<Vec<EvalSummary>>,
    /// Human-readable records of skipped updates and rollbacks.
    pub faults: Vec<String>,
}

fn initial_agent(cfg: &TrainerConfig) -> Agent {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, INIT_STREAM));
    Agent::new(OBS_DIM, &cfg.policy_hidden, &cfg.value_hidden, &mut rng)
}

/// Runs `eval_episodes` fixed-seed episodes of `kind` with the mean
/// action. Success means the widget triggered within the horizon.
fn evaluate_kind(
    agent: &Agent,
    cfg: &TrainerConfig,
    kind: WidgetKind,
    update_index: usize,
) -> Result<EvalSummary> {
    let kind_tag = match kind {
        WidgetKind::Button => 0,
        WidgetKind::Slider => 1,
        WidgetKind::Deceptive => 2,
    };
    let stream = derive_seed(cfg.master_seed, EVAL_STREAM_BASE + kind_tag);
    let mut env_config = cfg.env.clone();
    env_config.widget_kind = kind;
    let max_force = env_config.arm.max_force;
    let mut env = WidgetEnv::new(env_config)?;

    let mut successes = 0;
    let mut return_sum = 0.0;
    for episode in 0..cfg.eval_episodes {
        let seed = derive_seed(stream, (update_index * cfg.eval_episodes + episode) as u64);
        let mut obs = env.reset(seed).flatten().to_vec();
        loop {
            let action = agent.eval_action(&obs, max_force)?;
            let outcome = env.step(&action)?;
            return_sum += outcome.reward.total;
            if outcome.done {
                break;
            }
            obs = outcome.observation.flatten().to_vec();
        }
        if env.succeeded() {
            successes += 1;
        }
    }
    Ok(EvalSummary {
        kind,
        episodes: cfg.eval_episodes,
        successes,
        mean_return: return_sum / cfg.eval_episodes as f64,
    })
}

/// Alternates rollout collection, PPO updates and deterministic
/// evaluation. `start` resumes from an existing checkpoint (adaptation);
/// `on_update` fires after every attempted update with the latest metric
/// row, e.g. to stream progress or save checkpoint series.
pub fn train(
    cfg: &TrainerConfig,
    start: Option<Checkpoint>,
    mut on_update: impl FnMut(&MetricRow, &Agent),
) -> Result<TrainResult> {
    cfg.validate()?;
    let mut agent = match start {
        Some(checkpoint) => {
            if checkpoint.architecture.obs_dim != OBS_DIM {
                return Err(LearnError::BadCheckpoint(format!(
                    "checkpoint expects {}-wide observations, this environment emits {OBS_DIM}",
                    checkpoint.architecture.obs_dim
                )));
            }
            Agent::from_checkpoint(checkpoint)
        }
        None => initial_agent(cfg),
    };

    let threads = if cfg.deterministic { 1 } else { cfg.threads };
    let steps_per_worker = cfg.ppo.steps_per_update / cfg.n_envs;
    let eval_kinds = cfg.eval_kinds();

    let mut workers = (0..cfg.n_envs)
        .map(|i| EnvWorker::new(cfg.env.clone(), i as u64, cfg.master_seed, cfg.schedule))
        .collect::<Result<Vec<_>>>()?;
    let mut optimizer =
        Adam::new(agent.policy.param_count() + agent.value.params().len(), cfg.ppo.learning_rate);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, SHUFFLE_STREAM));

    let mut metrics = Vec::with_capacity(cfg.total_updates);
    let mut evals = Vec::with_capacity(cfg.total_updates);
    let mut faults = Vec::new();
    let mut env_steps: u64 = 0;
    let mut updates_completed: u64 = 0;

    for update in 1..=cfg.total_updates {
        let collected = collect_rollouts(
            &agent.policy,
            &agent.value,
            &agent.obs_norm,
            &mut workers,
            steps_per_worker,
            cfg.ppo.discount,
            cfg.ppo.gae_lambda,
            threads,
        );
        let (batch, report) = match collected {
            Ok(pair) => pair,
            Err(err) => {
                faults.push(format!("update {update}: environment fault, skipped: {err}"));
                continue;
            }
        };
        env_steps += report.steps as u64;

        let snapshot = (agent.policy.clone(), agent.value.clone(), optimizer.clone());
        let stats = match ppo_update(
            &mut agent.policy,
            &mut agent.value,
            &mut optimizer,
            &batch,
            &cfg.ppo,
            &mut shuffle_rng,
        ) {
            Ok(stats) => stats,
            Err(err) => {
                (agent.policy, agent.value, optimizer) = snapshot;
                faults.push(format!("update {update}: rolled back: {err}"));
                continue;
            }
        };
        updates_completed += 1;

        // The batch is done with the frozen statistics; fold its raw
        // observations in for the next one, in worker-major order.
        for i in 0..batch.len() {
            agent.obs_norm.update(batch.raw_obs_row(i));
        }

        let mut row = MetricRow {
            update: update as u64,
            env_steps,
            mean_return: report.mean_return(),
            success_button: f64::NAN,
            success_slider: f64::NAN,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            kl: stats.approx_kl,
            clip_frac: stats.clip_frac,
        };
        let mut update_evals = Vec::with_capacity(eval_kinds.len());
        for &kind in &eval_kinds {
            let summary = evaluate_kind(&agent, cfg, kind, update)?;
            match kind {
                WidgetKind::Button => row.success_button = summary.success_rate(),
                WidgetKind::Slider => row.success_slider = summary.success_rate(),
                WidgetKind::Deceptive => {}
            }
            update_evals.push(summary);
        }

        on_update(&row, &agent);
        metrics.push(row);
        evals.push(update_evals);
    }

    Ok(TrainResult {
        checkpoint: agent.to_checkpoint(updates_completed, env_steps),
        metrics,
        evals,
        faults,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> TrainerConfig {
        TrainerConfig {
            ppo: PpoConfig {
                steps_per_update: 60,
                minibatch_size: 32,
                epochs_per_update: 2,
                ..PpoConfig::default()
            },
            n_envs: 2,
            eval_episodes: 1,
            total_updates: 2,
            master_seed: 7,
            policy_hidden: vec![8],
            value_hidden: vec![8],
            ..TrainerConfig::default()
        }
    }

    #[test]
    fn zero_updates_return_the_initial_agent_unchanged() {
        let cfg = TrainerConfig { total_updates: 0, ..tiny_config() };
        let result = train(&cfg, None, |_, _| {}).unwrap();
        let fresh = initial_agent(&cfg);
        assert_eq!(result.checkpoint.policy, fresh.policy);
        assert_eq!(result.checkpoint.value, fresh.value);
        assert_eq!(result.checkpoint.obs_norm, fresh.obs_norm);
        assert_eq!(result.checkpoint.updates_completed, 0);
        assert!(result.metrics.is_empty());
    }

    #[test]
    fn zero_updates_preserve_a_resumed_checkpoint() {
        let cfg = TrainerConfig { total_updates: 0, ..tiny_config() };
        let start = initial_agent(&cfg).to_checkpoint(5, 300);
        let result = train(&cfg, Some(start.clone()), |_, _| {}).unwrap();
        assert_eq!(result.checkpoint.policy, start.policy);
        assert_eq!(result.checkpoint.value, start.value);
        assert_eq!(result.checkpoint.obs_norm, start.obs_norm);
    }

    #[test]
    fn short_run_produces_aligned_metrics_and_counts() {
        let cfg = tiny_config();
        let mut callback_updates = Vec::new();
        let result = train(&cfg, None, |row, _| callback_updates.push(row.update)).unwrap();
        assert_eq!(result.metrics.len(), 2);
        assert_eq!(result.evals.len(), 2);
        assert_eq!(callback_updates, vec![1, 2]);
        assert!(result.faults.is_empty());
        assert_eq!(result.checkpoint.updates_completed, 2);
        assert_eq!(result.checkpoint.env_steps, 120);
        for (i, row) in result.metrics.iter().enumerate() {
            assert_eq!(row.update, i as u64 + 1);
            assert!((0.0..=1.0).contains(&row.success_button));
            assert!((0.0..=1.0).contains(&row.success_slider));
            assert!(row.policy_loss.is_finite());
            assert!(row.value_loss.is_finite());
        }
        // Statistics moved, so the normalizer saw the batches.
        assert_eq!(result.checkpoint.obs_norm.count(), 120.0);
    }

    #[test]
    fn identical_seeds_give_identical_metric_logs() {
        let cfg = tiny_config();
        let a = train(&cfg, None, |_, _| {}).unwrap();
        let b = train(&cfg, None, |_, _| {}).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.checkpoint, b.checkpoint);
    }

    #[test]
    fn single_kind_schedule_evaluates_only_that_kind() {
        let cfg = TrainerConfig {
            schedule: KindSchedule::Only(WidgetKind::Deceptive),
            total_updates: 1,
            ..tiny_config()
        };
        let result = train(&cfg, None, |_, _| {}).unwrap();
        assert_eq!(result.evals[0].len(), 1);
        assert_eq!(result.evals[0][0].kind, WidgetKind::Deceptive);
        // The CSV columns only describe evaluated kinds.
        assert!(result.metrics[0].success_button.is_nan());
        assert!(result.metrics[0].success_slider.is_nan());
    }

    #[test]
    fn config_validation_catches_mismatches() {
        let mut cfg = tiny_config();
        cfg.ppo.steps_per_update = 61;
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.ppo.discount = 0.95;
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.policy_hidden.clear();
        assert!(cfg.validate().is_err());
    }
}
