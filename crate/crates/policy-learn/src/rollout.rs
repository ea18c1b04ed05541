//! Experience collection across a fixed set of environments.
//!
//! Every environment worker owns its own action-sampling stream and its
//! own sequence of episode seeds, both derived from the master seed and
//! the worker index. A worker's segment is therefore a pure function of
//! (networks, normalizer, worker state), which makes the batch identical
//! whether segments run sequentially or on however many threads the host
//! offers; only the number of workers changes the data.

use env_mdp::{EnvConfig, WidgetEnv, OBS_DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sim_core::WidgetKind;

use crate::gae::compute_gae;
use crate::nn::Mlp;
use crate::obs_norm::RunningNorm;
use crate::policy::{GaussianPolicy, ACTION_DIM};
use crate::seeds::derive_seed;
use crate::Result;

/// Which widget kind each new episode gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSchedule {
    /// Even/odd alternation offset by worker index, so half the workers
    /// run buttons while the other half run sliders at any time.
    Alternating,
    /// Every episode uses the same kind (adaptation runs).
    Only(WidgetKind),
}

impl KindSchedule {
    fn kind_for(self, worker_index: u64, episode_index: u64) -> WidgetKind {
        match self {
            KindSchedule::Alternating => {
                if (worker_index + episode_index) % 2 == 0 {
                    WidgetKind::Button
                } else {
                    WidgetKind::Slider
                }
            }
            KindSchedule::Only(kind) => kind,
        }
    }
}

/// One persistent environment plus the per-worker randomness. Episodes
/// straddle batch boundaries; state carries over between collections.
pub struct EnvWorker {
    config: EnvConfig,
    env: WidgetEnv,
    action_rng: ChaCha8Rng,
    schedule: KindSchedule,
    worker_index: u64,
    episode_seed_base: u64,
    episode_index: u64,
    current_obs: Vec<f64>,
    current_kind: WidgetKind,
    episode_return: f64,
    episode_steps: usize,
}

impl EnvWorker {
    pub fn new(
        mut config: EnvConfig,
        worker_index: u64,
        master_seed: u64,
        schedule: KindSchedule,
    ) -> Result<Self> {
        let first_kind = schedule.kind_for(worker_index, 0);
        config.widget_kind = first_kind;
        let mut env = WidgetEnv::new(config.clone())?;
        let episode_seed_base = derive_seed(master_seed, 2 * worker_index + 1);
        let obs = env.reset(derive_seed(episode_seed_base, 0));
        Ok(Self {
            config,
            env,
            action_rng: ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 2 * worker_index)),
            schedule,
            worker_index,
            episode_seed_base,
            episode_index: 0,
            current_obs: obs.flatten().to_vec(),
            current_kind: first_kind,
            episode_return: 0.0,
            episode_steps: 0,
        })
    }

    fn begin_next_episode(&mut self) -> Result<()> {
        self.episode_index += 1;
        let kind = self.schedule.kind_for(self.worker_index, self.episode_index);
        if kind != self.config.widget_kind {
            self.config.widget_kind = kind;
            self.env = WidgetEnv::new(self.config.clone())?;
        }
        let obs = self.env.reset(derive_seed(self.episode_seed_base, self.episode_index));
        self.current_obs = obs.flatten().to_vec();
        self.current_kind = kind;
        self.episode_return = 0.0;
        self.episode_steps = 0;
        Ok(())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }
}

/// Outcome of one finished episode, for telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStat {
    pub kind: WidgetKind,
    pub undiscounted_return: f64,
    pub succeeded: bool,
    pub steps: usize,
}

/// Telemetry for one collection pass.
#[derive(Debug, Clone, Default)]
pub struct CollectReport {
    /// Episodes that finished during the pass, worker-major then in time
    /// order within a worker.
    pub episodes: Vec<EpisodeStat>,
    /// Environment steps consumed.
    pub steps: usize,
}

impl CollectReport {
    pub fn mean_return(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(|e| e.undiscounted_return).sum::<f64>()
            / self.episodes.len() as f64
    }

    /// Success rate over finished episodes of `kind`; 1 if none finished,
    /// so a kind absent from the schedule never drags metrics down.
    pub fn success_rate(&self, kind: WidgetKind) -> f64 {
        let of_kind: Vec<_> = self.episodes.iter().filter(|e| e.kind == kind).collect();
        if of_kind.is_empty() {
            return 1.0;
        }
        of_kind.iter().filter(|e| e.succeeded).count() as f64 / of_kind.len() as f64
    }
}

/// Flattened, worker-major experience with GAE already applied.
/// Observations are stored as the policy saw them (normalized with the
/// statistics that were frozen for this batch); the raw versions ride
/// along so the trainer can update those statistics afterwards.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub obs: Vec<f64>,
    pub raw_obs: Vec<f64>,
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn raw_obs_row(&self, i: usize) -> &[f64] {
        &self.raw_obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }
}

struct Segment {
    obs: Vec<f64>,
    raw_obs: Vec<f64>,
    actions: Vec<[f64; ACTION_DIM]>,
    log_probs: Vec<f64>,
    values: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    bootstrap: f64,
    episodes: Vec<EpisodeStat>,
}

fn collect_segment(
    policy: &GaussianPolicy,
    value: &Mlp,
    norm: &RunningNorm,
    worker: &mut EnvWorker,
    steps: usize,
) -> Result<Segment> {
    let max_force = worker.config.arm.max_force;
    let mut seg = Segment {
        obs: Vec::with_capacity(steps * OBS_DIM),
        raw_obs: Vec::with_capacity(steps * OBS_DIM),
        actions: Vec::with_capacity(steps),
        log_probs: Vec::with_capacity(steps),
        values: Vec::with_capacity(steps),
        rewards: Vec::with_capacity(steps),
        dones: Vec::with_capacity(steps),
        bootstrap: 0.0,
        episodes: Vec::new(),
    };
    for _ in 0..steps {
        let normed = norm.normalize(&worker.current_obs);
        let sample = policy.sample(&normed, max_force, &mut worker.action_rng)?;
        let state_value = value.forward(&normed)[0];
        let outcome = worker.env.step(&sample.env_action)?;

        seg.obs.extend_from_slice(&normed);
        seg.raw_obs.extend_from_slice(&worker.current_obs);
        seg.actions.push(sample.raw);
        seg.log_probs.push(sample.log_prob);
        seg.values.push(state_value);
        seg.rewards.push(outcome.reward.total);
        seg.dones.push(outcome.done);

        worker.episode_return += outcome.reward.total;
        worker.episode_steps += 1;
        if outcome.done {
            seg.episodes.push(EpisodeStat {
                kind: worker.current_kind,
                undiscounted_return: worker.episode_return,
                succeeded: worker.env.succeeded(),
                steps: worker.episode_steps,
            });
            worker.begin_next_episode()?;
        } else {
            worker.current_obs = outcome.observation.flatten().to_vec();
        }
    }
    seg.bootstrap = value.forward(&norm.normalize(&worker.current_obs))[0];
    Ok(seg)
}

/// Collects `steps_per_worker` steps from every worker and assembles one
/// batch in worker-index order. `threads > 1` fans workers out across OS
/// threads; the result is bitwise independent of the thread count.
pub fn collect_rollouts(
    policy: &GaussianPolicy,
    value: &Mlp,
    norm: &RunningNorm,
    workers: &mut [EnvWorker],
    steps_per_worker: usize,
    discount: f64,
    lambda: f64,
    threads: usize,
) -> Result<(RolloutBatch, CollectReport)> {
    let segments: Vec<Segment> = if threads <= 1 || workers.len() <= 1 {
        workers
            .iter_mut()
            .map(|w| collect_segment(policy, value, norm, w, steps_per_worker))
            .collect::<Result<_>>()?
    } else {
        let n_workers = workers.len();
        let per_chunk = n_workers.div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = workers
                .chunks_mut(per_chunk)
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk
                            .iter_mut()
                            .map(|w| collect_segment(policy, value, norm, w, steps_per_worker))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(n_workers);
            for handle in handles {
                all.extend(handle.join().expect("collector thread panicked")?);
            }
            Ok::<_, crate::LearnError>(all)
        })?
    };

    let total = steps_per_worker * segments.len();
    let mut batch = RolloutBatch {
        obs_dim: OBS_DIM,
        obs: Vec::with_capacity(total * OBS_DIM),
        raw_obs: Vec::with_capacity(total * OBS_DIM),
        actions: Vec::with_capacity(total),
        log_probs: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        rewards: Vec::with_capacity(total),
        dones: Vec::with_capacity(total),
        advantages: Vec::with_capacity(total),
        returns: Vec::with_capacity(total),
    };
    let mut report = CollectReport::default();
    for seg in segments {
        let (adv, ret) =
            compute_gae(&seg.rewards, &seg.values, &seg.dones, seg.bootstrap, discount, lambda)?;
        batch.obs.extend(seg.obs);
        batch.raw_obs.extend(seg.raw_obs);
        batch.actions.extend(seg.actions);
        batch.log_probs.extend(seg.log_probs);
        batch.values.extend(seg.values);
        batch.rewards.extend(seg.rewards);
        batch.dones.extend(seg.dones);
        batch.advantages.extend(adv);
        batch.returns.extend(ret);
        report.episodes.extend(seg.episodes);
        report.steps += steps_per_worker;
    }
    Ok((batch, report))
}
