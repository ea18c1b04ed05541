//! Proximal policy optimization, implemented from first principles.
//!
//! Everything that learns lives here: small tanh MLPs with hand-written
//! backpropagation, a diagonal Gaussian policy head, generalized
//! advantage estimation, the clipped-surrogate PPO update, an
//! adaptive-moment optimizer, and a trainer loop that alternates rollout
//! collection with updates and tracks evaluation success rates.
//!
//! Design notes:
//!
//! - Policies act in a normalized action box `[-1, 1]^7`; actions are
//!   scaled by the motor force limit only at the environment boundary.
//!   Observations are standardized by running statistics that freeze
//!   between updates, so one batch sees one consistent normalization.
//! - Determinism is a contract, not an accident: every random stream is
//!   derived from a master seed with splitmix64, rollouts are assembled
//!   in environment index order regardless of thread count, and training
//!   twice with the same seed gives bitwise-identical metrics.
//! - Networks are tiny (two hidden layers of 64), so plain `Vec<f64>`
//!   math beats any linear-algebra dependency here; gradients are
//!   verified against central finite differences in the tests.

mod adam;
mod checkpoint;
mod gae;
mod metrics;
mod nn;
mod obs_norm;
mod policy;
mod ppo;
mod rollout;
mod seeds;
mod trainer;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use gae::compute_gae;
pub use metrics::{metrics_to_csv, parse_metrics_csv, MetricRow, METRICS_HEADER};
pub use nn::{Mlp, MlpGradients};
pub use obs_norm::RunningNorm;
pub use policy::{GaussianPolicy, PolicySample, ACTION_DIM};
pub use ppo::{clipped_objective, normalize_advantages, ppo_update, PpoConfig, UpdateStats};
pub use rollout::{collect_rollouts, CollectReport, EnvWorker, EpisodeStat, KindSchedule, RolloutBatch};
pub use seeds::{derive_seed, splitmix64};
pub use trainer::{train, Agent, EvalSummary, TrainResult, TrainerConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("mismatched sequence lengths: {0}")]
    LengthMismatch(String),
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("checkpoint rejected: {0}")]
    BadCheckpoint(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Env(#[from] env_mdp::EnvError),
}

pub type Result<T> = std::result::Result<T, LearnError>;
