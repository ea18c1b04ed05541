//! The widget-interaction task as a Markov decision process.
//!
//! This crate wraps the physics in `sim-core` with everything an agent
//! needs to learn from it: a fixed-layout observation vector, a shaped
//! reward with a completion bonus, seeded widget sampling and placement,
//! and an episode lifecycle with a hard horizon.
//!
//! One MDP step is one call to [`WidgetEnv::step`] with a 7-component
//! motor force vector; internally it advances the simulation by one
//! control period (several physics substeps). Transitions are
//! deterministic: the only randomness is the widget sampled at reset, so
//! `(seed, action sequence)` fully determines a trajectory.
//!
//! Deceptive widgets are deliberately indistinguishable from sliders in
//! the observation: only geometry, positions and handle velocity are
//! exposed, never the mechanism. An agent can find out how a widget
//! responds only by interacting with it.

mod env;
mod observation;
mod reward;
mod trajectory;

pub use env::{sample_widget, EnvConfig, StepOutcome, WidgetEnv, PLACEMENT_CENTER, REST_POSE};
pub use observation::{Observation, OBS_DIM};
pub use reward::{compute_reward, RewardBreakdown, RewardParams};
pub use trajectory::{
    episode_return, read_trajectory, write_trajectory, StepRecord, Trajectory, TrajectoryFooter,
    TrajectoryHeader, TRAJECTORY_SCHEMA_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    /// `step` was called after the episode finished; call `reset` first.
    #[error("episode is over; reset the environment before stepping")]
    EpisodeOver,
    /// Action contained NaN or infinity; out-of-range finite values are
    /// clamped instead.
    #[error("action component {index} is not finite")]
    NonFiniteAction { index: usize },
    #[error("bad environment config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Sim(#[from] sim_core::SimError),
}

pub type Result<T> = std::result::Result<T, EnvError>;
