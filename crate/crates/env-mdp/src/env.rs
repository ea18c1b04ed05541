//! Episode lifecycle: seeded widget sampling, reset, step, horizon.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sim_core::{
    step_dynamics, ArmConfig, ArmState, SimParams, WidgetKind, WidgetSpec, WidgetState, NUM_JOINTS,
};

use crate::{compute_reward, EnvError, Observation, Result, RewardBreakdown, RewardParams};

/// Center of the widget placement square on the table (m). Chosen so the
/// whole square sits comfortably inside the arm's reach envelope.
pub const PLACEMENT_CENTER: [f64; 2] = [0.30, 0.0];

/// Joint angles of the episode start pose: fingertips poised a couple of
/// centimeters above handle height over the placement center, fingers
/// pitched steeply downward so contact reactions pass close to the wrist
/// axis, fingers straddling the world Y axis, zero grip.
pub const REST_POSE: [f64; NUM_JOINTS] = [0.0, -0.36, 1.235, 0.0, 1.48, 0.0, 0.0];

/// Everything fixed across an episode. Seeds are passed to
/// [`WidgetEnv::reset`] instead so one config can drive many episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub arm: ArmConfig,
    pub sim: SimParams,
    pub reward: RewardParams,
    /// Which widget family reset samples from.
    pub widget_kind: WidgetKind,
    /// Center of the placement square (m, table coordinates).
    pub placement_center: [f64; 2],
    /// Side of the placement square (m). Widget origins are uniform on it.
    pub placement_side: f64,
    /// Return-spring stiffness for press mechanisms (force/m).
    pub spring_k: f64,
    /// Maximum steps per episode; reaching it without a trigger is a
    /// failure.
    pub horizon: usize,
    /// Discount factor for returns.
    pub discount: f64,
    /// Start pose; velocities always start at zero.
    pub rest_pose: [f64; NUM_JOINTS],
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            arm: ArmConfig::default(),
            sim: SimParams::default(),
            reward: RewardParams::default(),
            widget_kind: WidgetKind::Button,
            placement_center: PLACEMENT_CENTER,
            placement_side: 0.05,
            spring_k: sim_core::widget::DEFAULT_SPRING_K,
            horizon: 150,
            discount: 0.99,
            rest_pose: REST_POSE,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        self.sim.validate()?;
        if self.horizon == 0 {
            return Err(EnvError::BadConfig("horizon must be at least 1".into()));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(EnvError::BadConfig("discount must lie in (0, 1)".into()));
        }
        if !(self.placement_side.is_finite() && self.placement_side >= 0.0) {
            return Err(EnvError::BadConfig("placement_side must be non-negative".into()));
        }
        if !(self.spring_k.is_finite() && self.spring_k >= 0.0) {
            return Err(EnvError::BadConfig("spring_k must be non-negative".into()));
        }
        for (j, a) in self.rest_pose.iter().enumerate() {
            let (lo, hi) = self.arm.joint_limits[j];
            if !(*a >= lo && *a <= hi) {
                return Err(EnvError::BadConfig(format!(
                    "rest pose joint {j} ({a}) outside limits [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Draw one widget: dimensions first, then origin, both uniform. The
/// draw order is part of the seeded-reproducibility contract.
///
/// Buttons get a square handle with side in `[0.03, 0.05]`; sliders get
/// length in `[0.04, 0.06]` and width in `[0.01, 0.02]`; the deceptive
/// widget's dimensions are fixed, only its placement varies.
pub fn sample_widget(
    kind: WidgetKind,
    center: [f64; 2],
    side: f64,
    spring_k: f64,
    rng: &mut impl Rng,
) -> WidgetSpec {
    match kind {
        WidgetKind::Button => {
            let handle_side = rng.gen_range(0.03..=0.05);
            WidgetSpec::button(handle_side, origin_in_square(center, side, rng), spring_k)
        }
        WidgetKind::Slider => {
            let length = rng.gen_range(0.04..=0.06);
            let width = rng.gen_range(0.01..=0.02);
            WidgetSpec::slider(width, length, origin_in_square(center, side, rng))
        }
        WidgetKind::Deceptive => {
            WidgetSpec::deceptive(origin_in_square(center, side, rng), spring_k)
        }
    }
}

fn origin_in_square(center: [f64; 2], side: f64, rng: &mut impl Rng) -> [f64; 3] {
    let half = side / 2.0;
    [
        rng.gen_range(center[0] - half..=center[0] + half),
        rng.gen_range(center[1] - half..=center[1] + half),
        0.0,
    ]
}

/// What one `step` hands back.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    /// True once the widget triggered or the horizon ran out.
    pub done: bool,
    /// True when some action component was outside the motor force range
    /// and had to be clamped.
    pub action_clamped: bool,
}

/// One environment instance. Single-caller; spin up as many instances as
/// you need for parallel rollout collection.
#[derive(Debug, Clone)]
pub struct WidgetEnv {
    config: EnvConfig,
    arm: ArmState,
    widget: WidgetState,
    spec: WidgetSpec,
    steps_taken: usize,
    done: bool,
    started: bool,
}

impl WidgetEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        // Placeholder widget until the first reset; `started` gates
        // stepping so it can never be interacted with.
        let spec = WidgetSpec::button(0.04, [config.placement_center[0], config.placement_center[1], 0.0], config.spring_k);
        Ok(Self {
            arm: ArmState::at_rest(config.rest_pose),
            widget: WidgetState::default(),
            spec,
            config,
            steps_taken: 0,
            done: true,
            started: false,
        })
    }

    /// Start a fresh episode: sample a widget from the seed, move the arm
    /// to the rest pose, zero the step counter. Identical seeds produce
    /// identical episodes.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.spec = sample_widget(
            self.config.widget_kind,
            self.config.placement_center,
            self.config.placement_side,
            self.config.spring_k,
            &mut rng,
        );
        self.arm = ArmState::at_rest(self.config.rest_pose);
        self.widget = WidgetState::default();
        self.steps_taken = 0;
        self.done = false;
        self.started = true;
        self.observe()
    }

    /// Advance one control period under the given motor forces.
    ///
    /// Finite out-of-range components are clamped to the motor limit and
    /// flagged in the outcome; non-finite components are rejected.
    pub fn step(&mut self, action: &[f64; NUM_JOINTS]) -> Result<StepOutcome> {
        if self.done || !self.started {
            return Err(EnvError::EpisodeOver);
        }
        let mut forces = *action;
        let mut clamped = false;
        for (index, f) in forces.iter_mut().enumerate() {
            if !f.is_finite() {
                return Err(EnvError::NonFiniteAction { index });
            }
            let c = f.clamp(-self.config.arm.max_force, self.config.arm.max_force);
            if c != *f {
                clamped = true;
                *f = c;
            }
        }

        let already_triggered = self.widget.triggered;
        let (arm, widget, report) = step_dynamics(
            &self.config.arm,
            &self.arm,
            &self.spec,
            &self.widget,
            &forces,
            &self.config.sim,
        )?;
        self.arm = arm;
        self.widget = widget;
        self.steps_taken += 1;

        let reward = compute_reward(
            &self.config.reward,
            &report,
            &self.arm,
            &self.widget,
            &self.spec,
            already_triggered,
        );
        self.done = self.widget.triggered || self.steps_taken >= self.config.horizon;
        Ok(StepOutcome { observation: self.observe(), reward, done: self.done, action_clamped: clamped })
    }

    pub fn observe(&self) -> Observation {
        Observation::assemble(&self.arm, &self.spec, &self.widget)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// The widget sampled for the current episode.
    pub fn spec(&self) -> &WidgetSpec {
        &self.spec
    }

    pub fn arm(&self) -> &ArmState {
        &self.arm
    }

    pub fn widget(&self) -> &WidgetState {
        &self.widget
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn done(&self) -> bool {
        self.done
    }

    /// True when the current episode ended with the widget triggered.
    pub fn succeeded(&self) -> bool {
        self.widget.triggered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_deterministic_per_seed() {
        let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
        let a = env.reset(42).flatten();
        let spec_a = env.spec().clone();
        let b = env.reset(42).flatten();
        assert_eq!(a, b);
        assert_eq!(&spec_a, env.spec());
        let c = env.reset(43).flatten();
        assert_ne!(a, c, "different seeds should sample different widgets");
    }

    #[test]
    fn reset_starts_at_rest_with_standard_button_height() {
        let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
        let obs = env.reset(7);
        assert_eq!(obs.handle_dims[2], 0.03);
        assert_eq!(obs.proprioception[NUM_JOINTS..], [0.0; NUM_JOINTS]);
        assert_eq!(obs.proprioception[..NUM_JOINTS], REST_POSE);
    }

    #[test]
    fn step_before_reset_is_rejected() {
        let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
        let err = env.step(&[0.0; NUM_JOINTS]).unwrap_err();
        assert!(matches!(err, EnvError::EpisodeOver));
    }

    #[test]
    fn non_finite_action_is_rejected() {
        let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
        env.reset(1);
        let mut action = [0.0; NUM_JOINTS];
        action[2] = f64::NAN;
        let err = env.step(&action).unwrap_err();
        assert!(matches!(err, EnvError::NonFiniteAction { index: 2 }));
    }

    #[test]
    fn out_of_range_action_is_clamped_and_flagged() {
        let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
        env.reset(1);
        let mut big = [0.0; NUM_JOINTS];
        big[1] = 1.0e9;
        let flagged = env.step(&big).unwrap();
        assert!(flagged.action_clamped);

        // The clamped action must behave exactly like the in-range one.
        let mut env2 = WidgetEnv::new(EnvConfig::default()).unwrap();
        env2.reset(1);
        let mut capped = [0.0; NUM_JOINTS];
        capped[1] = env2.config().arm.max_force;
        let plain = env2.step(&capped).unwrap();
        assert!(!plain.action_clamped);
        assert_eq!(flagged.observation, plain.observation);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cases = [
            EnvConfig { horizon: 0, ..Default::default() },
            EnvConfig { discount: 1.0, ..Default::default() },
            EnvConfig { placement_side: -0.1, ..Default::default() },
            EnvConfig { rest_pose: [9.0; NUM_JOINTS], ..Default::default() },
        ];
        for config in cases {
            assert!(WidgetEnv::new(config).is_err());
        }
    }
}
