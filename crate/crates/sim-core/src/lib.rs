//! Reduced-fidelity physics for a desk-scale widget-interaction testbed.
//!
//! The simulated device is a 7-degree-of-freedom arm hanging over a table,
//! driven by per-joint motor forces, plus a single interactive widget
//! (button or slider) whose handle moves along one mechanism axis.
//!
//! The dynamics are deliberately simple: each joint is an independent
//! torque-driven, damped rotor (no gravity, no inter-link inertial
//! coupling), and fingertip/handle interaction is penalty-spring contact
//! between two fingertip spheres and the handle box. The handle itself is
//! a 1-DOF mass on a return spring (press mechanisms) or a free rail with
//! end stops (slide mechanisms).
//!
//! Everything here is a pure function over value-type states: the same
//! inputs always produce bitwise-identical outputs, which the replay and
//! reproducibility tooling in the rest of the workspace depends on.
//!
//! # Conventions
//!
//! - World frame: Z up, table surface at `z = 0`, units are metres,
//!   seconds and an abstract motor-force unit.
//! - Joint order: shoulder yaw, shoulder pitch, elbow pitch, forearm
//!   roll, wrist pitch, wrist yaw, grip. See [`arm`] for the axis
//!   conventions and the zero pose.
//! - Widget local axes coincide with world axes (widgets are not
//!   rotated); the base center sits on the table at `WidgetSpec::origin`.

pub mod arm;
pub mod contact;
pub mod dynamics;
pub mod widget;

pub use arm::{forward_kinematics, solve_reach, ArmConfig, ArmState, FkState, NUM_JOINTS};
pub use contact::{ContactReport, FINGER_COUNT};
pub use dynamics::{step_dynamics, SimParams};
pub use widget::{widget_restoring_force, Mechanism, WidgetKind, WidgetSpec, WidgetState};

use thiserror::Error;

/// Errors raised by the simulation layer.
#[derive(Debug, Error)]
pub enum SimError {
    /// An input contained NaN or infinity.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    /// A motor force was outside `[-max_force, +max_force]`.
    #[error("motor force {value} on joint {joint} exceeds max_force {max}")]
    ForceOutOfRange { joint: usize, value: f64, max: f64 },
    /// Simulation parameters violated their invariants.
    #[error("invalid simulation parameters: {0}")]
    BadSimParams(String),
    /// A widget specification violated its geometric invariants.
    #[error("invalid widget spec: {0}")]
    BadWidgetSpec(String),
    /// An arm configuration violated its invariants.
    #[error("invalid arm config: {0}")]
    BadArmConfig(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
