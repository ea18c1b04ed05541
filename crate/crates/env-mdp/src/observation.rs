//! Observation assembly.
//!
//! The observation is the agent-visible slice of the simulation state.
//! It deliberately excludes the widget's mechanism, spring constant and
//! trigger threshold: those must be discovered through interaction.

use serde::{Deserialize, Serialize};
use sim_core::{ArmState, WidgetSpec, WidgetState, NUM_JOINTS};

/// Flattened observation length: 14 proprioception + 3 handle dims +
/// 2 base dims + 3 handle center + 3 base center + 3 handle velocity.
pub const OBS_DIM: usize = 2 * NUM_JOINTS + 3 + 2 + 3 + 3 + 3;

/// One observation, grouped by meaning. [`Observation::flatten`] gives
/// the fixed-layout vector fed to function approximators; the field
/// order below is the layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Joint angles (rad) then joint angular velocities (rad/s).
    pub proprioception: [f64; 2 * NUM_JOINTS],
    /// Handle (width, length, height) in metres.
    pub handle_dims: [f64; 3],
    /// Base (width, length) in metres; the base has no height.
    pub base_dims: [f64; 2],
    /// World position of the handle center (m).
    pub handle_center: [f64; 3],
    /// World position of the base center (m), always on the table plane.
    pub base_center: [f64; 3],
    /// World-frame handle velocity (m/s): the mechanism's scalar rate
    /// embedded along its travel axis.
    pub handle_velocity: [f64; 3],
}

impl Observation {
    pub fn assemble(arm: &ArmState, spec: &WidgetSpec, widget: &WidgetState) -> Self {
        let mut proprioception = [0.0; 2 * NUM_JOINTS];
        proprioception[..NUM_JOINTS].copy_from_slice(&arm.angles);
        proprioception[NUM_JOINTS..].copy_from_slice(&arm.velocities);
        let handle_center = spec.handle_center(widget.displacement);
        let handle_velocity = widget.world_velocity(spec);
        Self {
            proprioception,
            handle_dims: spec.handle_dims,
            base_dims: spec.base_dims,
            handle_center: handle_center.coords.into(),
            base_center: spec.origin,
            handle_velocity: handle_velocity.into(),
        }
    }

    /// Fixed-layout vector form, in field declaration order.
    pub fn flatten(&self) -> [f64; OBS_DIM] {
        let mut out = [0.0; OBS_DIM];
        let mut at = 0;
        for chunk in [
            &self.proprioception[..],
            &self.handle_dims,
            &self.base_dims,
            &self.handle_center,
            &self.base_center,
            &self.handle_velocity,
        ] {
            out[at..at + chunk.len()].copy_from_slice(chunk);
            at += chunk.len();
        }
        debug_assert_eq!(at, OBS_DIM);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sim_core::widget::DEFAULT_SPRING_K;

    #[test]
    fn layout_is_stable_and_complete() {
        let arm = ArmState {
            angles: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            velocities: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
        };
        let spec = WidgetSpec::button(0.04, [0.3, 0.01, 0.0], DEFAULT_SPRING_K);
        let widget = WidgetState { displacement: 0.005, velocity: -0.02, triggered: false };
        let obs = Observation::assemble(&arm, &spec, &widget);
        let flat = obs.flatten();

        assert_eq!(flat.len(), 28);
        assert_eq!(flat[0], 0.1);
        assert_eq!(flat[7], 1.0);
        assert_eq!(flat[14..17], [0.04, 0.04, 0.03]);
        assert_eq!(flat[17..19], [0.05, 0.05]);
        // Button handle center: origin + half height up, pressed 5 mm down.
        assert_eq!(flat[19..22], [0.3, 0.01, 0.015 - 0.005]);
        assert_eq!(flat[22..25], [0.3, 0.01, 0.0]);
        // Press travel is -Z; a negative mechanism rate therefore means
        // the handle is springing back up in world frame.
        assert_eq!(flat[25..28], [0.0, 0.0, 0.02]);
        assert!(obs.is_finite());
    }

    #[test]
    fn mechanism_is_not_observable() {
        // A deceptive widget and a hypothetical same-geometry slider must
        // produce identical observations at rest.
        let arm = ArmState::at_rest([0.0; NUM_JOINTS]);
        let widget = WidgetState::default();
        let deceptive = WidgetSpec::deceptive([0.3, 0.0, 0.0], DEFAULT_SPRING_K);
        let mut disguised = deceptive.clone();
        disguised.kind = sim_core::WidgetKind::Slider;
        disguised.travel_axis = [1.0, 0.0, 0.0];
        disguised.spring_k = 0.0;
        disguised.rail_limits = (-0.05, 0.05);
        disguised.goal_displacement = 0.04;

        let a = Observation::assemble(&arm, &deceptive, &widget).flatten();
        let b = Observation::assemble(&arm, &disguised, &widget).flatten();
        assert_eq!(a, b);
    }
}
