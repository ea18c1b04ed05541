//! Three-part reward: distance penalty, movement penalty, completion.
//!
//! Both penalties are small and clamped to `[-0.01, 0]` so they guide
//! without dominating; the completion bonus of 1 is the signal that
//! actually defines the task. A step's total therefore always lies in
//! `[-0.02, 1]`.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use sim_core::{ArmState, ContactReport, WidgetSpec, WidgetState, NUM_JOINTS};

/// Penalty scale factors. The clamp bounds are fixed; these choose how
/// quickly each penalty saturates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardParams {
    /// Distance penalty per metre of fingertip-to-handle distance.
    pub k_distance: f64,
    /// Movement penalty per rad/s of mean joint speed.
    pub k_movement: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { k_distance: 0.02, k_movement: 0.005 }
    }
}

/// One step's reward, itemized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// `clamp(-k_distance * |fingertip midpoint - handle center|, -0.01, 0)`
    pub distance_penalty: f64,
    /// `clamp(-k_movement * mean |joint velocity|, -0.01, 0)`
    pub movement_penalty: f64,
    /// 1 exactly on the step the widget transitions to triggered, else 0.
    pub completion: f64,
    /// Sum of the three parts.
    pub total: f64,
}

/// Score one post-step state. `already_triggered` is the widget's
/// trigger flag from before the step, so the completion bonus is paid
/// exactly once per episode.
pub fn compute_reward(
    params: &RewardParams,
    contact: &ContactReport,
    arm: &ArmState,
    widget: &WidgetState,
    spec: &WidgetSpec,
    already_triggered: bool,
) -> RewardBreakdown {
    let tip_a = Vector3::from(contact.fingertip_pos[0]);
    let tip_b = Vector3::from(contact.fingertip_pos[1]);
    let mid = Point3::from((tip_a + tip_b) * 0.5);
    let handle_center = spec.handle_center(widget.displacement);
    let distance = (mid - handle_center).norm();
    let distance_penalty = (-params.k_distance * distance).clamp(-0.01, 0.0);

    let mean_speed =
        arm.velocities.iter().map(|v| v.abs()).sum::<f64>() / NUM_JOINTS as f64;
    let movement_penalty = (-params.k_movement * mean_speed).clamp(-0.01, 0.0);

    let completion = if widget.triggered && !already_triggered { 1.0 } else { 0.0 };
    RewardBreakdown {
        distance_penalty,
        movement_penalty,
        completion,
        total: distance_penalty + movement_penalty + completion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sim_core::widget::DEFAULT_SPRING_K;

    fn report_with_mid(mid: [f64; 3]) -> ContactReport {
        // Place both fingertips at the midpoint; the reward only reads
        // their average.
        ContactReport {
            fingertip_pos: [mid, mid],
            min_distance: 1.0,
            contact_force: [0.0; 3],
            deepest_penetration: 0.0,
        }
    }

    #[test]
    fn vanishes_at_handle_center_at_rest() {
        let spec = WidgetSpec::button(0.04, [0.3, 0.0, 0.0], DEFAULT_SPRING_K);
        let widget = WidgetState::default();
        let center = spec.rest_handle_center();
        let contact = report_with_mid(center.coords.into());
        let arm = ArmState::at_rest([0.0; NUM_JOINTS]);
        let r = compute_reward(&RewardParams::default(), &contact, &arm, &widget, &spec, false);
        assert_eq!(r.distance_penalty, 0.0);
        assert_eq!(r.movement_penalty, 0.0);
        assert_eq!(r.completion, 0.0);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn distance_penalty_clamps_at_one_metre() {
        // k_distance = 0.02 saturates the -0.01 clamp at half a metre,
        // so a metre away is firmly clamped.
        let spec = WidgetSpec::button(0.04, [0.3, 0.0, 0.0], DEFAULT_SPRING_K);
        let widget = WidgetState::default();
        let center = spec.rest_handle_center();
        let contact = report_with_mid([center.x + 1.0, center.y, center.z]);
        let arm = ArmState::at_rest([0.0; NUM_JOINTS]);
        let r = compute_reward(&RewardParams::default(), &contact, &arm, &widget, &spec, false);
        assert_eq!(r.distance_penalty, -0.01);
    }

    #[test]
    fn completion_pays_once_on_the_transition() {
        let spec = WidgetSpec::button(0.04, [0.3, 0.0, 0.0], DEFAULT_SPRING_K);
        let mut widget = WidgetState { displacement: 0.021, velocity: 0.0, triggered: false };
        widget.update_trigger(&spec);
        assert!(widget.triggered);
        let contact = report_with_mid(spec.handle_center(widget.displacement).coords.into());
        let arm = ArmState::at_rest([0.0; NUM_JOINTS]);

        let fresh = compute_reward(&RewardParams::default(), &contact, &arm, &widget, &spec, false);
        assert_eq!(fresh.completion, 1.0);
        assert!(fresh.total >= 0.98);

        let repeat = compute_reward(&RewardParams::default(), &contact, &arm, &widget, &spec, true);
        assert_eq!(repeat.completion, 0.0);
    }

    #[test]
    fn movement_penalty_uses_mean_absolute_speed() {
        let spec = WidgetSpec::button(0.04, [0.3, 0.0, 0.0], DEFAULT_SPRING_K);
        let widget = WidgetState::default();
        let contact = report_with_mid(spec.rest_handle_center().coords.into());
        let arm = ArmState {
            angles: [0.0; NUM_JOINTS],
            velocities: [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0],
        };
        let r = compute_reward(&RewardParams::default(), &contact, &arm, &widget, &spec, false);
        // Mean |velocity| is exactly 1 rad/s.
        assert_eq!(r.movement_penalty, -0.005);
    }
}
