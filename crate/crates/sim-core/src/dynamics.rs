//! Time stepping for the coupled arm + widget system.
//!
//! One `step_dynamics` call advances the world by `SimParams::dt`, split
//! into `substeps` internal substeps. Each substep:
//!
//! 1. solves forward kinematics at the current joint angles,
//! 2. evaluates fingertip contact against the handle box and the table,
//! 3. integrates joint velocities semi-implicitly under
//!    `(motor + contact − damping·velocity) / inertia`, applying the
//!    servo speed caps and hard joint limits (velocity zeroed at a limit),
//! 4. integrates the 1-DOF handle with the passive spring force treated
//!    implicitly (stable for arbitrarily stiff springs), then projects
//!    the displacement onto its rail limits,
//! 5. latches the trigger if the goal displacement was reached.
//!
//! Motion orthogonal to the mechanism axis never enters the handle state,
//! so the prismatic constraint holds exactly. Everything is straight-line
//! f64 arithmetic with a fixed evaluation order: identical inputs produce
//! bitwise-identical outputs.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::arm::{forward_kinematics, ArmConfig, ArmState, FkState, NUM_JOINTS};
use crate::contact::{penalty_force, sphere_box_distance, ContactReport, FINGER_COUNT};
use crate::widget::{widget_restoring_force, Mechanism, WidgetSpec, WidgetState};
use crate::{all_finite, Result, SimError};

/// Integration and contact constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Control timestep (s); one `step_dynamics` call advances this far.
    pub dt: f64,
    /// Internal substeps per control step.
    pub substeps: u32,
    /// Contact normal stiffness (force/m).
    pub contact_stiffness: f64,
    /// Contact normal damping (force·s/m).
    pub contact_damping: f64,
    /// Tangential slip damping while in contact (force·s/m). Together
    /// with `friction_mu` this forms a regularized Coulomb model:
    /// viscous at micro-slip speeds, capped at `mu`·normal force above
    /// them. Without it a fingertip skids off a handle mid-press.
    pub friction_damping: f64,
    /// Coulomb friction coefficient capping the tangential force.
    pub friction_mu: f64,
    /// Handle mass along its mechanism axis.
    pub handle_mass: f64,
    /// Handle viscous damping (force·s/m).
    pub handle_damping: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.01,
            substeps: 20,
            contact_stiffness: 4.0e6,
            contact_damping: 5.0e3,
            friction_damping: 2.0e2,
            friction_mu: 0.8,
            handle_mass: 0.25,
            handle_damping: 8.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::BadSimParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(SimError::BadSimParams("substeps must be at least 1".into()));
        }
        if self.contact_stiffness <= 0.0
            || self.contact_damping < 0.0
            || self.friction_damping < 0.0
            || self.friction_mu < 0.0
            || self.handle_mass <= 0.0
            || self.handle_damping < 0.0
        {
            return Err(SimError::BadSimParams("contact/handle constants out of range".into()));
        }
        Ok(())
    }

    /// Substep length (s).
    pub fn substep_dt(&self) -> f64 {
        self.dt / self.substeps as f64
    }
}

/// Contact forces evaluated at one instant.
struct ContactEval {
    /// Force on each fingertip (world frame).
    tip_forces: [Vector3<f64>; FINGER_COUNT],
    fingertips: [Point3<f64>; FINGER_COUNT],
    /// Smallest signed fingertip-to-handle distance.
    min_distance: f64,
    /// Total force on the handle (world frame).
    handle_force: Vector3<f64>,
    /// Component of `handle_force` along the mechanism axis.
    handle_drive: f64,
    /// Stiffness of the active contacts as seen by the handle DOF
    /// (`Σ k·(n·axis)²`), used to integrate the contact implicitly.
    handle_contact_stiffness: f64,
    /// Damping of the active contacts as seen by the handle DOF.
    handle_contact_damping: f64,
    /// Rate at which the fingertips' own motion loads the contact springs
    /// (`Σ k·(n·axis)·(tip_vel·n)`, force per second). Anchors the
    /// implicit stiffness term to the moving tips: without it that term
    /// reads `-h·k·v'` and silently caps the handle speed at
    /// `force/(h·k)` however hard the tips push.
    handle_drive_rate: f64,
}

fn eval_contacts(
    config: &ArmConfig,
    fk: &FkState,
    joint_vel: &[f64; NUM_JOINTS],
    spec: &WidgetSpec,
    widget: &WidgetState,
    params: &SimParams,
) -> ContactEval {
    let handle_center = spec.handle_center(widget.displacement);
    let half = spec.handle_half_extents();
    let handle_vel = widget.world_velocity(spec);
    let travel = spec.travel_dir();
    let radius = config.fingertip_radius;

    let mut eval = ContactEval {
        tip_forces: [Vector3::zeros(); FINGER_COUNT],
        fingertips: fk.fingertips,
        min_distance: f64::INFINITY,
        handle_force: Vector3::zeros(),
        handle_drive: 0.0,
        handle_contact_stiffness: 0.0,
        handle_contact_damping: 0.0,
        handle_drive_rate: 0.0,
    };

    for finger in 0..FINGER_COUNT {
        let tip = fk.fingertips[finger];
        let tip_vel = fk.tip_velocity(finger, joint_vel);

        let (dist, normal) = sphere_box_distance(&handle_center, &half, &tip, radius);
        eval.min_distance = eval.min_distance.min(dist);
        if dist < 0.0 {
            let rel_vel = tip_vel - handle_vel;
            let approach = -rel_vel.dot(&normal);
            let magnitude =
                penalty_force(-dist, approach, params.contact_stiffness, params.contact_damping);
            let friction = friction_force(&rel_vel, &normal, magnitude, params);
            eval.tip_forces[finger] += normal * magnitude + friction;
            eval.handle_force -= normal * magnitude + friction;
            let normal_along_travel = normal.dot(&travel);
            let coupling = normal_along_travel * normal_along_travel;
            eval.handle_contact_stiffness += params.contact_stiffness * coupling;
            eval.handle_contact_damping += params.contact_damping * coupling;
            eval.handle_drive_rate +=
                params.contact_stiffness * normal_along_travel * tip_vel.dot(&normal);
            // Friction couples the handle to tangential slip; fold its
            // (uncapped) damping into the implicit handle update so a
            // stiff slip constant cannot destabilize the substep.
            let travel_tangential = travel - normal * normal.dot(&travel);
            eval.handle_contact_damping +=
                params.friction_damping * travel_tangential.norm_squared();
        }

        // Table plane at z = 0; keeps fingertips above the desk.
        let gap = tip.z - radius;
        if gap < 0.0 {
            let magnitude = penalty_force(
                -gap,
                -tip_vel.z,
                params.contact_stiffness,
                params.contact_damping,
            );
            let friction = friction_force(&tip_vel, &Vector3::z(), magnitude, params);
            eval.tip_forces[finger] += Vector3::z() * magnitude + friction;
        }
    }
    eval.handle_drive = eval.handle_force.dot(&travel);
    eval
}

/// Regularized Coulomb friction on a penetrating contact: viscous in the
/// relative slip velocity, capped at `mu` times the normal force. Zero
/// whenever the normal force is zero, so separating contacts never drag.
fn friction_force(
    rel_vel: &Vector3<f64>,
    normal: &Vector3<f64>,
    normal_force: f64,
    params: &SimParams,
) -> Vector3<f64> {
    let slip = rel_vel - normal * rel_vel.dot(normal);
    let mut force = -slip * params.friction_damping;
    let cap = params.friction_mu * normal_force;
    let magnitude = force.norm();
    if magnitude > cap {
        force *= cap / magnitude;
    }
    force
}

/// Handle stiffness seen by the implicit integrator at displacement `s`.
fn passive_stiffness(spec: &WidgetSpec, s: f64) -> f64 {
    let spring = match spec.mechanism() {
        Mechanism::Press => spec.spring_k,
        Mechanism::Slide => 0.0,
    };
    let (lo, hi) = spec.rail_limits;
    if s < lo || s > hi {
        spring + spec.stop_stiffness
    } else {
        spring
    }
}

/// Advance the arm + widget by one control step.
///
/// `forces` are the per-motor commands, each in
/// `[-max_force, +max_force]`. Rejects non-finite inputs and
/// out-of-range forces before touching any state.
pub fn step_dynamics(
    config: &ArmConfig,
    arm: &ArmState,
    spec: &WidgetSpec,
    widget: &WidgetState,
    forces: &[f64; NUM_JOINTS],
    params: &SimParams,
) -> Result<(ArmState, WidgetState, ContactReport)> {
    params.validate()?;
    if !arm.is_finite() {
        return Err(SimError::NonFinite { context: "arm state" });
    }
    if !(widget.displacement.is_finite() && widget.velocity.is_finite()) {
        return Err(SimError::NonFinite { context: "widget state" });
    }
    if !all_finite(forces) {
        return Err(SimError::NonFinite { context: "motor forces" });
    }
    for (joint, f) in forces.iter().enumerate() {
        if f.abs() > config.max_force {
            return Err(SimError::ForceOutOfRange { joint, value: *f, max: config.max_force });
        }
    }

    let h = params.substep_dt();
    let mut arm = *arm;
    let mut widget = *widget;
    let mut deepest_penetration: f64 = 0.0;

    for _ in 0..params.substeps {
        let fk = forward_kinematics(config, &arm.angles)?;
        let contacts = eval_contacts(config, &fk, &arm.velocities, spec, &widget, params);
        deepest_penetration = deepest_penetration.max(-contacts.min_distance);

        let mut torques = *forces;
        for finger in 0..FINGER_COUNT {
            let force = contacts.tip_forces[finger];
            if force != Vector3::zeros() {
                let tau = fk.tip_force_to_torques(finger, &force);
                for (total, t) in torques.iter_mut().zip(tau.iter()) {
                    *total += t;
                }
            }
        }

        for j in 0..NUM_JOINTS {
            let accel = (torques[j] - config.joint_damping[j] * arm.velocities[j])
                / config.joint_inertia[j];
            let cap = config.joint_vel_limit[j];
            let mut w = (arm.velocities[j] + h * accel).clamp(-cap, cap);
            let mut a = arm.angles[j] + h * w;
            let (lo, hi) = config.joint_limits[j];
            if a <= lo {
                a = lo;
                w = w.max(0.0);
            } else if a >= hi {
                a = hi;
                w = w.min(0.0);
            }
            arm.angles[j] = a;
            arm.velocities[j] = w;
        }

        // Handle along its mechanism axis. Both the passive force and the
        // contact force are linearized about the current state and folded
        // into the update implicitly, so neither stiff springs nor stiff
        // contacts can destabilize the substep:
        //   v' = (v·(1 + (h/m)c) + (h/m)(F(s,v) + h·G)) / (1 + (h/m)c + (h²/m)k)
        // with c and k the total damping/stiffness seen by the handle DOF
        // and G the rate the moving fingertips load the contact springs.
        // G re-anchors the implicit contact term to the tips, turning
        // -h·k·v' into -h·k·(v' - v_tips): when tip and handle move
        // together the term vanishes instead of braking the handle.
        let passive = widget_restoring_force(spec, &widget);
        let k = passive_stiffness(spec, widget.displacement) + contacts.handle_contact_stiffness;
        let c = params.handle_damping + contacts.handle_contact_damping;
        let m = params.handle_mass;
        let total_force = contacts.handle_drive + passive
            - params.handle_damping * widget.velocity
            + h * contacts.handle_drive_rate;
        let denom = 1.0 + (h / m) * c + (h * h / m) * k;
        let mut v = (widget.velocity * (1.0 + (h / m) * c) + (h / m) * total_force) / denom;
        let mut s = widget.displacement + h * v;
        let (lo, hi) = spec.rail_limits;
        if s <= lo {
            s = lo;
            v = v.max(0.0);
        } else if s >= hi {
            s = hi;
            v = v.min(0.0);
        }
        widget.displacement = s;
        widget.velocity = v;
        widget.update_trigger(spec);
    }

    // Report contact at the post-step state so callers see what the next
    // observation will see.
    let fk = forward_kinematics(config, &arm.angles)?;
    let contacts = eval_contacts(config, &fk, &arm.velocities, spec, &widget, params);
    deepest_penetration = deepest_penetration.max(-contacts.min_distance);
    let report = ContactReport {
        fingertip_pos: [
            [contacts.fingertips[0].x, contacts.fingertips[0].y, contacts.fingertips[0].z],
            [contacts.fingertips[1].x, contacts.fingertips[1].y, contacts.fingertips[1].z],
        ],
        min_distance: contacts.min_distance,
        contact_force: [
            contacts.handle_force.x,
            contacts.handle_force.y,
            contacts.handle_force.z,
        ],
        deepest_penetration: deepest_penetration.max(0.0),
    };
    Ok((arm, widget, report))
}
