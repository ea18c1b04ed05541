//! Arm model: configuration, state and forward kinematics.
//!
//! The arm is a serial chain mounted at a fixed shoulder position:
//!
//! ```text
//! shoulder --(upper arm)--> elbow --(forearm)--> wrist --(fingers)--> tips
//! ```
//!
//! Joint axis conventions (all right-handed, world frame at zero pose):
//!
//! | idx | joint          | axis at zero pose | effect of positive angle      |
//! |-----|----------------|-------------------|-------------------------------|
//! | 0   | shoulder yaw   | +Z                | swings arm toward +Y          |
//! | 1   | shoulder pitch | +Y                | lowers the arm toward -Z      |
//! | 2   | elbow pitch    | +Y                | bends forearm further down    |
//! | 3   | forearm roll   | forearm axis      | rolls the hand                |
//! | 4   | wrist pitch    | hand +Y           | pitches the hand down         |
//! | 5   | wrist yaw      | hand +Z           | yaws the hand toward +Y       |
//! | 6   | grip           | parallel jaw      | widens the finger spread      |
//!
//! At the zero pose the whole chain is a straight line along +X; the
//! fingertip midpoint is then `shoulder_pos + (upper + forearm + finger)·x̂`.
//! The grip joint is a parallel-jaw spread: both fingers stay parallel to
//! the hand axis and translate laterally by `grip_radius` metres per
//! radian of grip angle, so the fingertip midpoint is exactly invariant
//! to the grip angle.

use nalgebra::{Matrix3, Point3, SMatrix, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{all_finite, Result, SimError};

/// Number of actuated degrees of freedom.
pub const NUM_JOINTS: usize = 7;

/// Geometry, actuation limits and per-joint dynamics constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmConfig {
    /// Shoulder-to-elbow length (m).
    pub upper_arm_len: f64,
    /// Elbow-to-wrist length (m).
    pub forearm_len: f64,
    /// Wrist-to-fingertip length (m).
    pub finger_len: f64,
    /// Fixed shoulder mount position (m, world frame).
    pub shoulder_pos: [f64; 3],
    /// Per-joint `(lower, upper)` angle limits (rad).
    pub joint_limits: [(f64, f64); NUM_JOINTS],
    /// Motor force magnitude bound; commands live in `[-max_force, +max_force]`.
    pub max_force: f64,
    /// Per-joint viscous damping (force·s/rad).
    pub joint_damping: [f64; NUM_JOINTS],
    /// Per-joint effective inertia (force·s²/rad).
    pub joint_inertia: [f64; NUM_JOINTS],
    /// Per-joint angular speed cap (rad/s). The motors behave like
    /// speed-limited servos; this bounds fingertip approach speeds so
    /// contact penetration stays small at full drive force.
    pub joint_vel_limit: [f64; NUM_JOINTS],
    /// Half the finger separation at zero grip angle (m).
    pub finger_base_spread: f64,
    /// Change in half-separation per radian of grip angle (m/rad).
    pub grip_radius: f64,
    /// Radius of each fingertip contact sphere (m).
    pub fingertip_radius: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            upper_arm_len: 0.24,
            forearm_len: 0.27,
            finger_len: 0.06,
            shoulder_pos: [-0.055, 0.0, 0.22],
            joint_limits: [
                (-1.6, 1.6),  // shoulder yaw
                (-1.2, 2.0),  // shoulder pitch
                (0.0, 2.6),   // elbow
                (-1.6, 1.6),  // forearm roll
                (-1.6, 1.6),  // wrist pitch
                (-1.0, 1.0),  // wrist yaw
                (-0.4, 1.2),  // grip
            ],
            max_force: 200.0,
            joint_damping: [8.0, 2.5, 1.6, 4.0, 1.0, 4.0, 1.0],
            joint_inertia: [2.0, 1.6, 1.0, 0.5, 0.15, 0.15, 0.05],
            joint_vel_limit: [2.0, 2.0, 3.0, 6.0, 6.0, 6.0, 6.0],
            finger_base_spread: 0.012,
            grip_radius: 0.03,
            fingertip_radius: 0.008,
        }
    }
}

impl ArmConfig {
    pub fn shoulder(&self) -> Point3<f64> {
        Point3::new(self.shoulder_pos[0], self.shoulder_pos[1], self.shoulder_pos[2])
    }

    /// Total reach at the zero pose (m).
    pub fn reach(&self) -> f64 {
        self.upper_arm_len + self.forearm_len + self.finger_len
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [self.upper_arm_len, self.forearm_len, self.finger_len];
        if lengths.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(SimError::BadArmConfig("segment lengths must be positive".into()));
        }
        if !(self.max_force.is_finite() && self.max_force > 0.0) {
            return Err(SimError::BadArmConfig("max_force must be positive".into()));
        }
        for (i, (lo, hi)) in self.joint_limits.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SimError::BadArmConfig(format!("joint {i} limits must satisfy lower < upper")));
            }
        }
        for i in 0..NUM_JOINTS {
            if self.joint_inertia[i] <= 0.0 || self.joint_damping[i] < 0.0 {
                return Err(SimError::BadArmConfig(format!("joint {i} inertia/damping out of range")));
            }
            if !(self.joint_vel_limit[i].is_finite() && self.joint_vel_limit[i] > 0.0) {
                return Err(SimError::BadArmConfig(format!("joint {i} velocity limit must be positive")));
            }
        }
        if self.fingertip_radius <= 0.0 || self.grip_radius <= 0.0 || self.finger_base_spread < 0.0 {
            return Err(SimError::BadArmConfig("finger geometry out of range".into()));
        }
        Ok(())
    }

    /// Clamp angles into the joint-limit box.
    pub fn clamp_angles(&self, angles: &mut [f64; NUM_JOINTS]) {
        for (a, (lo, hi)) in angles.iter_mut().zip(self.joint_limits.iter()) {
            *a = a.clamp(*lo, *hi);
        }
    }
}

/// Instantaneous joint-space state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    /// Joint angles (rad).
    pub angles: [f64; NUM_JOINTS],
    /// Joint angular velocities (rad/s).
    pub velocities: [f64; NUM_JOINTS],
}

impl ArmState {
    pub fn at_rest(angles: [f64; NUM_JOINTS]) -> Self {
        Self { angles, velocities: [0.0; NUM_JOINTS] }
    }

    /// Total rotational kinetic energy `½ Σ I_i ω_i²`.
    pub fn kinetic_energy(&self, config: &ArmConfig) -> f64 {
        self.velocities
            .iter()
            .zip(config.joint_inertia.iter())
            .map(|(v, i)| 0.5 * i * v * v)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.angles) && all_finite(&self.velocities)
    }
}

/// Solved chain poses plus the frames needed for Jacobians.
#[derive(Debug, Clone)]
pub struct FkState {
    pub shoulder: Point3<f64>,
    pub elbow: Point3<f64>,
    pub wrist: Point3<f64>,
    /// Orientation of the hand (finger) frame.
    pub hand_rot: UnitQuaternion<f64>,
    /// The two fingertip centers.
    pub fingertips: [Point3<f64>; 2],
    /// Midpoint between the fingertips; invariant to the grip angle.
    pub fingertip_mid: Point3<f64>,
    /// Rotation axis of each revolute joint (world frame).
    axes: [Vector3<f64>; 6],
    /// A point on each revolute joint's axis.
    origins: [Point3<f64>; 6],
    /// World-frame direction along which the grip translates finger 0
    /// (finger 1 moves the opposite way).
    grip_dir: Vector3<f64>,
    grip_radius: f64,
}

/// Lateral sign of each finger in the hand frame.
const FINGER_SIGN: [f64; 2] = [1.0, -1.0];

impl FkState {
    /// Position Jacobian column `∂tip/∂q_j` for one fingertip.
    pub fn tip_jacobian_column(&self, finger: usize, joint: usize) -> Vector3<f64> {
        if joint < 6 {
            let r = self.fingertips[finger] - self.origins[joint];
            self.axes[joint].cross(&r)
        } else {
            self.grip_dir * (FINGER_SIGN[finger] * self.grip_radius)
        }
    }

    /// Linear velocity of one fingertip for the given joint velocities.
    pub fn tip_velocity(&self, finger: usize, joint_vel: &[f64; NUM_JOINTS]) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        for (j, w) in joint_vel.iter().enumerate() {
            if *w != 0.0 {
                v += self.tip_jacobian_column(finger, j) * *w;
            }
        }
        v
    }

    /// Joint torques produced by a force applied at one fingertip: `Jᵀ F`.
    pub fn tip_force_to_torques(&self, finger: usize, force: &Vector3<f64>) -> [f64; NUM_JOINTS] {
        let mut tau = [0.0; NUM_JOINTS];
        for (j, t) in tau.iter_mut().enumerate() {
            *t = self.tip_jacobian_column(finger, j).dot(force);
        }
        tau
    }
}

/// Solve the chain for the given joint angles.
///
/// Returns the pose of every link and the fingertip midpoint. Rejects
/// non-finite input.
pub fn forward_kinematics(config: &ArmConfig, angles: &[f64; NUM_JOINTS]) -> Result<FkState> {
    if !all_finite(angles) {
        return Err(SimError::NonFinite { context: "joint angles" });
    }

    let x = Vector3::x_axis();
    let y = Vector3::y_axis();
    let z = Vector3::z_axis();

    let shoulder = config.shoulder();
    let r_yaw = UnitQuaternion::from_axis_angle(&z, angles[0]);
    let r_upper = r_yaw * UnitQuaternion::from_axis_angle(&y, angles[1]);
    let elbow = shoulder + r_upper * (x.into_inner() * config.upper_arm_len);

    let r_fore = r_upper * UnitQuaternion::from_axis_angle(&y, angles[2]);
    let r_roll = r_fore * UnitQuaternion::from_axis_angle(&x, angles[3]);
    let wrist = elbow + r_fore * (x.into_inner() * config.forearm_len);

    let r_wpitch = r_roll * UnitQuaternion::from_axis_angle(&y, angles[4]);
    let hand_rot = r_wpitch * UnitQuaternion::from_axis_angle(&z, angles[5]);

    let spread = config.finger_base_spread + config.grip_radius * angles[6];
    let forward = hand_rot * (x.into_inner() * config.finger_len);
    let lateral = hand_rot * (y.into_inner() * spread);
    let tip0 = wrist + forward + lateral;
    let tip1 = wrist + forward - lateral;
    let fingertip_mid = wrist + forward;

    let axes = [
        z.into_inner(),
        r_yaw * y.into_inner(),
        r_upper * y.into_inner(),
        r_fore * x.into_inner(),
        r_roll * y.into_inner(),
        r_wpitch * z.into_inner(),
    ];
    let origins = [shoulder, shoulder, elbow, elbow, wrist, wrist];

    Ok(FkState {
        shoulder,
        elbow,
        wrist,
        hand_rot,
        fingertips: [tip0, tip1],
        fingertip_mid,
        axes,
        origins,
        grip_dir: hand_rot * y.into_inner(),
        grip_radius: config.grip_radius,
    })
}

/// Damped-least-squares inverse kinematics for the fingertip midpoint.
///
/// Iterates from `initial`, clamping every candidate to the joint limits,
/// and returns angles whose fingertip midpoint lands within `tol` of
/// `target` (or `None` if 300 iterations were not enough, e.g. the target
/// is out of reach). The grip angle is passed through untouched since it
/// cannot move the midpoint. This is a utility for scripted baselines and
/// test fixtures, not part of the control loop.
pub fn solve_reach(
    config: &ArmConfig,
    target: &Point3<f64>,
    initial: &[f64; NUM_JOINTS],
    tol: f64,
) -> Option<[f64; NUM_JOINTS]> {
    const DAMPING: f64 = 2e-3;
    let mut q = *initial;
    config.clamp_angles(&mut q);
    for _ in 0..300 {
        let fk = forward_kinematics(config, &q).ok()?;
        let err = target - fk.fingertip_mid;
        if err.norm() <= tol {
            return Some(q);
        }
        // Midpoint Jacobian: mean of the two fingertip columns, so the
        // lateral grip terms cancel. Grip column is identically zero.
        let mut jac = SMatrix::<f64, 3, 6>::zeros();
        for j in 0..6 {
            let col = (fk.tip_jacobian_column(0, j) + fk.tip_jacobian_column(1, j)) * 0.5;
            jac.set_column(j, &col);
        }
        let gram = jac * jac.transpose() + Matrix3::identity() * DAMPING;
        let rhs = gram.try_inverse()? * err;
        let dq = jac.transpose() * rhs;
        for j in 0..6 {
            q[j] += dq[j].clamp(-0.2, 0.2);
        }
        config.clamp_angles(&mut q);
    }
    None
}
