//! Temporary tuning probe: measures how quickly sustained fingertip
//! forces depress/slide widgets, and how often an untrained Gaussian
//! policy triggers widgets by accident. Not part of the shipped API.

use env_mdp::{EnvConfig, Observation, WidgetEnv};
use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sim_core::{forward_kinematics, ArmConfig, WidgetKind, NUM_JOINTS};

fn midpoint_state(arm_config: &ArmConfig, obs: &Observation) -> (Point3<f64>, Vector3<f64>) {
    let mut angles = [0.0; NUM_JOINTS];
    angles.copy_from_slice(&obs.proprioception[..NUM_JOINTS]);
    let mut velocities = [0.0; NUM_JOINTS];
    velocities.copy_from_slice(&obs.proprioception[NUM_JOINTS..]);
    let fk = forward_kinematics(arm_config, &angles).unwrap();
    let vel = (fk.tip_velocity(0, &velocities) + fk.tip_velocity(1, &velocities)) * 0.5;
    (fk.fingertip_mid, vel)
}

fn cartesian_action(
    arm_config: &ArmConfig,
    obs: &Observation,
    force: Vector3<f64>,
) -> [f64; NUM_JOINTS] {
    let mut angles = [0.0; NUM_JOINTS];
    angles.copy_from_slice(&obs.proprioception[..NUM_JOINTS]);
    let fk = forward_kinematics(arm_config, &angles).unwrap();
    let mut action = [0.0; NUM_JOINTS];
    for (j, a) in action.iter_mut().enumerate() {
        let col = (fk.tip_jacobian_column(0, j) + fk.tip_jacobian_column(1, j)) * 0.5;
        *a = col.dot(&force).clamp(-arm_config.max_force, arm_config.max_force);
    }
    action
}

/// Press a button with a sustained downward force; returns (steps in the
/// approach phase, steps from first press command to trigger, max
/// displacement reached). Trace printed when `trace` is set.
fn press_timing(fz: f64, lateral_gain: f64, trace: bool) -> (usize, Option<usize>, f64) {
    let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
    let mut obs = env.reset(7);
    let arm_config = env.config().arm.clone();
    let mut approach_steps = 0usize;
    let mut press_steps = 0usize;
    let mut pressing = false;
    let mut max_disp: f64 = 0.0;
    let mut trigger_at = None;
    while !env.done() {
        let (mid, vel) = midpoint_state(&arm_config, &obs);
        let center =
            Point3::new(obs.handle_center[0], obs.handle_center[1], obs.handle_center[2]);
        let top_z = center.z + obs.handle_dims[2] / 2.0;
        let clearance = arm_config.fingertip_radius + 0.002;
        if mid.z <= top_z + clearance + 0.004 {
            pressing = true;
        }
        let force = if pressing {
            Vector3::new(
                lateral_gain * (center.x - mid.x) - 0.005 * lateral_gain * vel.x,
                lateral_gain * (center.y - mid.y) - 0.005 * lateral_gain * vel.y,
                -fz - 20.0 * vel.z,
            )
        } else {
            let target = Point3::new(center.x, center.y, top_z + clearance);
            1.5e4 * (target - mid) - 300.0 * vel
        };
        let out = env.step(&cartesian_action(&arm_config, &obs, force)).unwrap();
        if pressing {
            press_steps += 1;
        } else {
            approach_steps += 1;
        }
        let disp = obs.handle_center[2] - (out.observation.handle_center[2]);
        max_disp = max_disp.max(env.widget().displacement);
        if trace && pressing && press_steps <= 40 {
            let angles = &out.observation.proprioception[..NUM_JOINTS];
            let vels = &out.observation.proprioception[NUM_JOINTS..];
            let action = cartesian_action(&arm_config, &obs, force);
            // Quasi-static drive estimate from the handle side: spring
            // plus handle damping at the observed rate.
            let w = env.widget();
            let drive = env.spec().spring_k * w.displacement
                + env.config().sim.handle_damping * w.velocity;
            println!(
                "    t={press_steps:3} disp={:+.5} ddisp={:+.6} tipz={:.4} drive~{drive:+.1}\n        q={:?}\n        w={:?}\n        u={:?}",
                w.displacement,
                disp,
                mid.z,
                angles.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                vels.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                action.iter().map(|a| (a * 10.0).round() / 10.0).collect::<Vec<_>>(),
            );
        }
        if out.reward.completion == 1.0 {
            trigger_at = Some(press_steps);
        }
        obs = out.observation;
    }
    (approach_steps, trigger_at, max_disp)
}

/// Slide a slider with a sustained lateral force; returns (staging steps,
/// steps from first push to trigger, max displacement).
fn slide_timing(fx: f64) -> (usize, Option<usize>, f64) {
    let config = EnvConfig { widget_kind: WidgetKind::Slider, ..Default::default() };
    let mut env = WidgetEnv::new(config).unwrap();
    let mut obs = env.reset(7);
    let arm_config = env.config().arm.clone();
    let mut staging_steps = 0usize;
    let mut push_steps = 0usize;
    let mut pushing = false;
    let mut max_disp: f64 = 0.0;
    let mut trigger_at = None;
    while !env.done() {
        let (mid, vel) = midpoint_state(&arm_config, &obs);
        let center =
            Point3::new(obs.handle_center[0], obs.handle_center[1], obs.handle_center[2]);
        let staging = Point3::new(
            center.x - obs.handle_dims[0] / 2.0 - arm_config.fingertip_radius - 0.006,
            center.y,
            center.z,
        );
        if (mid - staging).norm() < 0.004 {
            pushing = true;
        }
        let force = if pushing {
            Vector3::new(
                fx - 20.0 * vel.x,
                2.0e4 * (center.y - mid.y) - 100.0 * vel.y,
                2.0e4 * (center.z - mid.z) - 100.0 * vel.z,
            )
        } else {
            1.5e4 * (staging - mid) - 300.0 * vel
        };
        let out = env.step(&cartesian_action(&arm_config, &obs, force)).unwrap();
        if pushing {
            push_steps += 1;
        } else {
            staging_steps += 1;
        }
        max_disp = max_disp.max(env.widget().displacement);
        if out.reward.completion == 1.0 {
            trigger_at = Some(push_steps);
        }
        obs = out.observation;
    }
    (staging_steps, trigger_at, max_disp)
}

/// Fraction of episodes an untrained policy (zero mean, per-joint normal
/// noise scaled like the initial log_std) triggers the widget.
fn discovery_rate(kind: WidgetKind, sigma_normalized: f64, episodes: u64) -> (f64, f64, f64) {
    let config = EnvConfig { widget_kind: kind, ..Default::default() };
    let mut env = WidgetEnv::new(config).unwrap();
    let max_force = env.config().arm.max_force;
    let normal = Normal::new(0.0, sigma_normalized).unwrap();
    let mut triggers = 0u64;
    let mut disp_sum = 0.0;
    let mut disp_best: f64 = 0.0;
    for ep in 0..episodes {
        env.reset(ep);
        let mut rng = ChaCha8Rng::seed_from_u64(ep ^ 0xDEADBEEF);
        let mut ep_best: f64 = 0.0;
        while !env.done() {
            let mut action = [0.0; NUM_JOINTS];
            for a in &mut action {
                let raw: f64 = normal.sample(&mut rng);
                *a = raw.clamp(-1.0, 1.0) * max_force;
            }
            env.step(&action).unwrap();
            ep_best = ep_best.max(env.widget().displacement);
        }
        if env.succeeded() {
            triggers += 1;
        }
        disp_sum += ep_best;
        disp_best = disp_best.max(ep_best);
    }
    (triggers as f64 / episodes as f64, disp_sum / episodes as f64, disp_best)
}

/// Grid-search shoulder pitch / elbow / wrist pitch for a pose whose
/// fingertip midpoint lands near the target, fingers angled downward.
fn pose_search(target: Point3<f64>) {
    let config = ArmConfig::default();
    // Score: admittance of vertical tip motion with horizontal drift
    // pinned (Schur complement of the damping-weighted J J^T in the
    // sagittal plane). High means a press can descend without the joints
    // fighting each other through their damping.
    let mut best: Vec<(f64, f64, [f64; 3])> = Vec::new();
    let steps = 80;
    for ip in 0..steps {
        let pitch = -1.2 + 3.2 * ip as f64 / steps as f64;
        for ie in 0..steps {
            let elbow = 2.6 * ie as f64 / steps as f64;
            for iw in 0..steps {
                let wrist = -1.6 + 3.2 * iw as f64 / steps as f64;
                let angles = [0.0, pitch, elbow, 0.0, wrist, 0.0, 0.0];
                let Ok(fk) = forward_kinematics(&config, &angles) else { continue };
                let err = (fk.fingertip_mid - target).norm();
                if err > 0.002 {
                    continue;
                }
                let (mut axx, mut azz, mut axz) = (0.0, 0.0, 0.0);
                for j in 0..NUM_JOINTS {
                    let col = (fk.tip_jacobian_column(0, j) + fk.tip_jacobian_column(1, j)) * 0.5;
                    let d = config.joint_damping[j];
                    axx += col.x * col.x / d;
                    azz += col.z * col.z / d;
                    axz += col.x * col.z / d;
                }
                let y_constrained = azz - axz * axz / axx.max(1e-12);
                best.push((y_constrained, err, [pitch, elbow, wrist]));
            }
        }
    }
    best.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (y, err, angles) in best.iter().take(8) {
        println!(
            "  pitch={:+.3} elbow={:+.3} wrist={:+.3}  Y_constr={y:.4} err={err:.4}",
            angles[0], angles[1], angles[2]
        );
    }
}

fn main() {
    if std::env::args().nth(1).as_deref() == Some("jac") {
        let config = ArmConfig::default();
        let extra: Vec<f64> =
            std::env::args().skip(2).filter_map(|a| a.parse().ok()).collect();
        let angles = if extra.len() == 3 {
            [0.0, extra[0], extra[1], 0.0, extra[2], 0.0, 0.0]
        } else {
            env_mdp::REST_POSE
        };
        let fk = forward_kinematics(&config, &angles).unwrap();
        println!("tip: {:?}", fk.fingertip_mid);
        println!("elbow: {:?}  wrist: {:?}", fk.elbow, fk.wrist);
        for j in 0..NUM_JOINTS {
            let col = (fk.tip_jacobian_column(0, j) + fk.tip_jacobian_column(1, j)) * 0.5;
            println!(
                "  joint {j}: col=({:+.4}, {:+.4}, {:+.4})  damping={}",
                col.x, col.y, col.z, config.joint_damping[j]
            );
        }
        return;
    }
    if std::env::args().nth(1).as_deref() == Some("pose") {
        let rest = forward_kinematics(&ArmConfig::default(), &env_mdp::REST_POSE).unwrap();
        println!("current rest tip: {:?}", rest.fingertip_mid);
        println!("= poses reaching (0.30, 0, 0.055) =");
        pose_search(Point3::new(0.30, 0.0, 0.055));
        return;
    }
    println!("= sustained press timing (button, goal 0.02, full travel 0.025) =");
    for gain in [0.0, 2.0e3, 2.0e4] {
        for fz in [25.0, 50.0, 100.0, 200.0] {
            let (approach, trigger, max_disp) = press_timing(fz, gain, false);
            println!(
                "  gain={gain:7.0} fz={fz:5.0}  approach={approach:3}  trigger={:?}  max_disp={max_disp:.5}",
                trigger
            );
        }
    }
    println!("= press trace at fz=50 gain=2000 =");
    press_timing(50.0, 2.0e3, true);

    println!("= sustained slide timing (slider, goal 0.04) =");
    for fx in [25.0, 50.0, 100.0, 160.0] {
        let (staging, trigger, max_disp) = slide_timing(fx);
        println!(
            "  fx={fx:5.0}  staging={staging:3} steps  trigger={:?} steps  max_disp={max_disp:.5}",
            trigger
        );
    }

    println!("= untrained-policy discovery over 400 episodes =");
    for kind in [WidgetKind::Button, WidgetKind::Slider, WidgetKind::Deceptive] {
        for sigma in [0.5, 1.0] {
            let (rate, mean_disp, best_disp) = discovery_rate(kind, sigma, 400);
            println!(
                "  {kind:?} sigma={sigma}: trigger rate {rate:.3}  mean best disp {mean_disp:.5}  best {best_disp:.5}"
            );
        }
    }
}
