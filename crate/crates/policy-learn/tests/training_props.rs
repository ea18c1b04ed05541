//! End-to-end training properties on the real environment: determinism
//! across runs and thread counts, checkpoint fidelity through disk, and
//! resuming a trained policy on a different widget schedule.

use env_mdp::{EnvConfig, WidgetEnv};
use policy_learn::{
    load_checkpoint, metrics_to_csv, save_checkpoint, train, Agent, KindSchedule, PpoConfig,
    TrainerConfig,
};
use sim_core::WidgetKind;

/// Small but real: full-width networks, a few hundred steps per update.
fn short_config() -> TrainerConfig {
    TrainerConfig {
        ppo: PpoConfig {
            steps_per_update: 400,
            minibatch_size: 128,
            epochs_per_update: 3,
            ..PpoConfig::default()
        },
        n_envs: 4,
        eval_episodes: 2,
        total_updates: 3,
        master_seed: 424_242,
        ..TrainerConfig::default()
    }
}

#[test]
fn identical_seeds_reproduce_the_metrics_csv_bitwise() {
    let cfg = short_config();
    let a = train(&cfg, None, |_, _| {}).unwrap();
    let b = train(&cfg, None, |_, _| {}).unwrap();
    assert_eq!(metrics_to_csv(&a.metrics), metrics_to_csv(&b.metrics));
    assert_eq!(a.checkpoint, b.checkpoint);
    assert!(a.faults.is_empty());
}

#[test]
fn thread_fan_out_matches_sequential_collection_bitwise() {
    let sequential = TrainerConfig { deterministic: true, threads: 1, ..short_config() };
    let threaded = TrainerConfig { deterministic: false, threads: 4, ..short_config() };
    let a = train(&sequential, None, |_, _| {}).unwrap();
    let b = train(&threaded, None, |_, _| {}).unwrap();
    assert_eq!(a.checkpoint, b.checkpoint);
    assert_eq!(metrics_to_csv(&a.metrics), metrics_to_csv(&b.metrics));
}

#[test]
fn checkpoint_survives_disk_and_reproduces_eval_actions() {
    let cfg = TrainerConfig { total_updates: 2, ..short_config() };
    let result = train(&cfg, None, |_, _| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trained.json");
    save_checkpoint(&path, &result.checkpoint).unwrap();
    let restored = load_checkpoint(&path).unwrap();
    assert_eq!(restored, result.checkpoint);

    // Fixed observation set: one scripted rollout under a fresh env.
    let mut env = WidgetEnv::new(EnvConfig::default()).unwrap();
    let mut obs_set = vec![env.reset(5).flatten().to_vec()];
    for step in 0..20 {
        let mut action = [0.0; 7];
        action[step % 7] = if step % 2 == 0 { 40.0 } else { -25.0 };
        let outcome = env.step(&action).unwrap();
        obs_set.push(outcome.observation.flatten().to_vec());
        if outcome.done {
            break;
        }
    }

    let trained = Agent::from_checkpoint(result.checkpoint);
    let reloaded = Agent::from_checkpoint(restored);
    let max_force = cfg.env.arm.max_force;
    for obs in &obs_set {
        let a = trained.eval_action(obs, max_force).unwrap();
        let b = reloaded.eval_action(obs, max_force).unwrap();
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }
}

#[test]
fn training_resumes_from_disk_onto_a_new_widget_schedule() {
    let phase1 = TrainerConfig { total_updates: 2, ..short_config() };
    let result = train(&phase1, None, |_, _| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phase1.json");
    save_checkpoint(&path, &result.checkpoint).unwrap();

    let phase2 = TrainerConfig {
        schedule: KindSchedule::Only(WidgetKind::Deceptive),
        total_updates: 1,
        master_seed: 777,
        ..short_config()
    };
    let start = load_checkpoint(&path).unwrap();
    let adapted = train(&phase2, Some(start.clone()), |_, _| {}).unwrap();

    // Counters restart per run; the policy itself must have moved on
    // from the restored weights rather than reinitializing.
    assert_eq!(adapted.checkpoint.updates_completed, 1);
    assert_eq!(adapted.evals[0][0].kind, WidgetKind::Deceptive);
    assert!(adapted.metrics[0].success_button.is_nan());
    let fresh = train(
        &TrainerConfig { total_updates: 0, ..phase2.clone() },
        None,
        |_, _| {},
    )
    .unwrap();
    assert_ne!(adapted.checkpoint.policy, fresh.checkpoint.policy);
    assert_eq!(start.obs_norm.count() + 400.0, adapted.checkpoint.obs_norm.count());
}
