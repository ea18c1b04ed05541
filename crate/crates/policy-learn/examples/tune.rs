//! Scratch driver for hyperparameter probing. Not part of the build
//! contract; run with e.g.
//!   cargo run --release -p policy-learn --example tune -- 300 9600 0.0003 0.003 0 4

use std::time::Instant;

use policy_learn::{train, KindSchedule, PpoConfig, TrainerConfig};
use sim_core::WidgetKind;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let get = |i: usize, default: f64| -> f64 {
        args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
    };
    let total_updates = get(0, 50.0) as usize;
    let steps_per_update = get(1, 9600.0) as usize;
    let learning_rate = get(2, 3e-4);
    let entropy_coef = get(3, 3e-3);
    let master_seed = get(4, 0.0) as u64;
    let threads = get(5, 4.0) as usize;
    let phase2 = args.get(6).map(|s| s == "deceptive").unwrap_or(false);

    let cfg = TrainerConfig {
        ppo: PpoConfig {
            steps_per_update,
            learning_rate,
            entropy_coef,
            ..PpoConfig::default()
        },
        schedule: if phase2 {
            KindSchedule::Only(WidgetKind::Deceptive)
        } else {
            KindSchedule::Alternating
        },
        total_updates,
        master_seed,
        threads,
        deterministic: false,
        ..TrainerConfig::default()
    };

    println!(
        "updates={total_updates} steps={steps_per_update} lr={learning_rate} ent={entropy_coef} seed={master_seed} threads={threads} phase2={phase2}"
    );
    let start = Instant::now();
    let result = train(&cfg, None, |row, agent| {
        let sigma: f64 =
            agent.policy.log_std.iter().map(|l| l.exp()).sum::<f64>() / 7.0;
        println!(
            "u={:3} ret={:7.4} btn={:4.2} sld={:4.2} pl={:8.5} vl={:8.5} kl={:7.5} clip={:4.2} sig={:5.3} t={:5.1}s",
            row.update,
            row.mean_return,
            row.success_button,
            row.success_slider,
            row.policy_loss,
            row.value_loss,
            row.kl,
            row.clip_frac,
            sigma,
            start.elapsed().as_secs_f64(),
        );
    })
    .unwrap();
    for fault in &result.faults {
        println!("FAULT: {fault}");
    }
    println!("done in {:.1}s", start.elapsed().as_secs_f64());
}
