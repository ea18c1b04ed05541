//! Generalized advantage estimation.

use crate::{LearnError, Result};

/// Backward-recursive GAE over one flattened rollout.
///
/// `dones[t]` marks that the episode ended at step `t`; bootstrapping
/// and advantage propagation both stop there. `bootstrap_value` is the
/// value estimate of the state after the final step, used only when the
/// rollout was truncated mid-episode.
///
/// Returns `(advantages, return_targets)` with
/// `return_targets = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    discount: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if rewards.len() != values.len() || rewards.len() != dones.len() {
        return Err(LearnError::LengthMismatch(format!(
            "rewards {}, values {}, dones {}",
            rewards.len(),
            values.len(),
            dones.len()
        )));
    }
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_advantage = 0.0;
    for t in (0..n).rev() {
        let carry = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap_value };
        let delta = rewards[t] + discount * next_value * carry - values[t];
        next_advantage = delta + discount * lambda * carry * next_advantage;
        advantages[t] = next_advantage;
    }
    let returns = advantages.iter().zip(values.iter()).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}
