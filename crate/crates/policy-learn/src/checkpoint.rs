//! Agent checkpoints: policy, value function and observation statistics
//! in one versioned JSON file.
//!
//! The normalizer travels with the networks because the policy was
//! trained on normalized observations; restoring one without the other
//! would silently change every action. Loading validates the version and
//! the declared architecture against the embedded parameter shapes, so a
//! stale or hand-edited file fails loudly instead of misbehaving.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::Mlp;
use crate::obs_norm::RunningNorm;
use crate::policy::{GaussianPolicy, ACTION_DIM};
use crate::{LearnError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Self-describing shape summary, cross-checked against the embedded
/// networks on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub obs_dim: usize,
    pub action_dim: usize,
    /// Policy mean network widths, input first.
    pub policy_sizes: Vec<usize>,
    /// Value network widths, input first.
    pub value_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub architecture: Architecture,
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub obs_norm: RunningNorm,
    /// PPO updates completed when this snapshot was taken.
    pub updates_completed: u64,
    /// Environment steps consumed when this snapshot was taken.
    pub env_steps: u64,
}

impl Checkpoint {
    /// Builds the architecture block from the nets themselves.
    pub fn describe(policy: &GaussianPolicy, value: &Mlp) -> Architecture {
        Architecture {
            obs_dim: policy.obs_dim(),
            action_dim: ACTION_DIM,
            policy_sizes: policy.mean_net.sizes().to_vec(),
            value_sizes: value.sizes().to_vec(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LearnError::BadCheckpoint(msg));
        if self.version != CHECKPOINT_VERSION {
            return bad(format!(
                "version {} (this build reads {CHECKPOINT_VERSION})",
                self.version
            ));
        }
        let arch = &self.architecture;
        if arch.action_dim != ACTION_DIM {
            return bad(format!("action_dim {} but the arm has {ACTION_DIM} joints", arch.action_dim));
        }
        if self.policy.mean_net.sizes() != arch.policy_sizes.as_slice() {
            return bad(format!(
                "policy sizes {:?} do not match descriptor {:?}",
                self.policy.mean_net.sizes(),
                arch.policy_sizes
            ));
        }
        if self.value.sizes() != arch.value_sizes.as_slice() {
            return bad(format!(
                "value sizes {:?} do not match descriptor {:?}",
                self.value.sizes(),
                arch.value_sizes
            ));
        }
        if self.policy.obs_dim() != arch.obs_dim
            || self.value.input_dim() != arch.obs_dim
            || self.obs_norm.dim() != arch.obs_dim
        {
            return bad(format!(
                "inconsistent observation width: descriptor {}, policy {}, value {}, normalizer {}",
                arch.obs_dim,
                self.policy.obs_dim(),
                self.value.input_dim(),
                self.obs_norm.dim()
            ));
        }
        if self.value.output_dim() != 1 {
            return bad(format!("value head is {}-wide, expected 1", self.value.output_dim()));
        }
        Ok(())
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    checkpoint.validate()?;
    let json = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| LearnError::BadCheckpoint(format!("serialize: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)?;
    let checkpoint: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| LearnError::BadCheckpoint(format!("{}: {e}", path.display())))?;
    checkpoint.validate()?;
    Ok(checkpoint)
}
