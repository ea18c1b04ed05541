//! Trajectory serialization: one JSON object per line.
//!
//! A trajectory file is a header line, one line per step, and a footer
//! line, each tagged with a `kind` field so readers never have to guess:
//!
//! ```text
//! {"kind":"header","schema_version":1,"seed":42,...}
//! {"kind":"step","t":0,"observation":{...},...}
//! {"kind":"footer","discounted_return":0.87,...}
//! ```
//!
//! The flat-text format is append-friendly during collection and easy to
//! inspect with standard line tools.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sim_core::{WidgetSpec, NUM_JOINTS};

use crate::{EnvError, Observation, Result, RewardBreakdown};

/// Bump when a record's meaning or layout changes.
pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub schema_version: u32,
    /// Seed passed to the environment reset that produced this episode.
    pub seed: u64,
    /// The widget sampled for the episode, in full.
    pub widget: WidgetSpec,
    pub horizon: usize,
    pub discount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step index, starting at 0.
    pub t: usize,
    /// Observation the action was chosen from.
    pub observation: Observation,
    pub action: [f64; NUM_JOINTS],
    pub reward: RewardBreakdown,
    /// Log-probability of the action under the behavior policy.
    pub log_prob: f64,
    /// Value estimate at `observation`.
    pub value: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFooter {
    /// Discounted return of the recorded rewards.
    pub discounted_return: f64,
    /// Number of steps taken.
    pub length: usize,
    /// Whether the widget was triggered.
    pub triggered: bool,
    /// Widget displacement at episode end (m).
    pub final_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(TrajectoryHeader),
    Step(StepRecord),
    Footer(TrajectoryFooter),
}

/// One complete recorded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub steps: Vec<StepRecord>,
    pub footer: TrajectoryFooter,
}

pub fn write_trajectory(mut w: impl Write, trajectory: &Trajectory) -> Result<()> {
    let emit = |w: &mut dyn Write, line: &Line| -> Result<()> {
        let json = serde_json::to_string(line)
            .map_err(|e| EnvError::BadConfig(format!("trajectory serialization failed: {e}")))?;
        writeln!(w, "{json}").map_err(|e| EnvError::BadConfig(format!("trajectory write failed: {e}")))
    };
    emit(&mut w, &Line::Header(trajectory.header.clone()))?;
    for step in &trajectory.steps {
        emit(&mut w, &Line::Step(step.clone()))?;
    }
    emit(&mut w, &Line::Footer(trajectory.footer.clone()))
}

/// Parse one trajectory from a reader positioned at its header line.
/// Rejects files with missing/misordered sections or trailing garbage.
pub fn read_trajectory(r: impl BufRead) -> Result<Trajectory> {
    let bad = |msg: &str| EnvError::BadConfig(format!("trajectory parse: {msg}"));
    let mut header = None;
    let mut steps = Vec::new();
    let mut footer = None;
    for line in r.lines() {
        let line = line.map_err(|e| bad(&format!("read failed: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| bad(&format!("malformed line: {e}")))?;
        match parsed {
            Line::Header(h) => {
                if header.is_some() {
                    return Err(bad("second header"));
                }
                if h.schema_version != TRAJECTORY_SCHEMA_VERSION {
                    return Err(bad(&format!("unsupported schema version {}", h.schema_version)));
                }
                header = Some(h);
            }
            Line::Step(s) => {
                if header.is_none() || footer.is_some() {
                    return Err(bad("step outside header/footer envelope"));
                }
                if s.t != steps.len() {
                    return Err(bad(&format!("step index {} out of order", s.t)));
                }
                steps.push(s);
            }
            Line::Footer(f) => {
                if header.is_none() || footer.is_some() {
                    return Err(bad("footer without header or duplicated"));
                }
                footer = Some(f);
            }
        }
    }
    match (header, footer) {
        (Some(header), Some(footer)) => Ok(Trajectory { header, steps, footer }),
        _ => Err(bad("missing header or footer")),
    }
}

/// Discounted return of a reward sequence: the first reward is weighted
/// by `discount^0`, the next by `discount^1`, and so on.
pub fn episode_return(rewards: &[f64], discount: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += weight * r;
        weight *= discount;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use sim_core::widget::DEFAULT_SPRING_K;
    use sim_core::{ArmState, WidgetState};

    #[test]
    fn single_reward_is_returned_undiscounted() {
        assert_eq!(episode_return(&[1.0], 0.99), 1.0);
    }

    #[test]
    fn second_step_gets_one_discount_factor() {
        assert_eq!(episode_return(&[0.0, 1.0], 0.99), 0.99);
    }

    #[test]
    fn empty_sequence_returns_zero() {
        assert_eq!(episode_return(&[], 0.99), 0.0);
    }

    fn tiny_trajectory() -> Trajectory {
        let spec = WidgetSpec::button(0.04, [0.3, 0.0, 0.0], DEFAULT_SPRING_K);
        let obs = Observation::assemble(
            &ArmState::at_rest([0.0; NUM_JOINTS]),
            &spec,
            &WidgetState::default(),
        );
        let reward = RewardBreakdown {
            distance_penalty: -0.003,
            movement_penalty: -0.001,
            completion: 0.0,
            total: -0.004,
        };
        Trajectory {
            header: TrajectoryHeader {
                schema_version: TRAJECTORY_SCHEMA_VERSION,
                seed: 9,
                widget: spec,
                horizon: 150,
                discount: 0.99,
            },
            steps: vec![
                StepRecord {
                    t: 0,
                    observation: obs.clone(),
                    action: [1.0, -2.0, 3.0, 0.0, 0.0, 0.0, 0.5],
                    reward,
                    log_prob: -7.25,
                    value: 0.1,
                    done: false,
                },
                StepRecord {
                    t: 1,
                    observation: obs,
                    action: [0.0; NUM_JOINTS],
                    reward,
                    log_prob: -6.5,
                    value: 0.12,
                    done: true,
                },
            ],
            footer: TrajectoryFooter {
                discounted_return: -0.004 - 0.99 * 0.004,
                length: 2,
                triggered: false,
                final_displacement: 0.0,
            },
        }
    }

    #[test]
    fn jsonl_roundtrip_preserves_everything() {
        let trajectory = tiny_trajectory();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &trajectory).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().next().unwrap().contains("\"kind\":\"header\""));

        let back = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back, trajectory);
    }

    #[test]
    fn misordered_or_truncated_files_are_rejected() {
        let trajectory = tiny_trajectory();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &trajectory).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&buf).unwrap().lines().collect();

        // Missing footer.
        let truncated = lines[..lines.len() - 1].join("\n");
        assert!(read_trajectory(truncated.as_bytes()).is_err());
        // Step before header.
        let swapped = [lines[1], lines[0], lines[2], lines[3]].join("\n");
        assert!(read_trajectory(swapped.as_bytes()).is_err());
        // Wrong schema version.
        let bumped = lines[0].replace("\"schema_version\":1", "\"schema_version\":2");
        let reversioned = [bumped.as_str(), lines[1], lines[2], lines[3]].join("\n");
        assert!(read_trajectory(reversioned.as_bytes()).is_err());
    }
}
