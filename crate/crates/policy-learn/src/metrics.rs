//! Per-update training metrics and their CSV form.
//!
//! The column set is part of the tooling contract: downstream plot
//! generation reads these files back, so the header is fixed and the
//! parser rejects anything that drifts from it.

use crate::{LearnError, Result};

/// CSV header emitted by [`metrics_to_csv`] and required by
/// [`parse_metrics_csv`].
pub const METRICS_HEADER: &str =
    "update,env_steps,mean_return,success_button,success_slider,policy_loss,value_loss,kl,clip_frac";

/// One row of training telemetry, recorded after each PPO update.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    /// Update index, starting at 1 for the first completed update.
    pub update: u64,
    /// Cumulative environment steps consumed so far.
    pub env_steps: u64,
    /// Mean undiscounted return over episodes finished in this batch.
    pub mean_return: f64,
    /// Evaluation success rate on button widgets.
    pub success_button: f64,
    /// Evaluation success rate on slider widgets.
    pub success_slider: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Mean KL divergence estimate between the old and new policy.
    pub kl: f64,
    /// Fraction of samples whose probability ratio was clipped.
    pub clip_frac: f64,
}

/// Renders rows as CSV text, header included.
pub fn metrics_to_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.update,
            r.env_steps,
            r.mean_return,
            r.success_button,
            r.success_slider,
            r.policy_loss,
            r.value_loss,
            r.kl,
            r.clip_frac
        ));
    }
    out
}

/// Parses CSV text produced by [`metrics_to_csv`], validating the header
/// and the field count of every row.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == METRICS_HEADER => {}
        other => {
            return Err(LearnError::BadConfig(format!(
                "metrics header mismatch: got {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(LearnError::BadConfig(format!(
                "metrics row {} has {} fields, expected 9",
                i + 2,
                fields.len()
            )));
        }
        let int = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|e| LearnError::BadConfig(format!("row {}: {e}", i + 2)))
        };
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| LearnError::BadConfig(format!("row {}: {e}", i + 2)))
        };
        rows.push(MetricRow {
            update: int(fields[0])?,
            env_steps: int(fields[1])?,
            mean_return: num(fields[2])?,
            success_button: num(fields[3])?,
            success_slider: num(fields[4])?,
            policy_loss: num(fields[5])?,
            value_loss: num(fields[6])?,
            kl: num(fields[7])?,
            clip_frac: num(fields[8])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<MetricRow> {
        vec![
            MetricRow {
                update: 1,
                env_steps: 9600,
                mean_return: 0.125,
                success_button: 0.0,
                success_slider: 0.05,
                policy_loss: -0.013,
                value_loss: 0.42,
                kl: 0.009,
                clip_frac: 0.11,
            },
            MetricRow {
                update: 2,
                env_steps: 19200,
                mean_return: 0.5,
                success_button: 0.3,
                success_slider: 0.25,
                policy_loss: -0.008,
                value_loss: 0.31,
                kl: 0.012,
                clip_frac: 0.09,
            },
        ]
    }

    #[test]
    fn csv_roundtrip_preserves_rows_exactly() {
        let rows = sample_rows();
        let text = metrics_to_csv(&rows);
        assert!(text.starts_with(METRICS_HEADER));
        let parsed = parse_metrics_csv(&text).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn header_drift_is_rejected() {
        let mut text = metrics_to_csv(&sample_rows());
        text = text.replace("clip_frac", "clipfrac");
        assert!(parse_metrics_csv(&text).is_err());
    }

    #[test]
    fn short_rows_are_rejected() {
        let text = format!("{METRICS_HEADER}\n1,2,3\n");
        assert!(parse_metrics_csv(&text).is_err());
    }
}
