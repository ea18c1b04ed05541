//! Running observation standardization.
//!
//! Raw observations mix radians, rad/s and metres across very different
//! scales; networks train poorly on that. This keeps Welford running
//! moments and maps observations to roughly unit scale. The trainer
//! updates the statistics only between rollout batches, so every sample
//! inside one batch is normalized consistently, and evaluation uses the
//! frozen statistics as-is.

use serde::{Deserialize, Serialize};

const CLIP: f64 = 10.0;
const VAR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    mean: Vec<f64>,
    /// Sum of squared deviations from the running mean (Welford's M2).
    m2: Vec<f64>,
    count: f64,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], m2: vec![0.0; dim], count: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn update(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len());
        self.count += 1.0;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            1.0
        } else {
            (self.m2[i] / self.count).max(VAR_FLOOR)
        }
    }

    /// Standardize and clip. Before any updates this is the identity
    /// (zero mean, unit variance), so an untrained normalizer is safe.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mean.len());
        x.iter()
            .enumerate()
            .map(|(i, v)| ((v - self.mean[i]) / self.variance(i).sqrt()).clamp(-CLIP, CLIP))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_before_any_update() {
        let norm = RunningNorm::new(3);
        assert_eq!(norm.normalize(&[1.0, -2.0, 0.5]), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn matches_direct_moment_computation() {
        let data = [
            [1.0, 10.0],
            [2.0, 20.0],
            [3.0, 15.0],
            [4.0, -5.0],
            [5.0, 0.0],
        ];
        let mut norm = RunningNorm::new(2);
        for row in &data {
            norm.update(row);
        }
        for dim in 0..2 {
            let n = data.len() as f64;
            let mean: f64 = data.iter().map(|r| r[dim]).sum::<f64>() / n;
            let var: f64 = data.iter().map(|r| (r[dim] - mean).powi(2)).sum::<f64>() / n;
            let z = norm.normalize(&[data[0][0], data[0][1]])[dim];
            let expect = (data[0][dim] - mean) / var.sqrt();
            assert!((z - expect).abs() < 1e-12, "dim {dim}: {z} vs {expect}");
        }
    }

    #[test]
    fn extreme_values_are_clipped() {
        let mut norm = RunningNorm::new(1);
        for v in [0.0, 1.0, 2.0] {
            norm.update(&[v]);
        }
        assert_eq!(norm.normalize(&[1.0e9])[0], 10.0);
        assert_eq!(norm.normalize(&[-1.0e9])[0], -10.0);
    }
}
