// SPDX-License-Identifier: Apache-2.0

//! Per-channel normalisation statistics gathered from a baseline run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::FeatureGrid;
use crate::num::percentile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub p10: f64,
    pub p90: f64,
    /// Mean and variance of the values after clipping to `[p10, p90]`.
    pub mean: f64,
    pub var: f64,
}

impl ChannelStats {
    pub fn from_values(values: &mut [f64]) -> Self {
        values.sort_by(f64::total_cmp);
        let p10 = percentile_sorted(values, 0.1);
        let p90 = percentile_sorted(values, 0.9);
        let n = values.len().max(1) as f64;
        let clipped = values.iter().map(|v| v.clamp(p10, p90));
        let mean = clipped.clone().sum::<f64>() / n;
        let var = clipped.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        ChannelStats { p10, p90, mean, var }
    }

    /// Clip, center, scale. Zero variance maps everything to 0.
    pub fn apply(&self, v: f64) -> f64 {
        if self.var > 0.0 {
            (v.clamp(self.p10, self.p90) - self.mean) / self.var.sqrt()
        } else {
            0.0
        }
    }
}

/// Baseline reference for one design, persisted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub design: String,
    pub channel_names: Vec<String>,
    pub channels: Vec<ChannelStats>,
    /// Final HPWL of the baseline run.
    pub baseline_hpwl: f64,
    /// Largest HPWL seen during the baseline run.
    pub baseline_max_hpwl: f64,
    pub baseline_iterations: usize,
}

impl FeatureStats {
    /// Pools every pixel of every snapshot per channel.
    pub fn from_snapshots(design: &str, names: Vec<String>, snapshots: &[FeatureGrid], baseline_hpwl: f64, baseline_max_hpwl: f64, baseline_iterations: usize) -> Self {
        let c = names.len();
        let channels = (0..c)
            .map(|k| {
                let mut values: Vec<f64> = snapshots.iter().flat_map(|g| g.plane(k).iter().copied()).collect();
                ChannelStats::from_values(&mut values)
            })
            .collect();
        FeatureStats {
            design: design.to_string(),
            channel_names: names,
            channels,
            baseline_hpwl,
            baseline_max_hpwl,
            baseline_iterations,
        }
    }

    pub fn normalize(&self, raw: &FeatureGrid) -> FeatureGrid {
        assert_eq!(raw.channels, self.channels.len(), "channel count");
        let mut out = raw.clone();
        for (k, s) in self.channels.iter().enumerate() {
            out.plane_mut(k).iter_mut().for_each(|v| *v = s.apply(*v));
        }
        out
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
