// SPDX-License-Identifier: Apache-2.0

//! Raw state features on an `h` x `w` grid over the placement region.
//!
//! Channel order: log HPWL, signed-log HPWL change, log lambda, overflow,
//! cof (all spatially constant), cell density, wire density, then one local
//! HPWL map per configured partition level.

use serde::{Deserialize, Serialize};

use crate::netlist::{hpwl, net_bbox, net_hpwl, Netlist, Placement};
use crate::num::{signed_log1p, Scalar};
use crate::placer::density::cell_area;
use crate::placer::PlacerState;

pub const SCALAR_CHANNELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub height: usize,
    pub width: usize,
    /// Partition counts per side for the local HPWL channels.
    pub local_levels: Vec<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            height: 32,
            width: 32,
            local_levels: vec![2, 4, 8, 16],
        }
    }
}

impl FeatureConfig {
    pub fn channels(&self) -> usize {
        SCALAR_CHANNELS + 2 + self.local_levels.len()
    }

    pub fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["log_hpwl", "dlog_hpwl", "log_lambda", "overflow", "cof", "cell_density", "wire_density"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        names.extend(self.local_levels.iter().map(|l| format!("local_hpwl_{l}x{l}")));
        names
    }
}

/// Channel-major feature grid: `data[(c * height + j) * width + i]`, row
/// `j` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureGrid {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FeatureGrid {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn safe_ln(v: f64) -> f64 {
    v.max(f64::MIN_POSITIVE).ln()
}

/// Per-bin sum over nets of `|bbox ∩ bin| / |bbox|`. Zero-extent sides are
/// widened to one bin pitch around the bbox center so every net counts.
pub fn wire_density<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>, h: usize, w: usize) -> Vec<f64> {
    let r = &netlist.region;
    let (x0, y0) = (r.x_lo.as_f64(), r.y_lo.as_f64());
    let px = r.width.as_f64() / w as f64;
    let py = r.height.as_f64() / h as f64;
    let mut out = vec![0.0; h * w];
    let widen = |lo: f64, hi: f64, pitch: f64| {
        if hi - lo > 0.0 {
            (lo, hi)
        } else {
            let c = 0.5 * (lo + hi);
            (c - 0.5 * pitch, c + 0.5 * pitch)
        }
    };
    let range = |lo: f64, hi: f64, origin: f64, pitch: f64, n: usize| {
        let a = ((lo - origin) / pitch).floor().max(0.0) as usize;
        let b = (((hi - origin) / pitch).ceil().max(0.0) as usize).min(n);
        a.min(n)..b
    };
    for net in 0..netlist.nets.len() {
        let Some((bx0, by0, bx1, by1)) = net_bbox(netlist, net, placement) else {
            continue;
        };
        let (bx0, bx1) = widen(bx0.as_f64(), bx1.as_f64(), px);
        let (by0, by1) = widen(by0.as_f64(), by1.as_f64(), py);
        let inv = 1.0 / ((bx1 - bx0) * (by1 - by0));
        for j in range(by0, by1, y0, py, h) {
            let lo = y0 + j as f64 * py;
            let oy = (by1.min(lo + py) - by0.max(lo)).max(0.0);
            for i in range(bx0, bx1, x0, px, w) {
                let lo = x0 + i as f64 * px;
                let ox = (bx1.min(lo + px) - bx0.max(lo)).max(0.0);
                out[j * w + i] += ox * oy * inv;
            }
        }
    }
    out
}

/// HPWL summed per cell of an `l` x `l` partition, each net attributed to
/// the cell holding its bbox center. Row-major `[j * l + i]`.
pub fn local_hpwl<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>, l: usize) -> Vec<f64> {
    let r = &netlist.region;
    let mut out = vec![0.0; l * l];
    let cell = |v: f64, origin: f64, extent: f64| -> usize {
        let f = ((v - origin) / extent * l as f64).floor();
        if f > 0.0 {
            (f as usize).min(l - 1)
        } else {
            0
        }
    };
    for net in 0..netlist.nets.len() {
        let Some((x0, y0, x1, y1)) = net_bbox(netlist, net, placement) else {
            continue;
        };
        let cx = 0.5 * (x0 + x1).as_f64();
        let cy = 0.5 * (y0 + y1).as_f64();
        let i = cell(cx, r.x_lo.as_f64(), r.width.as_f64());
        let j = cell(cy, r.y_lo.as_f64(), r.height.as_f64());
        out[j * l + i] += net_hpwl(netlist, net, placement).as_f64();
    }
    out
}

/// Nearest-cell upsampling of an `l` x `l` grid to `h` x `w`.
fn blow_up(src: &[f64], l: usize, h: usize, w: usize, out: &mut [f64]) {
    for j in 0..h {
        let sj = j * l / h;
        for i in 0..w {
            out[j * w + i] = src[sj * l + i * l / w];
        }
    }
}

/// Raw (unnormalised) features for the current placement.
pub fn extract_features<T: Scalar>(
    state: &PlacerState<T>,
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    cfg: &FeatureConfig,
) -> FeatureGrid {
    let (h, w) = (cfg.height, cfg.width);
    let mut g = FeatureGrid::zeros(cfg.channels(), h, w);
    let total = hpwl(netlist, placement).as_f64();
    let scalars = [
        safe_ln(total),
        signed_log1p(state.delta_hpwl().as_f64()),
        safe_ln(state.lambda.as_f64()),
        state.overflow.as_f64(),
        state.cof.as_f64(),
    ];
    for (c, v) in scalars.into_iter().enumerate() {
        g.plane_mut(c).fill(v);
    }

    let r = &netlist.region;
    let bin_area = (r.width.as_f64() / w as f64) * (r.height.as_f64() / h as f64);
    let areas = cell_area(netlist, placement, r, w, h);
    for (dst, a) in g.plane_mut(SCALAR_CHANNELS).iter_mut().zip(&areas) {
        *dst = a.as_f64() / bin_area;
    }
    g.plane_mut(SCALAR_CHANNELS + 1)
        .copy_from_slice(&wire_density(netlist, placement, h, w));
    for (k, &l) in cfg.local_levels.iter().enumerate() {
        let local = local_hpwl(netlist, placement, l);
        blow_up(&local, l, h, w, g.plane_mut(SCALAR_CHANNELS + 2 + k));
    }
    g
}
