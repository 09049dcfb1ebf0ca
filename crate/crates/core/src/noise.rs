// SPDX-License-Identifier: Apache-2.0

//! Correlated exploration noise: independent Ornstein-Uhlenbeck processes on
//! a coarse grid, bilinearly upsampled to the action grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub theta: f64,
    pub sigma: f64,
    pub mu: f64,
    pub dt: f64,
}

impl Default for OuParams {
    fn default() -> Self {
        OuParams {
            theta: 0.15,
            sigma: 0.3,
            mu: 0.0,
            dt: 1.0,
        }
    }
}

impl OuParams {
    pub fn is_valid(&self) -> bool {
        self.theta > 0.0 && self.sigma >= 0.0 && self.dt > 0.0 && self.theta * self.dt < 2.0
    }

    /// Variance of the discrete-time chain at stationarity:
    /// `sigma^2 dt / (2 theta dt - (theta dt)^2)`.
    pub fn stationary_variance(&self) -> f64 {
        let a = self.theta * self.dt;
        self.sigma * self.sigma * self.dt / (2.0 * a - a * a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuProcess {
    pub params: OuParams,
    pub state: f64,
}

impl OuProcess {
    pub fn new(params: OuParams, state: f64) -> Self {
        OuProcess { params, state }
    }

    /// `x <- x + theta (mu - x) dt + sigma sqrt(dt) z`.
    pub fn step(&mut self, z: f64) -> f64 {
        let p = &self.params;
        self.state += p.theta * (p.mu - self.state) * p.dt + p.sigma * p.dt.sqrt() * z;
        self.state
    }
}

/// Bilinear upsampling with corners aligned: source pixel centers at the
/// grid ends map onto destination ends. Grids are row-major `[j * w + i]`.
pub fn upsample_bilinear(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    assert_eq!(src.len(), sw * sh, "source grid size");
    let coord = |d: usize, dn: usize, sn: usize| -> (usize, usize, f64) {
        if sn == 1 || dn == 1 {
            return (0, 0, 0.0);
        }
        let s = d as f64 * (sn - 1) as f64 / (dn - 1) as f64;
        let i0 = (s.floor() as usize).min(sn - 2);
        (i0, i0 + 1, s - i0 as f64)
    };
    let mut out = Vec::with_capacity(dw * dh);
    for j in 0..dh {
        let (j0, j1, fy) = coord(j, dh, sh);
        for i in 0..dw {
            let (i0, i1, fx) = coord(i, dw, sw);
            let top = src[j0 * sw + i0] * (1.0 - fx) + src[j0 * sw + i1] * fx;
            let bot = src[j1 * sw + i0] * (1.0 - fx) + src[j1 * sw + i1] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

/// One episode's noise source: a per-pixel OU grid at `base` resolution.
#[derive(Debug, Clone)]
pub struct NoiseFieldPlan {
    pub base: (usize, usize),
    pub action: (usize, usize),
    processes: Vec<OuProcess>,
    rng: ChaCha8Rng,
}

impl NoiseFieldPlan {
    /// Fixed base resolution. States start from the stationary
    /// distribution so the first field already has the long-run spread.
    pub fn with_base(params: OuParams, base: (usize, usize), action: (usize, usize), seed: u64) -> Self {
        assert!(base.0 >= 1 && base.1 >= 1 && base.0 <= action.0 && base.1 <= action.1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = params.stationary_variance().sqrt();
        let processes = (0..base.0 * base.1)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                OuProcess::new(params, params.mu + sd * z)
            })
            .collect();
        NoiseFieldPlan {
            base,
            action,
            processes,
            rng,
        }
    }

    /// Square action grid of side `a`; the base side is drawn uniformly
    /// from the powers of two up to `a`.
    pub fn sample(params: OuParams, a: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6973_65);
        let sides: Vec<usize> = (0..usize::BITS).map(|k| 1usize << k).take_while(|&s| s <= a).collect();
        let side = sides[rng.random_range(0..sides.len())];
        Self::with_base(params, (side, side), (a, a), seed)
    }

    /// Steps every base process once and returns the upsampled field.
    pub fn next_field(&mut self) -> Vec<f64> {
        let base: Vec<f64> = self
            .processes
            .iter_mut()
            .map(|p| {
                let z: f64 = self.rng.sample(StandardNormal);
                p.step(z)
            })
            .collect();
        upsample_bilinear(&base, self.base.0, self.base.1, self.action.0, self.action.1)
    }
}
