// SPDX-License-Identifier: Apache-2.0

//! Gaussian policy over the network outputs: sampling, log-probabilities,
//! entropy and the squash from raw samples to placer actions.

use std::f64::consts::PI;

use placerl_core::env::{Action, FeatureGrid};
use placerl_core::num::{sigmoid, softplus};
use serde::{Deserialize, Serialize};

use crate::network::{ActionSpace, Cache, Network, NetworkConfig, Output};
use crate::nn::{mismatch, Params, Real, ShapeError, Tensor};

pub const STD_FLOOR: f64 = 0.01;

/// Diagonal Gaussian; `std = softplus(raw) + floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> GaussianParams<T> {
    pub fn from_raw(mean: Vec<T>, raw_std: &[T], floor: f64) -> Self {
        let std = raw_std.iter().map(|&r| softplus(r) + T::of(floor)).collect();
        GaussianParams { mean, std }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    /// Per-dimension log densities.
    pub fn log_prob_terms(&self, u: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.dims(), "sample dimension");
        let half_ln_2pi = T::of(0.5 * (2.0 * PI).ln());
        self.mean
            .iter()
            .zip(&self.std)
            .zip(u)
            .map(|((&m, &s), &x)| {
                let z = (x - m) / s;
                -T::of(0.5) * z * z - s.ln() - half_ln_2pi
            })
            .collect()
    }

    pub fn log_prob(&self, u: &[T]) -> T {
        self.log_prob_terms(u).into_iter().fold(T::zero(), |a, b| a + b)
    }

    /// `(d log p / d mean, d log p / d std)`.
    pub fn log_prob_grad(&self, u: &[T]) -> (Vec<T>, Vec<T>) {
        let mut gm = Vec::with_capacity(self.dims());
        let mut gs = Vec::with_capacity(self.dims());
        for ((&m, &s), &x) in self.mean.iter().zip(&self.std).zip(u) {
            let d = x - m;
            gm.push(d / (s * s));
            gs.push(d * d / (s * s * s) - T::one() / s);
        }
        (gm, gs)
    }

    /// Sum over dimensions of `0.5 ln(2 pi e std^2)`.
    pub fn entropy(&self) -> T {
        let c = T::of(0.5 * (2.0 * PI * std::f64::consts::E).ln());
        self.std.iter().fold(T::zero(), |a, &s| a + c + s.ln())
    }

    /// `d H / d std`.
    pub fn entropy_grad(&self) -> Vec<T> {
        self.std.iter().map(|&s| T::one() / s).collect()
    }
}

/// Maps a gradient on `std` back onto the raw network output.
pub fn std_raw_grad<T: Real>(raw_std: &[T], d_std: &[T]) -> Vec<T> {
    raw_std.iter().zip(d_std).map(|(&r, &g)| g * sigmoid(r)).collect()
}

/// Ranges the raw Gaussian samples are squashed into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Squash {
    pub cof_scale: f64,
    pub cof_min: f64,
    pub cof_max: f64,
    pub weight_min: f64,
    pub weight_max: f64,
}

impl Default for Squash {
    fn default() -> Self {
        Squash {
            cof_scale: 0.1,
            cof_min: 0.9,
            cof_max: 1.1,
            weight_min: 0.25,
            weight_max: 4.0,
        }
    }
}

impl Squash {
    pub fn cof(&self, u: f64) -> f64 {
        (1.0 + self.cof_scale * u.tanh()).clamp(self.cof_min, self.cof_max)
    }

    pub fn weight(&self, u: f64) -> f64 {
        u.clamp(self.weight_min.ln(), self.weight_max.ln()).exp()
    }

    pub fn action(&self, space: ActionSpace, u: &[f64]) -> Action {
        match space {
            ActionSpace::DensityWeight => Action::Cof(self.cof(u[0])),
            ActionSpace::Spatial => Action::Spatial(u.iter().map(|&v| self.weight(v)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    /// Pre-squash draw `mean + std * noise`.
    pub u: Vec<T>,
    pub log_prob: T,
}

/// Draws `mean + std * noise`; the log-probability is taken before squashing.
pub fn sample_action<T: Real>(g: &GaussianParams<T>, noise: &[f64]) -> Result<Sample<T>, ShapeError> {
    if noise.len() != g.dims() {
        return Err(mismatch("noise field", &[g.dims()], &[noise.len()]));
    }
    let u: Vec<T> = g.mean.iter().zip(&g.std).zip(noise).map(|((&m, &s), &n)| m + s * T::of(n)).collect();
    let log_prob = g.log_prob(&u);
    Ok(Sample { u, log_prob })
}

/// Converts a feature grid into a network input.
pub fn state_tensor<T: Real>(state: &FeatureGrid) -> Tensor<T> {
    Tensor {
        shape: vec![state.channels, state.height, state.width],
        data: state.data.iter().map(|&v| T::of(v)).collect(),
    }
}

/// Network plus the action-distribution conventions.
#[derive(Debug, Clone)]
pub struct Agent {
    pub network: Network,
    pub squash: Squash,
    pub std_floor: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyValue<T> {
    pub policy: GaussianParams<T>,
    pub value: T,
    pub output: Output<T>,
    pub cache: Cache<T>,
}

impl Agent {
    pub fn new(cfg: NetworkConfig) -> Self {
        Agent {
            network: Network::new(cfg),
            squash: Squash::default(),
            std_floor: STD_FLOOR,
        }
    }

    pub fn space(&self) -> ActionSpace {
        self.network.cfg.action_space
    }

    pub fn init<T: Real>(&self) -> Params<T> {
        self.network.init()
    }

    pub fn policy_value_forward<T: Real>(&self, params: &Params<T>, state: &Tensor<T>) -> Result<PolicyValue<T>, ShapeError> {
        let (output, cache) = self.network.forward(params, state)?;
        let policy = GaussianParams::from_raw(output.mean.clone(), &output.raw_std, self.std_floor);
        Ok(PolicyValue {
            value: output.value,
            policy,
            output,
            cache,
        })
    }

    /// Placer action for a pre-squash sample.
    pub fn action(&self, u: &[f64]) -> Action {
        self.squash.action(self.space(), u)
    }
}
