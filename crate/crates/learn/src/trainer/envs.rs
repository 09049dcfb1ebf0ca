// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use placerl_core::env::{Design, EnvConfig, FeatureGrid, FeatureStats, PlacementEnv};
use placerl_core::netlist::Placement;

use crate::agent::Squash;
use crate::network::ActionSpace;

use super::TrainError;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: FeatureGrid,
    pub reward: f64,
    pub done: bool,
    pub diverged: bool,
}

/// An episodic task driven by pre-squash actions.
pub trait Environment: Send {
    fn name(&self) -> &str;
    fn reset(&mut self) -> Result<FeatureGrid, TrainError>;
    fn step(&mut self, u: &[f64]) -> Result<Transition, TrainError>;
    /// Placement reached at the end of the last episode, if any.
    fn solution(&self) -> Option<Placement<f64>> {
        None
    }
}

/// Placer-backed environment; squashes raw samples into placer actions.
pub struct PlacementTask {
    env: PlacementEnv<f64>,
    space: ActionSpace,
    squash: Squash,
}

impl PlacementTask {
    pub fn new(design: Design<f64>, cfg: EnvConfig<f64>, stats: Arc<FeatureStats>, space: ActionSpace, squash: Squash) -> Self {
        PlacementTask {
            env: PlacementEnv::new(design, cfg, Some(stats)),
            space,
            squash,
        }
    }

    pub fn env(&self) -> &PlacementEnv<f64> {
        &self.env
    }
}

impl Environment for PlacementTask {
    fn name(&self) -> &str {
        &self.env.design().name
    }

    fn reset(&mut self) -> Result<FeatureGrid, TrainError> {
        self.env.reset().map_err(|e| TrainError::Env(e.to_string()))
    }

    fn step(&mut self, u: &[f64]) -> Result<Transition, TrainError> {
        let action = self.squash.action(self.space, u);
        let s = self.env.step(&action).map_err(|e| TrainError::Env(e.to_string()))?;
        Ok(Transition {
            state: s.state,
            reward: s.reward,
            done: s.done,
            diverged: self.env.result().is_some_and(|r| r.diverged),
        })
    }

    fn solution(&self) -> Option<Placement<f64>> {
        self.env.result()?;
        self.env.placer().map(|p| p.placement())
    }
}

/// One-step bandit with a constant state and reward `-mean((u - c)^2)`.
#[derive(Debug, Clone)]
pub struct QuadraticBandit {
    pub target: f64,
    pub dims: usize,
    state: FeatureGrid,
}

impl QuadraticBandit {
    pub fn new(target: f64, dims: usize, channels: usize, height: usize, width: usize) -> Self {
        let mut state = FeatureGrid::zeros(channels, height, width);
        state.data.fill(0.5);
        QuadraticBandit { target, dims, state }
    }
}

impl Environment for QuadraticBandit {
    fn name(&self) -> &str {
        "quadratic-bandit"
    }

    fn reset(&mut self) -> Result<FeatureGrid, TrainError> {
        Ok(self.state.clone())
    }

    fn step(&mut self, u: &[f64]) -> Result<Transition, TrainError> {
        if u.len() != self.dims {
            return Err(TrainError::Env(format!("bandit expects {} action values, got {}", self.dims, u.len())));
        }
        let loss = u.iter().map(|v| (v - self.target) * (v - self.target)).sum::<f64>() / self.dims as f64;
        Ok(Transition {
            state: self.state.clone(),
            reward: -loss,
            done: true,
            diverged: false,
        })
    }
}
