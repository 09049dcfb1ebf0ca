// SPDX-License-Identifier: Apache-2.0

//! Placement as an episodic decision process. Every step runs a block of
//! placer iterations under one action and returns normalised features.
//! The only nonzero reward is terminal: the percentage HPWL improvement over
//! the baseline run on convergence, or a fixed penalty otherwise.

pub mod features;
pub mod stats;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::bookshelf::{parse_bookshelf, BookshelfError};
use crate::netlist::{hpwl, Netlist, Placement};
use crate::num::Scalar;
use crate::placer::{
    init_placement, Control, IterationStats, Placer, PlacerConfig, PlacerError, SpatialAction, Termination,
};
use crate::synth::{generate, SynthConfig};

pub use features::{extract_features, FeatureConfig, FeatureGrid};
pub use stats::{ChannelStats, FeatureStats};

pub const DIVERGENCE_REWARD: f64 = -10.0;

/// A named netlist with its terminal positions.
#[derive(Debug, Clone)]
pub struct Design<T> {
    pub name: String,
    pub netlist: Arc<Netlist<T>>,
    pub fixed: Placement<T>,
}

impl<T: Scalar> Design<T> {
    pub fn new(name: impl Into<String>, netlist: Netlist<T>, fixed: Placement<T>) -> Self {
        Design {
            name: name.into(),
            netlist: Arc::new(netlist),
            fixed,
        }
    }

    /// Reads a Bookshelf design; the name is the .aux file stem.
    pub fn load(aux: &Path) -> Result<Self, BookshelfError> {
        let (nl, pl) = parse_bookshelf(aux)?;
        let name = aux.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self::new(name, nl, pl))
    }

    pub fn synthetic(cfg: &SynthConfig) -> Self {
        let (nl, pl) = generate(cfg);
        Self::new(format!("synth{}_s{}", cfg.cells, cfg.seed), nl, pl)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct EnvConfig<T> {
    pub placer: PlacerConfig<T>,
    pub features: FeatureConfig,
    /// Placer iterations per environment step.
    pub block_iterations: usize,
    /// Admissible schedule multipliers.
    pub cof_min: f64,
    pub cof_max: f64,
    /// Side of the square spatial action grid.
    pub action_grid: usize,
}

impl<T: Scalar> Default for EnvConfig<T> {
    fn default() -> Self {
        EnvConfig {
            placer: PlacerConfig::toy(),
            features: FeatureConfig::default(),
            block_iterations: 10,
            cof_min: 0.9,
            cof_max: 1.1,
            action_grid: 8,
        }
    }
}

impl<T: Scalar> EnvConfig<T> {
    /// Defaults with the density grid sized for `design`.
    pub fn for_design(design: &Design<T>) -> Self {
        EnvConfig {
            placer: PlacerConfig::toy_for(design.netlist.num_movable()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Let the placer's own schedule run the block.
    Heuristic,
    Cof(f64),
    /// Row-major `action_grid` x `action_grid` gradient multipliers.
    Spatial(Vec<f64>),
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("no baseline statistics for design {0:?}")]
    MissingBaseline(String),
    #[error("episode not active; call reset")]
    NotActive,
    #[error("spatial action has {got} values, expected {expected}")]
    ActionShape { got: usize, expected: usize },
    #[error("baseline run did not converge ({0:?})")]
    BaselineFailed(Termination),
    #[error(transparent)]
    Placer(#[from] PlacerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub final_hpwl: f64,
    pub baseline_hpwl: f64,
    pub reward: f64,
    pub steps: usize,
    pub diverged: bool,
    pub termination: Termination,
}

/// `100 (baseline - final) / baseline`.
pub fn improvement_reward(baseline_hpwl: f64, final_hpwl: f64) -> f64 {
    100.0 * (baseline_hpwl - final_hpwl) / baseline_hpwl
}

#[derive(Debug, Clone)]
pub struct Baseline<T> {
    pub stats: FeatureStats,
    pub placement: Placement<T>,
    pub iterations: Vec<IterationStats<T>>,
}

fn snapshot<T: Scalar>(placer: &Placer<T>, cfg: &FeatureConfig) -> FeatureGrid {
    extract_features(placer.state(), placer.netlist(), &placer.placement(), cfg)
}

/// Runs the unassisted placer in environment-sized blocks, collecting the
/// feature stream for normalisation. Fails unless the run converges.
pub fn run_baseline<T: Scalar>(design: &Design<T>, cfg: &EnvConfig<T>) -> Result<Baseline<T>, EnvError> {
    let pc = &cfg.placer;
    let initial = init_placement(&design.netlist, &design.fixed, pc.init_jitter, pc.seed);
    let mut placer = Placer::new(design.netlist.clone(), pc.clone(), initial)?;
    let mut snapshots = vec![snapshot(&placer, &cfg.features)];
    while !placer.is_done() {
        for _ in 0..cfg.block_iterations {
            placer.iterate(&Control::Heuristic);
            if placer.is_done() {
                break;
            }
        }
        snapshots.push(snapshot(&placer, &cfg.features));
    }
    let state = placer.state();
    match state.termination {
        Some(Termination::Converged) => {}
        Some(t) => return Err(EnvError::BaselineFailed(t)),
        None => unreachable!("loop exits only when done"),
    }
    let max = state.hpwl_history.iter().fold(T::zero(), |a, &b| a.max(b));
    let placement = placer.placement();
    let stats = FeatureStats::from_snapshots(
        &design.name,
        cfg.features.channel_names(),
        &snapshots,
        hpwl(&design.netlist, &placement).as_f64(),
        max.as_f64(),
        state.iteration,
    );
    Ok(Baseline {
        stats,
        placement,
        iterations: placer.stats().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: FeatureGrid,
    pub reward: f64,
    pub done: bool,
    /// Wall time of the placer block.
    pub placer_ms: f64,
    /// Wall time of feature extraction and normalisation.
    pub features_ms: f64,
}

pub struct PlacementEnv<T: Scalar> {
    design: Design<T>,
    cfg: EnvConfig<T>,
    stats: Option<Arc<FeatureStats>>,
    placer: Option<Placer<T>>,
    steps: usize,
    clamped: usize,
    result: Option<EpisodeResult>,
}

impl<T: Scalar> PlacementEnv<T> {
    pub fn new(design: Design<T>, cfg: EnvConfig<T>, stats: Option<Arc<FeatureStats>>) -> Self {
        PlacementEnv {
            design,
            cfg,
            stats,
            placer: None,
            steps: 0,
            clamped: 0,
            result: None,
        }
    }

    pub fn design(&self) -> &Design<T> {
        &self.design
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.cfg
    }

    pub fn stats(&self) -> Option<&Arc<FeatureStats>> {
        self.stats.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Actions clamped into range since construction.
    pub fn clamp_events(&self) -> usize {
        self.clamped
    }

    pub fn placer(&self) -> Option<&Placer<T>> {
        self.placer.as_ref()
    }

    /// Set once an episode has finished.
    pub fn result(&self) -> Option<&EpisodeResult> {
        self.result.as_ref()
    }

    fn baseline(&self) -> Result<Arc<FeatureStats>, EnvError> {
        match &self.stats {
            Some(s) if s.design == self.design.name => Ok(s.clone()),
            _ => Err(EnvError::MissingBaseline(self.design.name.clone())),
        }
    }

    /// Starts a fresh placer and returns the normalised initial state.
    pub fn reset(&mut self) -> Result<FeatureGrid, EnvError> {
        let stats = self.baseline()?;
        let pc = &self.cfg.placer;
        let initial = init_placement(&self.design.netlist, &self.design.fixed, pc.init_jitter, pc.seed);
        let mut placer = Placer::new(self.design.netlist.clone(), pc.clone(), initial)?;
        placer.set_hpwl_reference(T::of(stats.baseline_max_hpwl));
        let state = stats.normalize(&snapshot(&placer, &self.cfg.features));
        self.placer = Some(placer);
        self.steps = 0;
        self.result = None;
        Ok(state)
    }

    fn control(&mut self, action: &Action) -> Result<Control<T>, EnvError> {
        let pc = &self.cfg.placer;
        Ok(match action {
            Action::Heuristic => Control::Heuristic,
            Action::Cof(c) => {
                let v = if c.is_nan() { 1.0 } else { c.clamp(self.cfg.cof_min, self.cfg.cof_max) };
                if v != *c {
                    self.clamped += 1;
                    log::debug!("cof {c} clamped to {v}");
                }
                Control::Cof(T::of(v))
            }
            Action::Spatial(values) => {
                let a = self.cfg.action_grid;
                if values.len() != a * a {
                    return Err(EnvError::ActionShape {
                        got: values.len(),
                        expected: a * a,
                    });
                }
                let mut sa = SpatialAction::new(
                    &self.design.netlist.region,
                    a,
                    a,
                    values.iter().map(|&v| T::of(v)).collect(),
                );
                let n = sa.clamp_values(pc.spatial_min, pc.spatial_max);
                if n > 0 {
                    self.clamped += 1;
                    log::debug!("{n} spatial action values clamped");
                }
                Control::Spatial(sa)
            }
        })
    }

    /// Runs one block of placer iterations under `action`.
    pub fn step(&mut self, action: &Action) -> Result<Step, EnvError> {
        if self.placer.as_ref().is_none_or(|p| p.is_done()) {
            return Err(EnvError::NotActive);
        }
        let stats = self.baseline()?;
        let control = self.control(action)?;
        let placer = self.placer.as_mut().expect("checked above");

        let t0 = Instant::now();
        for _ in 0..self.cfg.block_iterations {
            placer.iterate(&control);
            if placer.is_done() {
                break;
            }
        }
        let placer_ms = t0.elapsed().as_secs_f64() * 1e3;
        self.steps += 1;

        let t1 = Instant::now();
        let placement = placer.placement();
        let raw = extract_features(placer.state(), placer.netlist(), &placement, &self.cfg.features);
        let state = stats.normalize(&raw);
        let features_ms = t1.elapsed().as_secs_f64() * 1e3;

        let mut reward = 0.0;
        let done = placer.is_done();
        if let Some(t) = placer.state().termination {
            let final_hpwl = hpwl(&self.design.netlist, &placement).as_f64();
            let converged = t == Termination::Converged;
            reward = if converged {
                improvement_reward(stats.baseline_hpwl, final_hpwl)
            } else {
                DIVERGENCE_REWARD
            };
            self.result = Some(EpisodeResult {
                final_hpwl,
                baseline_hpwl: stats.baseline_hpwl,
                reward,
                steps: self.steps,
                diverged: !converged,
                termination: t,
            });
        }
        Ok(Step {
            state,
            reward,
            done,
            placer_ms,
            features_ms,
        })
    }
}
