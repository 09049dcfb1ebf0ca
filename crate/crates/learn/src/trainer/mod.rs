// SPDX-License-Identifier: Apache-2.0

//! Advantage actor-critic training: n-step targets, losses with
//! hand-derived output gradients, and the learner update.

mod envs;
mod run;

pub use envs::{Environment, PlacementTask, QuadraticBandit, Transition};
pub use run::{
    collect_trajectory, evaluate, noise_plan, train, BestEntry, BestSolutionLog, EpisodeRecord, EvalResult, TrainOutcome,
    UpdateRecord,
};

use placerl_core::env::FeatureGrid;
use placerl_core::noise::OuParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{state_tensor, std_raw_grad, Agent, PolicyValue};
use crate::network::{ActionSpace, OutputGrad};
use crate::nn::optim::{NonFiniteGrad, Optimizer, OptimizerKind};
use crate::nn::{clip_grad_norm, global_grad_norm, Params, Real, ShapeError, Tensor};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("environment: {0}")]
    Env(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    NonFinite(#[from] NonFiniteGrad),
    #[error("invalid trainer config: {0}")]
    Config(String),
    #[error("aborted after {count} consecutive failed episodes on {design}: last rewards {last:?}")]
    Diverged { count: usize, design: String, last: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// One worker in lockstep with the learner; bitwise reproducible.
    Sync,
    /// Worker threads feeding a bounded queue.
    Async,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub lr_density: f64,
    pub lr_spatial: f64,
    pub beta: f64,
    pub n_step: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub max_train_steps: usize,
    pub num_workers: usize,
    pub value_loss_weight: f64,
    pub grad_clip: f64,
    pub optimizer: OptimizerKind,
    pub ou: OuParams,
    pub mode: TrainMode,
    pub queue_capacity: usize,
    pub max_consecutive_failures: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            lr_density: 4e-5,
            lr_spatial: 4e-6,
            beta: 0.05,
            n_step: 80,
            batch_size: 4,
            gamma: 1.0,
            max_train_steps: 50_000,
            num_workers: 1,
            value_loss_weight: 0.5,
            grad_clip: 8.0,
            optimizer: OptimizerKind::default(),
            ou: OuParams::default(),
            mode: TrainMode::Sync,
            queue_capacity: 16,
            max_consecutive_failures: 200,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn lr(&self, space: ActionSpace) -> f64 {
        match space {
            ActionSpace::DensityWeight => self.lr_density,
            ActionSpace::Spatial => self.lr_spatial,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.into()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.n_step == 0 || self.batch_size == 0 || self.num_workers == 0 || self.queue_capacity == 0 {
            return bad("n_step, batch_size, num_workers and queue_capacity must be at least 1");
        }
        if self.mode == TrainMode::Sync && self.num_workers != 1 {
            return bad("synchronous mode runs exactly one worker");
        }
        if !(self.grad_clip > 0.0) || self.beta < 0.0 || self.value_loss_weight < 0.0 {
            return bad("grad_clip must be positive; beta and value_loss_weight non-negative");
        }
        if !self.ou.is_valid() {
            return bad("OU parameters out of range");
        }
        Ok(())
    }
}

/// One environment step as the worker saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub state: FeatureGrid,
    /// Pre-squash action.
    pub u: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub design: String,
    pub worker: usize,
    pub episode: usize,
    pub steps: Vec<TrajectoryStep>,
    /// Episode reached a terminal state; otherwise the last state is
    /// bootstrapped from `bootstrap_state`.
    pub terminal: bool,
    pub bootstrap_state: Option<FeatureGrid>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// n-step targets and advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    pub targets: Vec<f64>,
    pub advantages: Vec<f64>,
}

/// For each `t`, `target_t = sum_{i<k} gamma^i r_{t+i} + gamma^k V(s_{t+k})`
/// with `k = min(n, T - t)` and `V(s_T) = bootstrap` (zero past a
/// terminal); the advantage is `target_t - V(s_t)`.
pub fn n_step_advantage(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, n: usize) -> Advantages {
    assert_eq!(rewards.len(), values.len(), "values must align with states");
    assert!(n >= 1, "n-step horizon");
    let len = rewards.len();
    let mut targets = Vec::with_capacity(len);
    for t in 0..len {
        let k = n.min(len - t);
        let mut g = 0.0;
        for i in 0..k {
            g += gamma.powi(i as i32) * rewards[t + i];
        }
        let tail = if t + k < len { values[t + k] } else { bootstrap };
        g += gamma.powi(k as i32) * tail;
        targets.push(g);
    }
    let advantages = targets.iter().zip(values).map(|(g, v)| g - v).collect();
    Advantages { targets, advantages }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    /// Mean per-sample entropy.
    pub entropy: f64,
    pub total: f64,
}

/// `policy = -mean(log_prob * A)`, `value = mean((V - target)^2)`,
/// `total = policy + w_v value - beta entropy`.
pub fn a3c_losses(
    log_probs: &[f64],
    advantages: &[f64],
    values: &[f64],
    targets: &[f64],
    entropies: &[f64],
    value_weight: f64,
    beta: f64,
) -> LossParts {
    let n = log_probs.len();
    assert!(n > 0 && advantages.len() == n && values.len() == n && targets.len() == n && entropies.len() == n);
    let nf = n as f64;
    let policy = -log_probs.iter().zip(advantages).map(|(l, a)| l * a).sum::<f64>() / nf;
    let value = values.iter().zip(targets).map(|(v, t)| (v - t) * (v - t)).sum::<f64>() / nf;
    let entropy = entropies.iter().sum::<f64>() / nf;
    LossParts {
        policy,
        value,
        entropy,
        total: policy + value_weight * value - beta * entropy,
    }
}

/// A training sample with its advantage and target held fixed.
#[derive(Debug, Clone)]
pub struct LearnSample<T> {
    pub state: Tensor<T>,
    pub u: Vec<T>,
    pub advantage: T,
    pub target: T,
}

#[derive(Debug, Clone, Copy)]
pub struct LossWeights {
    pub value: f64,
    pub beta: f64,
}

/// Losses and parameter gradients from forward passes already taken.
/// Per-sample gradients are summed in sample order.
fn loss_from_forward<T: Real>(
    agent: &Agent,
    params: &Params<T>,
    forwards: &[PolicyValue<T>],
    samples: &[(&[T], T, T)],
    w: LossWeights,
) -> Result<(LossParts, Params<T>), TrainError> {
    let n = forwards.len();
    let scale = T::of(1.0 / n as f64);
    let mut grads = params.zeros_like();
    let (mut lp, mut adv, mut vals, mut tgt, mut ent) = (vec![], vec![], vec![], vec![], vec![]);
    for (pv, &(u, a, target)) in forwards.iter().zip(samples) {
        let g = &pv.policy;
        lp.push(g.log_prob(u).as_f64());
        adv.push(a.as_f64());
        vals.push(pv.value.as_f64());
        tgt.push(target.as_f64());
        ent.push(g.entropy().as_f64());

        let (dm, ds) = g.log_prob_grad(u);
        let dh = g.entropy_grad();
        let beta = T::of(w.beta);
        let d_mean: Vec<T> = dm.iter().map(|&d| -a * scale * d).collect();
        let d_std: Vec<T> = ds.iter().zip(&dh).map(|(&d, &h)| -a * scale * d - beta * scale * h).collect();
        let og = OutputGrad {
            value: T::of(w.value) * T::of(2.0) * (pv.value - target) * scale,
            mean: d_mean,
            raw_std: std_raw_grad(&pv.output.raw_std, &d_std),
        };
        let sg = agent.network.backward(params, &pv.cache, &og)?;
        grads.add_assign(&sg);
    }
    Ok((a3c_losses(&lp, &adv, &vals, &tgt, &ent, w.value, w.beta), grads))
}

/// Forward + backward over a frozen batch.
pub fn loss_and_grad<T: Real>(
    agent: &Agent,
    params: &Params<T>,
    samples: &[LearnSample<T>],
    w: LossWeights,
) -> Result<(LossParts, Params<T>), TrainError> {
    let forwards = samples
        .iter()
        .map(|s| agent.policy_value_forward(params, &s.state))
        .collect::<Result<Vec<_>, _>>()?;
    let meta: Vec<(&[T], T, T)> = samples.iter().map(|s| (&s.u[..], s.advantage, s.target)).collect();
    loss_from_forward(agent, params, &forwards, &meta, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: LossParts,
    pub grad_norm: f64,
    pub clipped_norm: f64,
    pub samples: usize,
}

/// Owns the parameters; the only place they change.
pub struct Learner<T> {
    pub agent: Agent,
    pub params: Params<T>,
    optimizer: Optimizer<T>,
    lr: f64,
    cfg: TrainerConfig,
}

impl<T: Real> Learner<T> {
    pub fn new(agent: Agent, params: Params<T>, cfg: TrainerConfig) -> Self {
        let lr = cfg.lr(agent.space());
        Learner {
            optimizer: Optimizer::new(cfg.optimizer),
            agent,
            params,
            lr,
            cfg,
        }
    }

    /// Re-evaluates the batch under the current parameters, builds n-step
    /// targets from those values, and applies one clipped step.
    pub fn update(&mut self, batch: &[Trajectory]) -> Result<UpdateStats, TrainError> {
        let mut forwards = Vec::new();
        let mut meta = Vec::new();
        for traj in batch {
            let states: Vec<Tensor<T>> = traj.steps.iter().map(|s| state_tensor(&s.state)).collect();
            let mut values = Vec::with_capacity(states.len());
            for x in &states {
                let pv = self.agent.policy_value_forward(&self.params, x)?;
                values.push(pv.value.as_f64());
                forwards.push(pv);
            }
            let bootstrap = match (&traj.bootstrap_state, traj.terminal) {
                (Some(s), false) => self.agent.policy_value_forward(&self.params, &state_tensor(s))?.value.as_f64(),
                _ => 0.0,
            };
            let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
            let adv = n_step_advantage(&rewards, &values, bootstrap, self.cfg.gamma, self.cfg.n_step);
            for ((s, a), g) in traj.steps.iter().zip(adv.advantages).zip(adv.targets) {
                let u: Vec<T> = s.u.iter().map(|&v| T::of(v)).collect();
                meta.push((u, T::of(a), T::of(g)));
            }
        }
        if forwards.is_empty() {
            return Err(TrainError::Config("empty batch".into()));
        }
        let meta_ref: Vec<(&[T], T, T)> = meta.iter().map(|(u, a, g)| (&u[..], *a, *g)).collect();
        let w = LossWeights {
            value: self.cfg.value_loss_weight,
            beta: self.cfg.beta,
        };
        let (loss, mut grads) = loss_from_forward(&self.agent, &self.params, &forwards, &meta_ref, w)?;
        let grad_norm = clip_grad_norm(&mut grads, T::of(self.cfg.grad_clip)).as_f64();
        let clipped_norm = global_grad_norm(&grads).as_f64();
        self.optimizer.step(&mut self.params, &grads, T::of(self.lr))?;
        Ok(UpdateStats {
            loss,
            grad_norm,
            clipped_norm,
            samples: forwards.len(),
        })
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_examples() {
        let a = n_step_advantage(&[5.0], &[2.0], 0.0, 1.0, 80);
        assert_eq!(a.advantages, vec![3.0]);
        let b = n_step_advantage(&[0.0, 0.0, 10.0], &[2.0, 4.0, 7.0], 0.0, 1.0, 3);
        assert_eq!(b.advantages[0], 8.0);
        let c = n_step_advantage(&[1.0, 1.0], &[2.0, 3.0], 5.0, 0.9, 2);
        assert!((c.advantages[0] - 3.95).abs() < 1e-12);
    }

    #[test]
    fn terminal_reward_credits_every_step() {
        let r = [0.0, 0.0, 0.0, 0.0, 7.5];
        let a = n_step_advantage(&r, &[0.3, -1.0, 2.0, 0.0, 4.0], 0.0, 1.0, 80);
        assert!(a.targets.iter().all(|&g| g == 7.5));
    }

    #[test]
    fn loss_examples() {
        let z = a3c_losses(&[-1.3], &[0.0], &[1.0], &[1.0], &[0.0], 0.5, 0.0);
        assert_eq!(z.policy, 0.0);
        assert_eq!(z.value, 0.0);
        let p = a3c_losses(&[-2.0], &[3.0], &[0.0], &[0.0], &[1.0], 0.5, 0.05);
        assert_eq!(p.policy, 6.0);
        assert!((p.total - (6.0 - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(TrainerConfig::default().validate().is_ok());
        let bad = [
            TrainerConfig { gamma: 1.5, ..Default::default() },
            TrainerConfig { n_step: 0, ..Default::default() },
            TrainerConfig { batch_size: 0, ..Default::default() },
            TrainerConfig { num_workers: 2, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert_eq!(TrainerConfig::default().lr(ActionSpace::Spatial), 4e-6);
    }
}
