// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::{Arc, RwLock};
use std::thread;

use placerl_core::netlist::Placement;
use placerl_core::noise::{NoiseFieldPlan, OuParams};
use serde::{Deserialize, Serialize};

use crate::agent::{sample_action, state_tensor, Agent};
use crate::network::ActionSpace;
use crate::nn::{Params, Real};

use super::{Environment, Learner, TrainError, TrainMode, TrainerConfig, Trajectory, TrajectoryStep};

/// Noise source for one episode. The density action uses a single OU
/// process; the spatial action draws its base resolution per episode.
pub fn noise_plan(space: ActionSpace, action_grid: usize, ou: OuParams, seed: u64) -> NoiseFieldPlan {
    match space {
        ActionSpace::DensityWeight => NoiseFieldPlan::with_base(ou, (1, 1), (1, 1), seed),
        ActionSpace::Spatial => NoiseFieldPlan::sample(ou, action_grid, seed),
    }
}

fn episode_seed(seed: u64, worker: usize, episode: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((worker as u64) << 40) ^ (episode as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

/// Rolls one episode to its end under a parameter snapshot.
pub fn collect_trajectory<T: Real>(
    env: &mut dyn Environment,
    agent: &Agent,
    params: &Params<T>,
    noise: &mut NoiseFieldPlan,
    worker: usize,
    episode: usize,
) -> Result<(Trajectory, Option<Placement<f64>>), TrainError> {
    let mut state = env.reset()?;
    let mut steps = Vec::new();
    let diverged = loop {
        let pv = agent.policy_value_forward(params, &state_tensor(&state))?;
        let field = noise.next_field();
        let s = sample_action(&pv.policy, &field)?;
        let u: Vec<f64> = s.u.iter().map(|v| v.as_f64()).collect();
        let tr = env.step(&u)?;
        steps.push(TrajectoryStep {
            state,
            u,
            log_prob: s.log_prob.as_f64(),
            reward: tr.reward,
            value: pv.value.as_f64(),
        });
        state = tr.state;
        if tr.done {
            break tr.diverged;
        }
    };
    let traj = Trajectory {
        design: env.name().to_string(),
        worker,
        episode,
        steps,
        terminal: true,
        bootstrap_state: None,
        diverged,
    };
    Ok((traj, env.solution()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub reward: f64,
    pub steps: usize,
    pub diverged: bool,
    pub solution: Option<Placement<f64>>,
}

/// Greedy rollout: the action is the squashed policy mean.
pub fn evaluate<T: Real>(env: &mut dyn Environment, agent: &Agent, params: &Params<T>) -> Result<EvalResult, TrainError> {
    let mut state = env.reset()?;
    let (mut reward, mut steps) = (0.0, 0);
    loop {
        let pv = agent.policy_value_forward(params, &state_tensor(&state))?;
        let u: Vec<f64> = pv.policy.mean.iter().map(|v| v.as_f64()).collect();
        let tr = env.step(&u)?;
        reward += tr.reward;
        steps += 1;
        state = tr.state;
        if tr.done {
            return Ok(EvalResult {
                reward,
                steps,
                diverged: tr.diverged,
                solution: env.solution(),
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestEntry {
    pub reward: f64,
    pub episode: usize,
    pub solution: Option<Placement<f64>>,
}

/// Best episode reward per design; entries only ever improve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BestSolutionLog {
    pub entries: BTreeMap<String, BestEntry>,
}

impl BestSolutionLog {
    /// Returns true when the entry for `design` improved.
    pub fn record(&mut self, design: &str, reward: f64, episode: usize, solution: Option<Placement<f64>>) -> bool {
        if !reward.is_finite() {
            return false;
        }
        match self.entries.get(design) {
            Some(e) if e.reward >= reward => false,
            _ => {
                self.entries.insert(
                    design.to_string(),
                    BestEntry {
                        reward,
                        episode,
                        solution,
                    },
                );
                true
            }
        }
    }

    pub fn best(&self, design: &str) -> Option<f64> {
        self.entries.get(design).map(|e| e.reward)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub worker: usize,
    pub design: String,
    pub reward: f64,
    pub steps: usize,
    pub diverged: bool,
    pub env_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub update: usize,
    pub env_steps: usize,
    pub episodes: usize,
    pub mean_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total_loss: f64,
    pub grad_norm: f64,
    pub clipped_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: Params<T>,
    pub best: BestSolutionLog,
    pub episodes: Vec<EpisodeRecord>,
    pub updates: Vec<UpdateRecord>,
    pub env_steps: usize,
}

enum Msg {
    Done(Trajectory, Option<Placement<f64>>),
    Failed { worker: usize, design: String, error: String },
}

/// Learner-side bookkeeping shared by both modes.
struct Book<T> {
    learner: Learner<T>,
    cfg: TrainerConfig,
    batch: Vec<Trajectory>,
    best: BestSolutionLog,
    episodes: Vec<EpisodeRecord>,
    updates: Vec<UpdateRecord>,
    env_steps: usize,
    failures: usize,
    recent: Vec<f64>,
}

impl<T: Real> Book<T> {
    fn done(&self) -> bool {
        self.env_steps >= self.cfg.max_train_steps
    }

    fn fail(&mut self, design: &str, reward: f64) -> Result<(), TrainError> {
        self.failures += 1;
        self.recent.push(reward);
        if self.recent.len() > 10 {
            self.recent.remove(0);
        }
        if self.failures >= self.cfg.max_consecutive_failures {
            return Err(TrainError::Diverged {
                count: self.failures,
                design: design.to_string(),
                last: self.recent.clone(),
            });
        }
        Ok(())
    }

    /// Returns true when a new snapshot should be published.
    fn consume(&mut self, msg: Msg) -> Result<bool, TrainError> {
        let (traj, solution) = match msg {
            Msg::Done(t, s) => (t, s),
            Msg::Failed { worker, design, error } => {
                log::warn!("worker {worker}: episode on {design} discarded: {error}");
                self.fail(&design, f64::NAN)?;
                return Ok(false);
            }
        };
        let reward = traj.total_reward();
        let index = self.episodes.len();
        self.env_steps += traj.steps.len();
        self.episodes.push(EpisodeRecord {
            episode: index,
            worker: traj.worker,
            design: traj.design.clone(),
            reward,
            steps: traj.steps.len(),
            diverged: traj.diverged,
            env_steps: self.env_steps,
        });
        if self.best.record(&traj.design, reward, index, solution) {
            log::info!("episode {index}: new best {reward:.4} on {}", traj.design);
        }
        if traj.diverged {
            self.fail(&traj.design, reward)?;
        } else {
            self.failures = 0;
        }
        self.batch.push(traj);
        if self.batch.len() < self.cfg.batch_size {
            return Ok(false);
        }
        let batch = std::mem::take(&mut self.batch);
        let stats = self.learner.update(&batch)?;
        let mean_reward = batch.iter().map(Trajectory::total_reward).sum::<f64>() / batch.len() as f64;
        let rec = UpdateRecord {
            update: self.updates.len(),
            env_steps: self.env_steps,
            episodes: self.episodes.len(),
            mean_reward,
            policy_loss: stats.loss.policy,
            value_loss: stats.loss.value,
            entropy: stats.loss.entropy,
            total_loss: stats.loss.total,
            grad_norm: stats.grad_norm,
            clipped_norm: stats.clipped_norm,
        };
        log::debug!("{rec:?}");
        self.updates.push(rec);
        Ok(true)
    }

    fn finish(self) -> TrainOutcome<T> {
        TrainOutcome {
            params: self.learner.params,
            best: self.best,
            episodes: self.episodes,
            updates: self.updates,
            env_steps: self.env_steps,
        }
    }
}

/// Trains until `max_train_steps` environment steps have been consumed.
/// `make_env(worker)` builds each worker's environment.
pub fn train<T, F>(agent: Agent, params: Params<T>, cfg: &TrainerConfig, make_env: F) -> Result<TrainOutcome<T>, TrainError>
where
    T: Real + Send + Sync,
    F: Fn(usize) -> Result<Box<dyn Environment>, TrainError>,
{
    cfg.validate()?;
    let mut book = Book {
        learner: Learner::new(agent.clone(), params, cfg.clone()),
        cfg: cfg.clone(),
        batch: Vec::new(),
        best: BestSolutionLog::default(),
        episodes: Vec::new(),
        updates: Vec::new(),
        env_steps: 0,
        failures: 0,
        recent: Vec::new(),
    };
    let space = agent.space();
    let a = agent.network.cfg.action_grid;
    match cfg.mode {
        TrainMode::Sync => {
            let mut env = make_env(0)?;
            let mut episode = 0;
            while !book.done() {
                let mut noise = noise_plan(space, a, cfg.ou, episode_seed(cfg.seed, 0, episode));
                let msg = match collect_trajectory(env.as_mut(), &agent, &book.learner.params, &mut noise, 0, episode) {
                    Ok((t, s)) => Msg::Done(t, s),
                    Err(e) => Msg::Failed {
                        worker: 0,
                        design: env.name().to_string(),
                        error: e.to_string(),
                    },
                };
                episode += 1;
                book.consume(msg)?;
            }
            Ok(book.finish())
        }
        TrainMode::Async => {
            let envs = (0..cfg.num_workers).map(&make_env).collect::<Result<Vec<_>, _>>()?;
            let snapshot = RwLock::new(Arc::new(book.learner.params.clone()));
            let stop = AtomicBool::new(false);
            let (tx, rx) = sync_channel::<Msg>(cfg.queue_capacity);
            let result = thread::scope(|s| {
                for (w, mut env) in envs.into_iter().enumerate() {
                    let tx = tx.clone();
                    let (agent, snapshot, stop) = (&agent, &snapshot, &stop);
                    s.spawn(move || {
                        let mut episode = 0;
                        while !stop.load(Ordering::Relaxed) {
                            let params = snapshot.read().expect("snapshot lock").clone();
                            let mut noise = noise_plan(space, a, cfg.ou, episode_seed(cfg.seed, w, episode));
                            let msg = match collect_trajectory(env.as_mut(), agent, &params, &mut noise, w, episode) {
                                Ok((t, sol)) => Msg::Done(t, sol),
                                Err(e) => Msg::Failed {
                                    worker: w,
                                    design: env.name().to_string(),
                                    error: e.to_string(),
                                },
                            };
                            episode += 1;
                            if tx.send(msg).is_err() {
                                break;
                            }
                        }
                    });
                }
                drop(tx);
                let r = learn_loop(&mut book, &rx, &snapshot);
                stop.store(true, Ordering::Relaxed);
                drop(rx);
                r
            });
            result?;
            Ok(book.finish())
        }
    }
}

fn learn_loop<T: Real>(book: &mut Book<T>, rx: &Receiver<Msg>, snapshot: &RwLock<Arc<Params<T>>>) -> Result<(), TrainError> {
    while !book.done() {
        let Ok(msg) = rx.recv() else { break };
        if book.consume(msg)? {
            *snapshot.write().expect("snapshot lock") = Arc::new(book.learner.params.clone());
        }
    }
    Ok(())
}
