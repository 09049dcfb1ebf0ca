// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use placerl_core::env::{
    extract_features, improvement_reward, run_baseline, Design, FeatureGrid, FeatureStats, PlacementEnv,
};
use placerl_core::netedit::{modify_netlist, remap_placement, EditConfig};
use placerl_core::netlist::bookshelf::{write_design, write_placement};
use placerl_core::netlist::{hpwl, Placement};
use placerl_core::noise::NoiseFieldPlan;
use placerl_core::pgm;
use placerl_core::placer::{init_placement, Control, Placer, RlMode};
use placerl_core::synth::{generate, SynthConfig};
use placerl_learn::agent::{state_tensor, Agent, STD_FLOOR};
use placerl_learn::nn::{checkpoint, Params, Real};
use placerl_learn::trainer::{evaluate, train, Environment, EvalResult, PlacementTask};
use placerl_learn::{ActionSpace, Network};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::config::{parse_assignment, read_config_file, resolve, set_path, Precision, RunConfig};
use crate::error::{config_err, DivergenceError, InputError};
use crate::report::{write_csv, write_json, Meta};

pub const STATS_HEADER: [&str; 6] = ["iteration", "hpwl", "overflow", "lambda", "cof", "wall_ms"];

/// Resolved configuration plus where and how to report.
struct Run {
    cfg: RunConfig,
    out: PathBuf,
    command: &'static str,
}

impl Run {
    fn meta(&self) -> Meta {
        Meta::new(self.command, self.cfg.digest(), self.cfg.seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn csv<R: Serialize>(&self, name: &str, header: &[&str], rows: &[R]) -> anyhow::Result<()> {
        write_csv(&self.path(name), header, rows, &self.meta())
    }

    fn json<S: Serialize>(&self, name: &str, body: &S) -> anyhow::Result<()> {
        write_json(&self.path(name), body, &self.meta())
    }
}

fn setup(command: &'static str, common: &Common, design: Option<&Design<f64>>, saved: Option<Value>, flags: Value) -> anyhow::Result<Run> {
    let mut layers: Vec<Value> = saved.into_iter().collect();
    if let Some(p) = &common.config {
        layers.push(read_config_file(p)?);
    }
    let mut flags = flags;
    if let Some(s) = common.seed {
        set_path(&mut flags, "seed", json!(s));
    }
    layers.push(flags);
    for s in &common.overrides {
        layers.push(parse_assignment(s)?);
    }
    let cfg = resolve(design, &layers)?;
    fs::create_dir_all(&common.out).map_err(|e| config_err(format!("output directory {}: {e}", common.out.display())))?;
    log::info!("{command}: config digest {}", cfg.digest());
    Ok(Run {
        cfg,
        out: common.out.clone(),
        command,
    })
}

pub fn load_design(src: &DesignSource, synth: &SynthSeed) -> anyhow::Result<Design<f64>> {
    match (&src.design, src.synth) {
        (Some(p), _) => Ok(Design::load(p)?),
        (None, Some(n)) => Ok(Design::synthetic(&SynthConfig::new(n, synth.synth_seed))),
        (None, None) => Err(config_err("either --design or --synth is required")),
    }
}

fn baseline_stats(design: &Design<f64>, cfg: &RunConfig, arg: &StatsArg) -> anyhow::Result<Arc<FeatureStats>> {
    let stats = match &arg.stats {
        Some(p) => FeatureStats::load(p).map_err(|e| InputError(format!("{}: {e}", p.display())))?,
        None => run_baseline(design, &cfg.env)?.stats,
    };
    if stats.design != design.name {
        return Err(config_err(format!(
            "baseline statistics are for design {:?}, not {:?}",
            stats.design, design.name
        )));
    }
    if stats.channel_names != cfg.env.features.channel_names() {
        return Err(config_err("baseline statistics were computed with different feature channels"));
    }
    Ok(Arc::new(stats))
}

fn agent_for(cfg: &RunConfig) -> Agent {
    Agent {
        network: Network::new(cfg.network.clone()),
        squash: cfg.squash,
        std_floor: STD_FLOOR,
    }
}

fn load_params<T: Real>(agent: &Agent, path: &Path) -> anyhow::Result<Params<T>> {
    let p = checkpoint::load::<T>(path).with_context(|| format!("checkpoint {}", path.display()))?;
    if !p.same_layout(&agent.init::<T>()) {
        return Err(config_err(format!(
            "checkpoint {} does not match the configured network",
            path.display()
        )));
    }
    Ok(p)
}

/// The run config saved next to a checkpoint by `train`, if present.
fn saved_config(checkpoint: &Path) -> anyhow::Result<Option<Value>> {
    let p = checkpoint.with_file_name("config.json");
    if !p.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
    if let Some(o) = v.as_object_mut() {
        o.remove("meta");
    }
    Ok(Some(v))
}

fn task(design: &Design<f64>, cfg: &RunConfig, stats: &Arc<FeatureStats>) -> PlacementTask {
    PlacementTask::new(design.clone(), cfg.env.clone(), stats.clone(), cfg.action, cfg.squash)
}

#[derive(Serialize)]
struct DesignInfo<'a> {
    name: &'a str,
    nodes: usize,
    movable: usize,
    nets: usize,
}

fn info(d: &Design<f64>) -> DesignInfo<'_> {
    DesignInfo {
        name: &d.name,
        nodes: d.netlist.num_nodes(),
        movable: d.netlist.num_movable(),
        nets: d.netlist.nets.len(),
    }
}

pub fn place(a: &PlaceArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let run = setup("place", &a.common, Some(&design), None, json!({}))?;
    let mut pc = run.cfg.env.placer.clone();
    pc.rl_mode = RlMode::Off;
    let initial = init_placement(&design.netlist, &design.fixed, pc.init_jitter, pc.seed);
    let initial_hpwl = hpwl(&design.netlist, &initial);
    let mut placer = Placer::new(design.netlist.clone(), pc, initial)?;
    while !placer.is_done() {
        placer.iterate(&Control::Heuristic);
    }
    let placement = placer.placement();
    write_placement(&design.netlist, &placement, run.path(&format!("{}.pl", design.name)))?;
    let rows: Vec<_> = placer
        .stats()
        .iter()
        .map(|s| (s.iteration, s.hpwl, s.overflow, s.lambda, s.cof, s.wall_ms))
        .collect();
    run.csv("stats.csv", &STATS_HEADER, &rows)?;
    if a.dump_maps {
        let g = placer.density_grid();
        let field: Vec<f64> = g.field_x.iter().zip(&g.field_y).map(|(x, y)| x.hypot(*y)).collect();
        pgm::write(&run.path("density.pgm"), &g.occupancy, g.nx, g.ny)?;
        pgm::write(&run.path("potential.pgm"), &g.potential, g.nx, g.ny)?;
        pgm::write(&run.path("field.pgm"), &field, g.nx, g.ny)?;
    }
    let st = placer.state();
    let termination = st.termination.expect("placer finished");
    let final_hpwl = hpwl(&design.netlist, &placement);
    run.json(
        "summary.json",
        &json!({
            "design": info(&design),
            "initial_hpwl": initial_hpwl,
            "final_hpwl": final_hpwl,
            "overflow": st.overflow,
            "iterations": st.iteration,
            "termination": termination,
        }),
    )?;
    println!(
        "{}: {} iterations, {:?}, HPWL {:.6e} -> {:.6e}, overflow {:.4}",
        design.name, st.iteration, termination, initial_hpwl, final_hpwl, st.overflow
    );
    if termination.is_divergence() {
        return Err(DivergenceError(format!("placement diverged ({termination:?})")).into());
    }
    Ok(())
}

pub fn baseline(a: &BaselineArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let run = setup("baseline", &a.common, Some(&design), None, json!({}))?;
    let b = run_baseline(&design, &run.cfg.env)?;
    b.stats
        .save(&run.path(&format!("{}.stats.json", design.name)))
        .context("writing baseline statistics")?;
    write_placement(&design.netlist, &b.placement, run.path(&format!("{}.pl", design.name)))?;
    let rows: Vec<_> = b
        .iterations
        .iter()
        .map(|s| (s.iteration, s.hpwl, s.overflow, s.lambda, s.cof, s.wall_ms))
        .collect();
    run.csv("stats.csv", &STATS_HEADER, &rows)?;
    run.json(
        "summary.json",
        &json!({
            "design": info(&design),
            "baseline_hpwl": b.stats.baseline_hpwl,
            "baseline_max_hpwl": b.stats.baseline_max_hpwl,
            "iterations": b.stats.baseline_iterations,
        }),
    )?;
    println!(
        "{}: baseline HPWL {:.6e} after {} iterations",
        design.name, b.stats.baseline_hpwl, b.stats.baseline_iterations
    );
    Ok(())
}

pub const CURVE_HEADER: [&str; 7] = ["episode", "worker", "design", "reward", "steps", "diverged", "env_steps"];
pub const UPDATES_HEADER: [&str; 10] = [
    "update",
    "env_steps",
    "episodes",
    "mean_reward",
    "policy_loss",
    "value_loss",
    "entropy",
    "total_loss",
    "grad_norm",
    "clipped_norm",
];

pub fn train_cmd(a: &TrainArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let mut flags = json!({});
    if let Some(s) = &a.action {
        let space = ActionSpace::parse(s).ok_or_else(|| config_err(format!("unknown action space {s:?}")))?;
        set_path(&mut flags, "action", serde_json::to_value(space)?);
    }
    if let Some(w) = a.workers {
        set_path(&mut flags, "trainer.num_workers", json!(w));
    }
    if let Some(k) = a.steps {
        set_path(&mut flags, "trainer.max_train_steps", json!(k));
    }
    let run = setup("train", &a.common, Some(&design), None, flags)?;
    let stats = baseline_stats(&design, &run.cfg, &a.stats)?;
    match run.cfg.precision {
        Precision::F32 => train_typed::<f32>(&run, &design, stats, a.init.as_deref()),
        Precision::F64 => train_typed::<f64>(&run, &design, stats, a.init.as_deref()),
    }
}

fn train_typed<T: Real>(run: &Run, design: &Design<f64>, stats: Arc<FeatureStats>, init: Option<&Path>) -> anyhow::Result<()> {
    let cfg = &run.cfg;
    let agent = agent_for(cfg);
    let params: Params<T> = match init {
        Some(p) => load_params(&agent, p)?,
        None => agent.init(),
    };
    let make = |_| Ok(Box::new(task(design, cfg, &stats)) as Box<dyn Environment>);
    let out = train(agent.clone(), params, &cfg.trainer, make)?;

    checkpoint::save(&out.params, &run.path("policy.ckpt")).context("writing checkpoint")?;
    fs::write(run.path("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    run.csv("curve.csv", &CURVE_HEADER, &out.episodes)?;
    run.csv("updates.csv", &UPDATES_HEADER, &out.updates)?;
    let best = out.best.entries.get(&design.name);
    let mut best_hpwl = None;
    if let Some(sol) = best.and_then(|b| b.solution.as_ref()) {
        write_placement(&design.netlist, sol, run.path(&format!("{}.best.pl", design.name)))?;
        best_hpwl = Some(hpwl(&design.netlist, sol));
    }
    let best_reward = best.map(|b| b.reward);
    run.json(
        "summary.json",
        &json!({
            "design": info(design),
            "action": cfg.action,
            "episodes": out.episodes.len(),
            "updates": out.updates.len(),
            "env_steps": out.env_steps,
            "baseline_hpwl": stats.baseline_hpwl,
            "best_reward": best_reward,
            "best_episode": best.map(|b| b.episode),
            "best_hpwl": best_hpwl,
        }),
    )?;
    println!(
        "{}: {} episodes, {} env steps, best reward {}",
        design.name,
        out.episodes.len(),
        out.env_steps,
        best_reward.map_or("none".into(), |r| format!("{r:.4}"))
    );
    Ok(())
}

/// Greedy rollout plus the final HPWL it reached.
fn greedy<T: Real>(
    design: &Design<f64>,
    cfg: &RunConfig,
    stats: &Arc<FeatureStats>,
    agent: &Agent,
    params: &Params<T>,
) -> anyhow::Result<(EvalResult, f64)> {
    let mut env = task(design, cfg, stats);
    let r = evaluate(&mut env as &mut dyn Environment, agent, params)?;
    let final_hpwl = r.solution.as_ref().map_or(f64::NAN, |s| hpwl(&design.netlist, s));
    Ok((r, final_hpwl))
}

pub const EVAL_HEADER: [&str; 7] = ["design", "baseline_hpwl", "final_hpwl", "improvement_pct", "reward", "steps", "diverged"];

pub fn eval_cmd(a: &EvalArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let run = setup("eval", &a.common, Some(&design), saved_config(&a.checkpoint)?, json!({}))?;
    let stats = baseline_stats(&design, &run.cfg, &a.stats)?;
    match run.cfg.precision {
        Precision::F32 => eval_typed::<f32>(&run, &design, &stats, &a.checkpoint),
        Precision::F64 => eval_typed::<f64>(&run, &design, &stats, &a.checkpoint),
    }
}

fn eval_typed<T: Real>(run: &Run, design: &Design<f64>, stats: &Arc<FeatureStats>, ckpt: &Path) -> anyhow::Result<()> {
    let agent = agent_for(&run.cfg);
    let params: Params<T> = load_params(&agent, ckpt)?;
    let (r, final_hpwl) = greedy(design, &run.cfg, stats, &agent, &params)?;
    let b = stats.baseline_hpwl;
    let delta = improvement_reward(b, final_hpwl);
    run.csv(
        "eval.csv",
        &EVAL_HEADER,
        &[(&design.name, b, final_hpwl, delta, r.reward, r.steps, r.diverged)],
    )?;
    if let Some(sol) = &r.solution {
        write_placement(&design.netlist, sol, run.path(&format!("{}.eval.pl", design.name)))?;
    }
    run.json(
        "summary.json",
        &json!({
            "design": info(design),
            "baseline_hpwl": b,
            "final_hpwl": final_hpwl,
            "improvement_pct": delta,
            "reward": r.reward,
            "steps": r.steps,
            "diverged": r.diverged,
        }),
    )?;
    println!(
        "{}: baseline HPWL {b:.6e}, policy HPWL {final_hpwl:.6e}, improvement {delta:+.4}% ({} steps)",
        design.name, r.steps
    );
    if r.diverged {
        return Err(DivergenceError("policy rollout diverged".into()).into());
    }
    Ok(())
}

pub fn edit(a: &EditArgs) -> anyhow::Result<()> {
    let design = Design::<f64>::load(&a.input)?;
    let run = setup("edit", &a.common, Some(&design), None, json!({}))?;
    let ec = EditConfig {
        num_edits: a.edits,
        seed: run.cfg.seed,
        weights: run.cfg.edit_weights,
    };
    let (nl, log) = modify_netlist(&design.netlist, &ec)?;
    if let Err(v) = nl.validate() {
        anyhow::bail!("edited netlist failed validation: {v:?}");
    }
    let pl = remap_placement(&design.netlist, &design.fixed, &nl);
    let aux = write_design(&nl, &pl, &run.out, &design.name)?;
    run.json(
        "edits.json",
        &json!({
            "design": design.name,
            "edits": a.edits,
            "seed": ec.seed,
            "weights": ec.weights,
            "log": log,
        }),
    )?;
    println!(
        "{}: {} edits, {} -> {} nodes, {} -> {} nets; wrote {}",
        design.name,
        log.len(),
        design.netlist.num_nodes(),
        nl.num_nodes(),
        design.netlist.nets.len(),
        nl.nets.len(),
        aux.display()
    );
    Ok(())
}

pub fn features(a: &FeaturesArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let run = setup("features", &a.common, Some(&design), None, json!({}))?;
    let fc = &run.cfg.env.features;
    let names = fc.channel_names();
    let wanted: Vec<usize> = if a.channel.is_empty() {
        (0..names.len()).collect()
    } else {
        a.channel
            .iter()
            .map(|c| {
                names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| config_err(format!("unknown channel {c:?}; known: {}", names.join(", "))))
            })
            .collect::<anyhow::Result<_>>()?
    };
    let mut pc = run.cfg.env.placer.clone();
    pc.rl_mode = RlMode::Off;
    let initial = init_placement(&design.netlist, &design.fixed, pc.init_jitter, pc.seed);
    let mut placer = Placer::new(design.netlist.clone(), pc, initial)?;
    while placer.state().iteration < a.iteration && !placer.is_done() {
        placer.iterate(&Control::Heuristic);
    }
    let raw = extract_features(placer.state(), placer.netlist(), &placer.placement(), fc);
    let grid: FeatureGrid = if a.normalize {
        baseline_stats(&design, &run.cfg, &a.stats)?.normalize(&raw)
    } else {
        raw
    };
    let mut summary = Vec::new();
    for &k in &wanted {
        let plane = grid.plane(k);
        let (w, h) = (grid.width, grid.height);
        pgm::write(&run.path(&format!("{}.pgm", names[k])), plane, w, h)?;
        let cells: Vec<_> = (0..h).flat_map(|y| (0..w).map(move |x| (y, x, plane[y * w + x]))).collect();
        run.csv(&format!("{}.csv", names[k]), &["y", "x", "value"], &cells)?;
        let min = plane.iter().copied().fold(f64::INFINITY, f64::min);
        let max = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = plane.iter().sum::<f64>() / plane.len() as f64;
        summary.push((names[k].clone(), min, max, mean));
    }
    run.csv("features.csv", &["channel", "min", "max", "mean"], &summary)?;
    println!(
        "{}: {} channels at iteration {}{}",
        design.name,
        wanted.len(),
        placer.state().iteration,
        if a.normalize { " (normalised)" } else { "" }
    );
    Ok(())
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

pub fn noise_demo(a: &NoiseDemoArgs) -> anyhow::Result<()> {
    let run = setup("noise-demo", &a.common, None, None, json!({}))?;
    let side = a.grid.unwrap_or(run.cfg.env.action_grid);
    if side == 0 {
        return Err(config_err("--grid must be at least 1"));
    }
    let ou = run.cfg.trainer.ou;
    let mut plan = match a.base {
        Some(b) if b == 0 || b > side => return Err(config_err(format!("--base must lie in 1..={side}"))),
        Some(b) => NoiseFieldPlan::with_base(ou, (b, b), (side, side), run.cfg.seed),
        None => NoiseFieldPlan::sample(ou, side, run.cfg.seed),
    };
    let mut rows = Vec::with_capacity(a.frames);
    for f in 0..a.frames {
        let field = plan.next_field();
        pgm::write(&run.path(&format!("frame_{f:04}.pgm")), &field, side, side)?;
        let (m, sd) = mean_sd(&field);
        let min = field.iter().copied().fold(f64::INFINITY, f64::min);
        let max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        rows.push((f, m, sd, min, max));
    }
    run.csv("noise.csv", &["frame", "mean", "std", "min", "max"], &rows)?;
    println!(
        "{} frames of {side}x{side} noise from a {}x{} base",
        a.frames, plan.base.0, plan.base.1
    );
    Ok(())
}

pub fn policy_dump(a: &PolicyDumpArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let run = setup("policy-dump", &a.common, Some(&design), saved_config(&a.checkpoint)?, json!({}))?;
    let stats = baseline_stats(&design, &run.cfg, &a.stats)?;
    match run.cfg.precision {
        Precision::F32 => policy_dump_typed::<f32>(&run, &design, stats, a),
        Precision::F64 => policy_dump_typed::<f64>(&run, &design, stats, a),
    }
}

fn policy_dump_typed<T: Real>(run: &Run, design: &Design<f64>, stats: Arc<FeatureStats>, a: &PolicyDumpArgs) -> anyhow::Result<()> {
    let agent = agent_for(&run.cfg);
    let params: Params<T> = load_params(&agent, &a.checkpoint)?;
    let mut env = PlacementEnv::new(design.clone(), run.cfg.env.clone(), Some(stats));
    let mut state = env.reset()?;
    let mut taken = 0;
    while taken < a.step {
        let pv = agent.policy_value_forward(&params, &state_tensor(&state))?;
        let mean: Vec<f64> = pv.policy.mean.iter().map(|v| v.as_f64()).collect();
        let s = env.step(&agent.action(&mean))?;
        state = s.state;
        taken += 1;
        if s.done {
            break;
        }
    }
    let pv = agent.policy_value_forward(&params, &state_tensor(&state))?;
    let mean: Vec<f64> = pv.policy.mean.iter().map(|v| v.as_f64()).collect();
    let std: Vec<f64> = pv.policy.std.iter().map(|v| v.as_f64()).collect();
    let action: Vec<f64> = match agent.space() {
        ActionSpace::DensityWeight => vec![agent.squash.cof(mean[0])],
        ActionSpace::Spatial => mean.iter().map(|&u| agent.squash.weight(u)).collect(),
    };
    let side = (mean.len() as f64).sqrt().round() as usize;
    pgm::write(&run.path("policy_mean.pgm"), &mean, side, side)?;
    pgm::write(&run.path("policy_std.pgm"), &std, side, side)?;
    pgm::write(&run.path("policy_action.pgm"), &action, side, side)?;
    let rows: Vec<_> = (0..mean.len()).map(|i| (i / side, i % side, mean[i], std[i], action[i])).collect();
    run.csv("policy.csv", &["y", "x", "mean", "std", "action"], &rows)?;
    run.json(
        "summary.json",
        &json!({
            "design": info(design),
            "action": agent.space(),
            "steps_taken": taken,
            "value": pv.value.as_f64(),
        }),
    )?;
    println!(
        "{}: {side}x{side} action grid after {taken} steps, value {:.4}",
        design.name,
        pv.value.as_f64()
    );
    Ok(())
}

pub const ROBUSTNESS_HEADER: [&str; 10] = [
    "edits",
    "repetition",
    "edit_seed",
    "nodes",
    "nets",
    "baseline_hpwl",
    "policy_hpwl",
    "improvement_pct",
    "retained",
    "valid",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub edits: usize,
    pub repetition: usize,
    pub edit_seed: u64,
    pub nodes: usize,
    pub nets: usize,
    pub baseline_hpwl: f64,
    pub policy_hpwl: f64,
    pub improvement_pct: f64,
    pub retained: f64,
    pub valid: bool,
}

pub fn robustness(a: &RobustnessArgs) -> anyhow::Result<()> {
    let design = load_design(&a.source, &a.synth)?;
    let run = setup("robustness", &a.common, Some(&design), saved_config(&a.checkpoint)?, json!({}))?;
    if a.repetitions == 0 || a.edit_counts.is_empty() {
        return Err(config_err("need at least one edit count and one repetition"));
    }
    let rows = match run.cfg.precision {
        Precision::F32 => robustness_rows::<f32>(&run.cfg, &design, a)?,
        Precision::F64 => robustness_rows::<f64>(&run.cfg, &design, a)?,
    };
    run.csv("robustness.csv", &ROBUSTNESS_HEADER, &rows)?;
    for r in &rows {
        println!(
            "edits {:>5} rep {}: improvement {:+.4}%, retained {:.4}{}",
            r.edits,
            r.repetition,
            r.improvement_pct,
            r.retained,
            if r.valid { "" } else { " (invalid)" }
        );
    }
    Ok(())
}

/// One row per (edit count, repetition). Retained fraction is the edited
/// design's improvement over its own baseline divided by the unedited one.
pub fn robustness_rows<T: Real>(cfg: &RunConfig, design: &Design<f64>, a: &RobustnessArgs) -> anyhow::Result<Vec<RobustnessRow>> {
    let agent = agent_for(cfg);
    let params: Params<T> = load_params(&agent, &a.checkpoint)?;
    let reference_stats = Arc::new(run_baseline(design, &cfg.env)?.stats);
    let (_, ref_hpwl) = greedy(design, cfg, &reference_stats, &agent, &params)?;
    let ref_improvement = improvement_reward(reference_stats.baseline_hpwl, ref_hpwl);
    let mut rows = Vec::new();
    for &edits in &a.edit_counts {
        for rep in 0..a.repetitions {
            let edit_seed = cfg.seed.wrapping_add(rep as u64);
            let mut row = RobustnessRow {
                edits,
                repetition: rep,
                edit_seed,
                nodes: design.netlist.num_nodes(),
                nets: design.netlist.nets.len(),
                baseline_hpwl: reference_stats.baseline_hpwl,
                policy_hpwl: ref_hpwl,
                improvement_pct: ref_improvement,
                retained: 1.0,
                valid: true,
            };
            if edits > 0 {
                let ec = EditConfig {
                    num_edits: edits,
                    seed: edit_seed,
                    weights: cfg.edit_weights,
                };
                let (nl, _) = modify_netlist(&design.netlist, &ec)?;
                let fixed: Placement<f64> = remap_placement(&design.netlist, &design.fixed, &nl);
                let edited = Design::new(format!("{}_e{edits}_r{rep}", design.name), nl, fixed);
                row.nodes = edited.netlist.num_nodes();
                row.nets = edited.netlist.nets.len();
                match run_baseline(&edited, &cfg.env) {
                    Ok(b) => {
                        let stats = Arc::new(b.stats);
                        let (_, h) = greedy(&edited, cfg, &stats, &agent, &params)?;
                        row.baseline_hpwl = stats.baseline_hpwl;
                        row.policy_hpwl = h;
                        row.improvement_pct = improvement_reward(stats.baseline_hpwl, h);
                        row.retained = row.improvement_pct / ref_improvement;
                    }
                    Err(e) => {
                        log::warn!("baseline on {} failed: {e}", edited.name);
                        row.baseline_hpwl = f64::NAN;
                        row.policy_hpwl = f64::NAN;
                        row.improvement_pct = f64::NAN;
                        row.retained = f64::NAN;
                        row.valid = false;
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn synth(a: &SynthArgs) -> anyhow::Result<()> {
    let run = setup("synth", &a.common, None, None, json!({}))?;
    let mut sc = SynthConfig::new(a.cells, run.cfg.seed);
    if let Some(u) = a.utilization {
        sc.utilization = u;
    }
    if let Some(t) = a.terminal_ratio {
        sc.terminal_ratio = t;
    }
    if let Some(n) = a.nets_per_cell {
        sc.nets_per_cell = n;
    }
    if a.cells == 0 || !(sc.utilization > 0.0 && sc.utilization < 1.0) || sc.terminal_ratio < 0.0 || sc.nets_per_cell < 0.0 {
        return Err(config_err("need cells >= 1, utilization in (0, 1) and non-negative ratios"));
    }
    let (nl, pl) = generate::<f64>(&sc);
    let name = a.name.clone().unwrap_or_else(|| format!("synth{}_s{}", sc.cells, sc.seed));
    let aux = write_design(&nl, &pl, &run.out, &name)?;
    println!(
        "{name}: {} nodes ({} movable), {} nets; wrote {}",
        nl.num_nodes(),
        nl.num_movable(),
        nl.nets.len(),
        aux.display()
    );
    Ok(())
}

