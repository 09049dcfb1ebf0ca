// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "placerl", version, about = "Analytical global placement with a learned schedule controller")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the unassisted placer and write the final placement and per-iteration stats.
    Place(PlaceArgs),
    /// Run the baseline and persist the feature statistics used for normalisation.
    Baseline(BaselineArgs),
    /// Train a controller policy on one design.
    Train(TrainArgs),
    /// Replay a checkpoint greedily and compare against the baseline.
    Eval(EvalArgs),
    /// Apply random netlist edits and write the mutated design.
    Edit(EditArgs),
    /// Dump state feature channels as PGM and CSV.
    Features(FeaturesArgs),
    /// Write a sequence of exploration noise fields as PGM frames.
    NoiseDemo(NoiseDemoArgs),
    /// Render the policy's action grid for one state.
    PolicyDump(PolicyDumpArgs),
    /// Measure how much of a policy's improvement survives netlist edits.
    Robustness(RobustnessArgs),
    /// Write a synthetic Bookshelf design.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set env.placer.grid_dims=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct DesignSource {
    /// Bookshelf `.aux` file.
    #[arg(long, value_name = "AUX")]
    pub design: Option<PathBuf>,
    /// Generate a synthetic design with this many movable cells instead.
    #[arg(long, value_name = "CELLS")]
    pub synth: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthSeed {
    /// Seed of the synthetic design (independent of --seed).
    #[arg(long, default_value_t = 1)]
    pub synth_seed: u64,
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
    /// Also write density, potential and field-magnitude maps.
    #[arg(long)]
    pub dump_maps: bool,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArg {
    /// Baseline statistics from `placerl baseline`; computed when omitted.
    #[arg(long, value_name = "JSON")]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub stats: StatsArg,
    /// `density` or `spatial`.
    #[arg(long)]
    pub action: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Environment step budget.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Start from these parameters instead of a fresh initialisation.
    #[arg(long, value_name = "CKPT")]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub stats: StatsArg,
    #[arg(long, value_name = "CKPT")]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    /// Bookshelf `.aux` file to edit.
    #[arg(long = "in", value_name = "AUX")]
    pub input: PathBuf,
    #[arg(long)]
    pub edits: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub stats: StatsArg,
    /// Placer iterations to run before extracting.
    #[arg(long, default_value_t = 0)]
    pub iteration: usize,
    /// Channel to dump (repeatable); all channels when omitted.
    #[arg(long)]
    pub channel: Vec<String>,
    /// Normalise with the baseline statistics.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct NoiseDemoArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
    /// Action grid side; defaults to `env.action_grid`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Base resolution side; drawn at random when omitted.
    #[arg(long)]
    pub base: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PolicyDumpArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub stats: StatsArg,
    #[arg(long, value_name = "CKPT")]
    pub checkpoint: PathBuf,
    /// Greedy environment steps to take before rendering.
    #[arg(long, default_value_t = 0)]
    pub step: usize,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub synth: SynthSeed,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "CKPT")]
    pub checkpoint: PathBuf,
    /// Comma-separated edit counts.
    #[arg(long, value_delimiter = ',', default_value = "0,100,500,1000")]
    pub edit_counts: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub cells: usize,
    #[command(flatten)]
    pub common: Common,
    /// Design name; `synth<cells>_s<seed>` by default.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub utilization: Option<f64>,
    #[arg(long)]
    pub terminal_ratio: Option<f64>,
    #[arg(long)]
    pub nets_per_cell: Option<f64>,
}
