// SPDX-License-Identifier: Apache-2.0

//! The `placerl` command line tool.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use args::{Cli, Command};
use error::classify;

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Place(a) => commands::place(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Edit(a) => commands::edit(a),
        Command::Features(a) => commands::features(a),
        Command::NoiseDemo(a) => commands::noise_demo(a),
        Command::PolicyDump(a) => commands::policy_dump(a),
        Command::Robustness(a) => commands::robustness(a),
        Command::Synth(a) => commands::synth(a),
    }
}

/// Runs the parsed command and maps failures to exit codes.
pub fn exit_code(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            classify(&e) as i32
        }
    }
}
