// SPDX-License-Identifier: Apache-2.0

use clap::Parser;
use placerl_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    std::process::exit(placerl_cli::exit_code(&cli));
}
