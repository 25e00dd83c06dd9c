// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use jpgsim::{run, Command, RunOptions};
use jpgsim_core::parallel::Strategy;

/// Simulate Josephson pulse generator qubit-control experiments.
#[derive(Debug, Parser)]
#[command(name = "jpgsim", version)]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; overrides the environment and the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 when a result falls outside its acceptance band.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    plot: bool,
    /// Run every sweep on the calling thread.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        command: cli.command,
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        check: cli.check,
        plot: cli.plot,
        strategy: if cli.sequential { Strategy::Sequential } else { Strategy::Parallel },
    };
    match run(&opts) {
        Ok(summary) => {
            if let Some(r) = &summary.report {
                print!("{r}");
            }
            eprintln!("wrote {} files to {}", summary.manifest.files.len() + 1, summary.out_dir.display());
            ExitCode::from(summary.exit_code(opts.check))
        }
        Err(e) => {
            eprintln!("jpgsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
