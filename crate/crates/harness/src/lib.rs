// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Batch experiment runner: config in, CSV/SVG artifacts and a manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod pipeline;
pub mod plot;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use jpgsim_core::parallel::Strategy;

pub use artifacts::{Outcome, RunManifest};
pub use commands::Command;
pub use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Simulation {
        stage: &'static str,
        source: jpgsim_core::Error,
    },
    #[error("output: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 2,
            HarnessError::Simulation { .. } | HarnessError::Io(_) => 3,
        }
    }
}

pub const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub check: bool,
    pub plot: bool,
    pub strategy: Strategy,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: RunManifest,
    pub report: Option<String>,
}

impl RunSummary {
    /// Exit status for the run: 4 when `--check` was given and a band failed.
    pub fn exit_code(&self, check: bool) -> u8 {
        if check && !self.outcome.all_passed() {
            EXIT_CHECK_FAILED
        } else {
            0
        }
    }
}

/// Loads and validates the config, runs the command, then writes every
/// artifact, the report and the manifest.
pub fn run(opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let started = Instant::now();
    let (cfg, cfg_bytes) = Config::load(&opts.config)?;
    let out_dir = cfg.output_dir(opts.out.as_deref());
    let cx = commands::Context {
        cfg: &cfg,
        seed: opts.seed,
        plot: opts.plot || cfg.output.plot,
        strategy: opts.strategy,
    };
    let outcome = commands::run(opts.command, &cx)?;
    artifacts::write_all(&out_dir, &outcome.files)?;
    let report = if cfg.output.report {
        let text = report::emit_report(&out_dir, &outcome)?;
        write_file(&out_dir.join(report::REPORT_NAME), text.as_bytes())?;
        Some(text)
    } else {
        None
    };
    let manifest = RunManifest::new(&cfg_bytes, opts.seed, &outcome.files, started.elapsed().as_secs_f64());
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join(artifacts::MANIFEST_NAME), &json)?;
    Ok(RunSummary {
        out_dir,
        outcome,
        manifest,
        report,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}
