// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use jpgsim::{run, Command, Config, RunOptions, RunSummary};
use jpgsim_core::parallel::Strategy;

pub fn write_config(cfg: &Config, dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

/// Runs `cmd` with `cfg` into `<dir>/out`.
pub fn run_in(dir: &Path, cmd: Command, cfg: &Config, seed: u64) -> RunSummary {
    let config = write_config(cfg, dir);
    run(&RunOptions {
        command: cmd,
        config,
        seed,
        out: Some(dir.join("out")),
        check: true,
        plot: false,
        strategy: Strategy::Parallel,
    })
    .unwrap_or_else(|e| panic!("{} failed: {e}", cmd.name()))
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

pub fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

pub fn report(id: u32, name: &str, passed: bool, detail: &str) {
    println!("criterion {id:>2} {name}: {} ({detail})", if passed { "PASS" } else { "FAIL" });
}
