// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use std::path::Path;
use std::process::Command as Process;

use serde_json::{json, Value};

use common::{read_csv, write_config};
use jpgsim::config::OUT_DIR_ENV;
use jpgsim::{Config, RunManifest};

/// Default device with every sweep shrunk to run in seconds.
fn small() -> Value {
    let mut v = serde_json::to_value(Config::device_default()).unwrap();
    let e = &mut v["experiment"];
    e["iv"]["bias_ic"] = json!({"start": 0.0, "stop": 1.0, "points": 11});
    e["locking"]["i_rf_ic"] = json!({"start": 1.2, "stop": 1.3, "points": 2});
    e["locking"]["bias_ic"] = json!({"start": 0.0, "stop": 1.0, "points": 21});
    e["calibrate"]["bias_points"] = json!(3);
    e["rabi_stability"]["duration_s"] = json!(1e-6);
    e["rabi_stability"]["window_oscillations"] = json!(1.0);
    e["t1"]["repetitions"] = json!(3);
    e["ramsey"]["repetitions"] = json!(3);
    e["ramsey"]["delays_s"] = json!({"start": 0.0, "stop": 20e-6, "points": 41});
    e["rb"]["channel"] = json!("delta");
    e["rb"]["lengths"] = json!([1, 4, 16, 64]);
    e["rb"]["n_seq"] = json!(4);
    e["irb"]["gates"] = json!(["X"]);
    e["leakage"]["alpha_frac"] = json!([0.033, 0.05]);
    e["leakage"]["sigma_n"] = json!([0.0, 0.05]);
    v
}

fn write(dir: &Path, v: &Value) -> std::path::PathBuf {
    write_config(&Config::from_json(&v.to_string()).unwrap(), dir)
}

fn jpgsim(args: &[&str], envs: &[(&str, &Path)]) -> (i32, String) {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_jpgsim"));
    cmd.args(args).env_remove(OUT_DIR_ENV);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn run_command(dir: &Path, name: &str, cfg: &Path) -> std::path::PathBuf {
    let out = dir.join(name);
    let (code, err) = jpgsim(
        &[name, "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(code, 0, "{name}: {err}");
    out
}

/// Command, then each file it writes with its expected columns.
type Schema<'a> = &'a [(&'a str, &'a [(&'a str, &'a [&'a str])])];

fn header(path: &Path) -> Vec<String> {
    read_csv(path).0
}

#[test]
fn csv_headers_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &small());
    let expected: Schema = &[
        ("iv", &[("iv.csv", &["i_b_A", "v_mean_V"])]),
        ("locking", &[("locking.csv", &["i_rf_A", "width_A", "i_min_A", "i_max_A"])]),
        (
            "calibrate",
            &[
                ("pulses.csv", &["t_center_s", "area_Vs", "sigma_s"]),
                ("waveform.csv", &["t_s", "v_V"]),
            ],
        ),
        (
            "rabi",
            &[
                ("rabi.csv", &["nu", "p1"]),
                ("fit_report.csv", &["model", "param_name", "value", "stderr", "converged"]),
            ],
        ),
        ("t1", &[("t1.csv", &["delay_s", "p1"]), ("t1_resonant.csv", &["delay_s", "p1"])]),
        ("ramsey", &[("ramsey.csv", &["delay_s", "p1"])]),
        (
            "rb",
            &[
                ("rb.csv", &["m", "survival_mean", "survival_stderr", "n_seq"]),
                ("rb_fit.csv", &["a", "p", "b", "r", "r_err"]),
            ],
        ),
        ("irb", &[("irb.csv", &["gate_name", "p_ref", "p_int", "r_gate", "r_err"])]),
        ("leakage-sweep", &[("leakage.csv", &["alpha_frac", "sigma_n", "rho_ff", "nu_pi"])]),
    ];
    for (cmd, files) in expected {
        let out = run_command(dir.path(), cmd, &cfg);
        for (file, cols) in *files {
            assert_eq!(header(&out.join(file)), *cols, "{cmd}/{file}");
        }
        let manifest = RunManifest::read(&out).unwrap();
        for f in &manifest.files {
            let bytes = std::fs::read(out.join(&f.name)).unwrap();
            assert_eq!(jpgsim::artifacts::sha256_hex(&bytes), f.sha256, "{cmd}/{}", f.name);
        }
        assert!(out.join("report.txt").is_file());
    }
}

#[test]
fn rabi_stability_runs_on_a_short_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &small());
    let out = run_command(dir.path(), "rabi-stability", &cfg);
    let (h, rows) = read_csv(&out.join("rabi_stability.csv"));
    assert_eq!(h[0], "t_center_s");
    assert!(!rows.is_empty());
}

#[test]
fn leakage_rows_are_alpha_major() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &small());
    let out = run_command(dir.path(), "leakage-sweep", &cfg);
    let (_, rows) = read_csv(&out.join("leakage.csv"));
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(keys, vec![(0.033, 0.0), (0.033, 0.05), (0.05, 0.0), (0.05, 0.05)]);
}

#[test]
fn plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &small());
    let out = dir.path().join("o");
    let (code, err) = jpgsim(&["iv", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--plot"], &[]);
    assert_eq!(code, 0, "{err}");
    let svg = std::fs::read_to_string(out.join("iv.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(RunManifest::read(&out).unwrap().files.iter().any(|f| f.name == "iv.svg"));
}

#[test]
fn environment_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &small());
    let target = dir.path().join("from_env");
    let (code, err) = jpgsim(&["iv", "--config", cfg.to_str().unwrap()], &[(OUT_DIR_ENV, &target)]);
    assert_eq!(code, 0, "{err}");
    assert!(target.join("iv.csv").is_file());

    let explicit = dir.path().join("explicit");
    let (code, _) = jpgsim(
        &["iv", "--config", cfg.to_str().unwrap(), "--out", explicit.to_str().unwrap()],
        &[(OUT_DIR_ENV, &target)],
    );
    assert_eq!(code, 0);
    assert!(explicit.join("iv.csv").is_file());
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(jpgsim(&["warp", "--config", "x.json", "--out", o], &[]).0, 2);
    assert_eq!(jpgsim(&["iv", "--out", o], &[]).0, 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(jpgsim(&["iv", "--config", missing.to_str().unwrap(), "--out", o], &[]).0, 2);

    let mut v = small();
    v["experiment"]["rb"]["bogus"] = json!(1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let (code, err) = jpgsim(&["iv", "--config", bad.to_str().unwrap(), "--out", o], &[]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"), "{err}");

    let mut v = small();
    v["device"]["qubit"]["t2_star"] = json!(1.0);
    std::fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(jpgsim(&["iv", "--config", bad.to_str().unwrap(), "--out", o], &[]).0, 2);
    assert!(!out.exists());
}

#[test]
fn locking_failure_names_the_stage_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["experiment"]["locking"]["i_rf_ic"] = json!({"start": 0.0, "stop": 0.0, "points": 1});
    let cfg = write(dir.path(), &v);
    let out = dir.path().join("o");
    let (code, err) = jpgsim(&["locking", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("locking"), "{err}");
}

#[test]
fn failed_checks_exit_4_only_with_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["experiment"]["checks"]["leakage_flat_band"] = json!([0.0, 1e-9]);
    let cfg = write(dir.path(), &v);
    let c = cfg.to_str().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(jpgsim(&["leakage-sweep", "--config", c, "--out", o], &[]).0, 0);
    assert_eq!(jpgsim(&["leakage-sweep", "--config", c, "--out", o, "--check"], &[]).0, 4);
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("[FAIL] leakage_flat_band"));
}

#[test]
fn ideal_rb_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["experiment"]["rb"]["channel"] = json!("ideal");
    let cfg = write(dir.path(), &v);
    let out = run_command(dir.path(), "rb", &cfg);
    let (_, rows) = read_csv(&out.join("rb_fit.csv"));
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn seeds_change_sampled_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &small());
    let c = cfg.to_str().unwrap();
    let hash = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        assert_eq!(jpgsim(&["t1", "--config", c, "--seed", seed, "--out", out.to_str().unwrap()], &[]).0, 0);
        RunManifest::read(&out).unwrap().files
    };
    assert_ne!(hash("1"), hash("2"));
}

#[test]
fn shipped_config_is_the_built_in_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let (cfg, _) = Config::load(&path).unwrap();
    assert_eq!(cfg, Config::device_default());
}
