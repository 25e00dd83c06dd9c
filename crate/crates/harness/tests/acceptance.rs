// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance criteria. Each test prints one PASS/FAIL line.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use serde_json::json;

use common::{column, read_csv, report, run_in};
use jpgsim::{Command, Config, RunManifest};
use jpgsim_core::parallel::Strategy as Exec;
use jpgsim_core::quantum::{gaussian_form_factor, port_coupling, shapiro_voltage, JpgParams, QubitParams, PHI0};
use jpgsim_core::rcsj::{detect_locking_range, extract_pulses, iv_curve, optimize_drive_power, simulate_with, SimConfig};
use jpgsim_core::transmon::{
    axis_phase, delta_pulse_series, rabi_scan, Axis, DriveContext, NoiseModel, QutritState, RabiDrive,
};

fn config_with(patch: impl FnOnce(&mut serde_json::Value)) -> Config {
    let mut v = serde_json::to_value(Config::device_default()).unwrap();
    patch(&mut v);
    Config::from_json(&v.to_string()).unwrap()
}

fn check_passed(summary: &jpgsim::RunSummary, name: &str) -> (bool, String) {
    let c = summary
        .outcome
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check {name}"));
    (c.passed, c.detail.clone())
}

fn criterion_01_shapiro_quantization() -> bool {
    let jpg = JpgParams::reference_device();
    let sim = SimConfig::default();
    let ic = jpg.ic;
    let powers: Vec<f64> = (0..13).map(|i| (0.6 + 0.1 * i as f64) * ic).collect();
    let coarse: Vec<f64> = (0..41).map(|i| ic * i as f64 / 40.0).collect();
    let scan = optimize_drive_power(&jpg, &powers, &coarse, &sim, 1e-3, Exec::Parallel).unwrap();

    let started = Instant::now();
    let grid: Vec<f64> = (0..100).map(|i| 2.0 * ic * i as f64 / 99.0).collect();
    let driven = JpgParams { i_rf: scan.best_i_rf, ..jpg };
    let curve = iv_curve(&driven, &grid, &sim, Exec::Parallel).unwrap();
    let elapsed = started.elapsed();

    let v1 = shapiro_voltage(jpg.n_jj, jpg.f_d, 1).unwrap();
    let range = detect_locking_range(&curve, 1, 1e-3);
    let worst = range.map(|r| {
        curve
            .points
            .iter()
            .filter(|p| r.contains(p.i_b))
            .map(|p| (p.v_mean.unwrap() - v1).abs() / v1)
            .fold(0.0, f64::max)
    });
    let nominal_ok = (v1 - 3.138e-3).abs() < 1e-6;
    let passed = nominal_ok
        && range.is_some_and(|r| r.width > 0.0)
        && worst.is_some_and(|w| w <= 1e-3)
        && elapsed < Duration::from_secs(120);
    report(
        1,
        "shapiro quantization",
        passed,
        &format!(
            "V1 = {v1:.6e} V, step 1 over {} A, worst plateau error {:.1e}, 100-point I-V in {elapsed:.1?}",
            range.map_or("nothing".into(), |r| format!("{:.4e}..{:.4e}", r.i_min, r.i_max)),
            worst.unwrap_or(f64::NAN)
        ),
    );
    passed
}

fn locked_bias() -> impl Strategy<Value = f64> {
    let ic = JpgParams::reference_device().ic;
    (0.2 * ic)..(0.55 * ic)
}

fn criterion_02_pulse_area_invariant() -> bool {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 8,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let details = std::cell::RefCell::new(Vec::new());
    let result = runner.run(&locked_bias(), |i_b| {
        let jpg = JpgParams { i_b, ..JpgParams::reference_device() };
        let traj = simulate_with(&jpg, &SimConfig::default()).unwrap();
        let train = extract_pulses(&traj, jpg.n_jj).unwrap();
        let quantum = jpg.n_jj as f64 * PHI0;
        let worst = train.pulses.iter().map(|p| (p.area - quantum).abs() / quantum).fold(0.0, f64::max);
        prop_assert!(!train.pulses.is_empty() && worst <= 1e-3, "I_b = {i_b:e}: worst {worst:e}");
        details.borrow_mut().push(worst);
        Ok(())
    });
    let details = details.into_inner();
    let worst = details.iter().copied().fold(0.0, f64::max);
    let passed = result.is_ok() && details.len() >= 5;
    let detail = match &result {
        Ok(()) => format!("{} bias points, worst relative area error {worst:.2e}", details.len()),
        Err(e) => e.to_string(),
    };
    report(2, "pulse area invariant", passed, &detail);
    passed
}

fn criterion_03_digital_rabi() -> bool {
    let q = QubitParams::reference_device();
    let ctx = DriveContext::new(q, 1.0, NoiseModel::disabled());
    let started = Instant::now();
    let drive = RabiDrive::Delta {
        delta_theta: PI / 187.0,
        k: 2,
        phase: axis_phase(Axis::X),
    };
    let scan = rabi_scan(&drive, 400, &ctx).unwrap();
    let elapsed = started.elapsed();
    let nu = scan.nu_pi_pulses().unwrap();
    let gate = nu as f64 * 2.0 * q.period();
    let passed = (186..=188).contains(&nu)
        && (gate - 61.6e-9).abs() < 0.1e-9
        && (gate * 1e9).round() == 62.0
        && elapsed < Duration::from_secs(10);
    report(
        3,
        "digital rabi",
        passed,
        &format!("ν_π = {:?} ({nu}), π gate {:.2} ns, {elapsed:.1?}", scan.nu_pi, gate * 1e9),
    );
    passed
}

fn criterion_04_oracle_equivalence() -> bool {
    let q = QubitParams::reference_device();
    let jpg = JpgParams::reference_device();
    let coupling = port_coupling(jpg.c_c, &q).unwrap();
    let ctx = DriveContext::new(q, coupling, NoiseModel::disabled());
    let delta_theta = PI / 187.0;
    let sigma_n = 0.01;
    let nu_max = 2 * 187;
    let started = Instant::now();
    let train = RabiDrive::Train {
        k: 2,
        sigma: sigma_n * q.period(),
        area: delta_theta / (2.0 * coupling),
        phase: axis_phase(Axis::X),
    };
    let full = rabi_scan(&train, nu_max, &ctx).unwrap();
    let elapsed = started.elapsed();
    let effective = delta_theta * gaussian_form_factor(sigma_n);
    let oracle = delta_pulse_series(&QutritState::ground(), effective, 2, nu_max, axis_phase(Axis::X), &q);
    let worst = full
        .p1
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b[1]).abs())
        .fold(0.0, f64::max);
    let passed = full.p1.len() == oracle.len() && worst <= 1e-3 && elapsed < Duration::from_secs(300);
    report(
        4,
        "oracle equivalence",
        passed,
        &format!("max |Δρ_ee| = {worst:.2e} over ν ≤ {nu_max}, {elapsed:.1?}"),
    );
    passed
}

fn criterion_05_leakage() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let s = run_in(dir.path(), Command::LeakageSweep, &Config::device_default(), 1);
    let elapsed = started.elapsed();
    let (flat, flat_d) = check_passed(&s, "leakage_flat_band");
    let (tail, tail_d) = check_passed(&s, "leakage_decreasing_tail");
    let (trend, trend_d) = check_passed(&s, "leakage_alpha_trend");
    let passed = flat && tail && trend && elapsed < Duration::from_secs(1200);
    report(
        5,
        "leakage",
        passed,
        &format!("σ_n ≤ 0.1 {flat_d}; σ_n > 0.1 {tail_d}; α trend {trend_d}; {elapsed:.1?}"),
    );
    passed
}

fn criterion_06_rb_machinery() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let ideal = config_with(|v| v["experiment"]["rb"]["channel"] = json!("ideal"));
    let s = run_in(&dir.path().join("ideal"), Command::Rb, &ideal, 3);
    let (_, rows) = read_csv(&s.out_dir.join("rb.csv"));
    let unit_dev = column(&rows, 1).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let unit = unit_dev <= 1e-12;

    let p = 0.99;
    let depol = config_with(|v| {
        v["experiment"]["rb"]["channel"] = json!("depolarizing");
        v["experiment"]["rb"]["depolarizing_p"] = json!(p);
        v["experiment"]["rb"]["shots"] = json!(1000);
    });
    let s = run_in(&dir.path().join("depol"), Command::Rb, &depol, 3);
    let (_, rows) = read_csv(&s.out_dir.join("rb_fit.csv"));
    let (p_fit, r_err) = (rows[0][1].parse::<f64>().unwrap(), rows[0][4].parse::<f64>().unwrap());
    let p_err = 2.0 * r_err;
    let recovered = (p_fit - p).abs() <= 2.0 * p_err && p_err > 0.0;
    let elapsed = started.elapsed();
    let passed = unit && recovered && elapsed < Duration::from_secs(60);
    report(
        6,
        "rb machinery",
        passed,
        &format!("ideal survival deviation {unit_dev:.1e}; p = {p_fit:.5} ± {p_err:.1e} vs {p}; {elapsed:.1?}"),
    );
    passed
}

fn criterion_07_coherence_limited_rb() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let s = run_in(dir.path(), Command::Rb, &Config::device_default(), 1);
    let elapsed = started.elapsed();
    let (ok, ratio) = check_passed(&s, "rb_coherence_ratio");
    let passed = ok && elapsed < Duration::from_secs(1800);
    report(7, "coherence-limited rb", passed, &format!("r / limit = {ratio}, {elapsed:.1?}"));
    passed
}

fn criterion_08_irb_self_consistency() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let cfg = config_with(|v| {
        let rb = &mut v["experiment"]["rb"];
        rb["channel"] = json!("depolarizing");
        rb["depolarizing_p"] = json!(0.99);
        rb["shots"] = json!(1000);
        v["experiment"]["irb"] = json!({"gates": ["I", "X"], "inject": {"gate": "X", "p": 0.995}});
    });
    let s = run_in(dir.path(), Command::Irb, &cfg, 5);
    let elapsed = started.elapsed();
    let (zero, zero_d) = check_passed(&s, "irb_I_zero");
    let (inj, inj_d) = check_passed(&s, "irb_X_injected");
    let passed = zero && inj && elapsed < Duration::from_secs(1800);
    report(8, "irb self-consistency", passed, &format!("identity {zero_d}; injected {inj_d}; {elapsed:.1?}"));
    passed
}

fn criterion_09_decay_round_trip() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let mut failed = Vec::new();
    for (cmd, label) in [(Command::T1, "t1"), (Command::Ramsey, "ramsey")] {
        let s = run_in(&dir.path().join(label), cmd, &Config::device_default(), 11);
        for suffix in ["jpg_noiseless", "resonant_noiseless", "jpg_shots", "resonant_shots", "arms_agree"] {
            let (ok, detail) = check_passed(&s, &format!("{label}_{suffix}"));
            if !ok {
                failed.push(format!("{label}_{suffix}: {detail}"));
            }
        }
    }
    let elapsed = started.elapsed();
    let passed = failed.is_empty() && elapsed < Duration::from_secs(900);
    report(9, "t1/ramsey round trip", passed, &format!("failures {failed:?}, {elapsed:.1?}"));
    passed
}

fn criterion_10_determinism() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(|v| {
        v["experiment"]["t1"]["repetitions"] = json!(10);
        v["experiment"]["rb"]["channel"] = json!("depolarizing");
        v["experiment"]["rb"]["shots"] = json!(500);
    });
    let mut identical = true;
    let mut compared = 0;
    for (cmd, label) in [(Command::T1, "t1"), (Command::Rb, "rb")] {
        let a = run_in(&dir.path().join(format!("{label}_a")), cmd, &cfg, 42);
        let b = run_in(&dir.path().join(format!("{label}_b")), cmd, &cfg, 42);
        let (ma, mb) = (RunManifest::read(&a.out_dir).unwrap(), RunManifest::read(&b.out_dir).unwrap());
        identical &= ma.files == mb.files && ma.config_sha256 == mb.config_sha256;
        for f in ma.files.iter().filter(|f| f.name.ends_with(".csv")) {
            let bytes_a = std::fs::read(a.out_dir.join(&f.name)).unwrap();
            let bytes_b = std::fs::read(b.out_dir.join(&f.name)).unwrap();
            identical &= bytes_a == bytes_b;
            compared += 1;
        }
    }
    let passed = identical && compared >= 4;
    report(10, "determinism", passed, &format!("{compared} CSV files compared by manifest checksum and bytes"));
    passed
}

fn main() {
    let criteria: [(u32, fn() -> bool); 10] = [
        (1, criterion_01_shapiro_quantization),
        (2, criterion_02_pulse_area_invariant),
        (3, criterion_03_digital_rabi),
        (4, criterion_04_oracle_equivalence),
        (5, criterion_05_leakage),
        (6, criterion_06_rb_machinery),
        (7, criterion_07_coherence_limited_rb),
        (8, criterion_08_irb_self_consistency),
        (9, criterion_09_decay_round_trip),
        (10, criterion_10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| id.to_string() == *p) {
            continue;
        }
        match std::panic::catch_unwind(f) {
            Ok(true) => {}
            Ok(false) => failed += 1,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                report(id, "panicked", false, &msg);
                failed += 1;
            }
        }
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
