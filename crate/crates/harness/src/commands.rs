// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use clap::ValueEnum;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jpgsim_core::fit::{gaussian_histogram_stats, FitModel, FitResult};
use jpgsim_core::parallel::Strategy;
use jpgsim_core::quantum::{coherence_limit_error, shapiro_voltage, tip_angle_per_pulse, JpgParams};
use jpgsim_core::rb::{
    depolarizing_superop, embed, generate_sequence, primitive_gate, run_irb, run_rb, verify_cache, CliffordChannels,
    CliffordGroup, GateLayout, InterleavedGate, PrimitiveChannels, RbConfig, RbResult,
};
use jpgsim_core::rcsj::{detect_locking_range, iv_curve};
use jpgsim_core::transmon::{
    axis_phase, leakage_sweep, rabi_scan, rabi_stability, ramsey_experiment, t1_experiment, unitary_superop, Axis,
    DecayExperiment, DriveContext, LeakagePoint, LeakageSetup, PulseSpec, RabiDrive,
};

use crate::artifacts::{csv_bytes, fit_rows, num, opt_num, Outcome, FIT_REPORT_HEADER};
use crate::config::{Config, GateDrive, RabiKind, RbChannelKind};
use crate::pipeline::{self, JpgGate};
use crate::plot::{line_chart, Series};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Iv,
    Locking,
    Calibrate,
    Rabi,
    RabiStability,
    T1,
    Ramsey,
    Rb,
    Irb,
    LeakageSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Iv => "iv",
            Command::Locking => "locking",
            Command::Calibrate => "calibrate",
            Command::Rabi => "rabi",
            Command::RabiStability => "rabi-stability",
            Command::T1 => "t1",
            Command::Ramsey => "ramsey",
            Command::Rb => "rb",
            Command::Irb => "irb",
            Command::LeakageSweep => "leakage-sweep",
        }
    }
}

pub struct Context<'a> {
    pub cfg: &'a Config,
    pub seed: u64,
    pub plot: bool,
    pub strategy: Strategy,
}

fn sim<T>(stage: &'static str, r: jpgsim_core::Result<T>) -> Result<T, HarnessError> {
    r.map_err(|source| HarnessError::Simulation { stage, source })
}

/// Independent seed for stream `tag`, item `index`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

pub fn run(cmd: Command, cx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(cmd.name());
    match cmd {
        Command::Iv => iv(cx, &mut out)?,
        Command::Locking => locking(cx, &mut out)?,
        Command::Calibrate => calibrate(cx, &mut out)?,
        Command::Rabi => rabi(cx, &mut out)?,
        Command::RabiStability => stability(cx, &mut out)?,
        Command::T1 => decay(cx, &mut out, Decay::T1)?,
        Command::Ramsey => decay(cx, &mut out, Decay::Ramsey)?,
        Command::Rb => rb(cx, &mut out)?,
        Command::Irb => irb(cx, &mut out)?,
        Command::LeakageSweep => leakage(cx, &mut out)?,
    }
    Ok(out)
}

fn plot(out: &mut Outcome, cx: &Context, name: &str, title: &str, axes: (&str, &str), series: &[Series]) {
    if cx.plot {
        out.add_file(name, line_chart(title, axes.0, axes.1, series).into_bytes());
    }
}

fn iv(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let d = &cx.cfg.device;
    let e = &cx.cfg.experiment.iv;
    let jpg = JpgParams {
        i_rf: e.i_rf_ic.map(|v| v * d.jpg.ic).unwrap_or(d.jpg.i_rf),
        ..d.jpg
    };
    let bias: Vec<f64> = e.bias_ic.values().iter().map(|v| v * jpg.ic).collect();
    let curve = sim("iv", iv_curve(&jpg, &bias, &d.rcsj, cx.strategy))?;
    let rows: Vec<Vec<String>> = curve.points.iter().map(|p| vec![num(p.i_b), opt_num(p.v_mean)]).collect();
    out.add_file("iv.csv", csv_bytes(&["i_b_A", "v_mean_V"], &rows));
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.i_b, p.v_mean.unwrap_or(f64::NAN))).collect();
    plot(out, cx, "iv.svg", "Array I-V", ("bias (A)", "mean voltage (V)"), &[Series { label: "V", points: pts }]);

    let expected = sim("iv", shapiro_voltage(jpg.n_jj, jpg.f_d, 1))?;
    out.note(format!("first-step voltage N·Φ0·f_d = {:.6e} V", expected));
    match detect_locking_range(&curve, 1, cx.cfg.experiment.locking.rel_tol) {
        Some(r) => {
            let v: Vec<f64> = curve
                .points
                .iter()
                .filter(|p| r.contains(p.i_b))
                .filter_map(|p| p.v_mean)
                .collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let rel = (mean - expected).abs() / expected;
            out.note(format!(
                "step 1: {:.4e}..{:.4e} A (width {:.4e} A), plateau {:.6e} V",
                r.i_min, r.i_max, r.width, mean
            ));
            out.check("shapiro_step", rel <= cx.cfg.experiment.checks.shapiro_rel_tol, format!("relative error {rel:.2e}"));
        }
        None => {
            out.note("no first-step locking range at this drive");
            out.check("shapiro_step", false, "no locking range");
        }
    }
    Ok(())
}

fn locking(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let d = &cx.cfg.device;
    let e = &cx.cfg.experiment.locking;
    let powers: Vec<f64> = e.i_rf_ic.values().iter().map(|v| v * d.jpg.ic).collect();
    let bias: Vec<f64> = e.bias_ic.values().iter().map(|v| v * d.jpg.ic).collect();
    let scan = sim(
        "locking",
        jpgsim_core::rcsj::optimize_drive_power(&d.jpg, &powers, &bias, &d.rcsj, e.rel_tol, cx.strategy),
    )?;
    let rows: Vec<Vec<String>> = scan
        .entries
        .iter()
        .map(|(i_rf, r)| match r {
            Some(r) => vec![num(*i_rf), num(r.width), num(r.i_min), num(r.i_max)],
            None => vec![num(*i_rf), num(0.0), "nan".into(), "nan".into()],
        })
        .collect();
    out.add_file("locking.csv", csv_bytes(&["i_rf_A", "width_A", "i_min_A", "i_max_A"], &rows));
    let pts = scan.entries.iter().map(|(i, r)| (*i, r.map_or(0.0, |r| r.width))).collect();
    plot(out, cx, "locking.svg", "Locking range", ("drive amplitude (A)", "width (A)"), &[Series { label: "width", points: pts }]);
    let r = scan.best_range;
    out.note(format!(
        "best drive {:.4e} A ({:.3} Ic): range {:.4e}..{:.4e} A, width {:.4e} A",
        scan.best_i_rf,
        scan.best_i_rf / d.jpg.ic,
        r.i_min,
        r.i_max,
        r.width
    ));
    out.check("locking_nonempty", r.width > 0.0, format!("width {:.3e} A", r.width));
    Ok(())
}

fn pulses_csv(gate: &JpgGate) -> Vec<u8> {
    let rows: Vec<Vec<String>> = gate
        .pulses
        .pulses
        .iter()
        .map(|p| vec![num(p.t_center), num(p.area * p.sign as f64), num(p.sigma)])
        .collect();
    csv_bytes(&["t_center_s", "area_Vs", "sigma_s"], &rows)
}

fn calibrate(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let (rec, gate) = pipeline::calibrate(cx.cfg, cx.strategy)?;
    let rows: Vec<Vec<String>> = rec
        .table
        .iter()
        .map(|r| {
            vec![
                num(r.i_b),
                num(r.sigma),
                num(r.area),
                opt_num(r.nu_pi_fit),
                r.nu_pi.map_or("nan".into(), |v| v.to_string()),
            ]
        })
        .collect();
    out.add_file("calibration.csv", csv_bytes(&["i_b_A", "sigma_s", "area_Vs", "nu_pi_fit", "nu_pi"], &rows));
    out.add_file("pulses.csv", pulses_csv(&gate));
    let step = gate.sigma / 10.0;
    let wave: Vec<Vec<String>> = gate.pulses.waveform(step).iter().map(|(t, v)| vec![num(*t), num(*v)]).collect();
    out.add_file("waveform.csv", csv_bytes(&["t_s", "v_V"], &wave));
    let json = serde_json::to_vec_pretty(&rec).expect("record serializes");
    out.add_file("calibration.json", json);
    let pts = rec.table.iter().map(|r| (r.i_b, r.nu_pi_fit.unwrap_or(f64::NAN))).collect();
    plot(out, cx, "calibration.svg", "ν_π across the locking range", ("bias (A)", "ν_π"), &[Series { label: "ν_π", points: pts }]);

    out.note(format!("best drive amplitude {:.4e} A", rec.best_i_rf));
    out.note(format!(
        "locking range {:.4e}..{:.4e} A (width {:.4e} A)",
        rec.locking_range.i_min, rec.locking_range.i_max, rec.locking_range.width
    ));
    out.note(format!("extra attenuation {:.3} dB", rec.extra_attenuation_db));
    out.note(format!(
        "chosen bias {:.4e} A: σ = {:.3} ps, ν_π = {}",
        rec.chosen_i_b,
        gate.sigma * 1e12,
        rec.nu_pi
    ));
    if let Some(target) = cx.cfg.device.target_nu_pi {
        let dev = (rec.nu_pi as f64 - target as f64).abs();
        out.check("calibrated_nu_pi", dev <= cx.cfg.experiment.checks.nu_pi_tol, format!("ν_π {} vs {target}", rec.nu_pi));
    }
    Ok(())
}

fn noisy_ctx(cx: &Context, gate: &JpgGate) -> DriveContext {
    DriveContext::new(cx.cfg.device.qubit, gate.coupling, cx.cfg.noise())
}

fn rabi(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let cfg = cx.cfg;
    let gate = pipeline::device_gate(cfg)?;
    let k = cfg.device.jpg.subharmonic_k;
    let drive = match cfg.experiment.rabi.drive {
        RabiKind::Jpg => gate.rabi_drive(k),
        RabiKind::Delta => {
            let jpg = JpgParams {
                extra_attenuation_db: gate.extra_attenuation_db,
                ..cfg.device.jpg
            };
            RabiDrive::Delta {
                delta_theta: sim("rabi", tip_angle_per_pulse(&jpg, &cfg.device.qubit))?,
                k,
                phase: axis_phase(Axis::X),
            }
        }
    };
    let scan = sim("rabi", rabi_scan(&drive, cfg.experiment.rabi.nu_max, &noisy_ctx(cx, &gate)))?;
    let rows: Vec<Vec<String>> = scan.nu.iter().zip(&scan.p1).map(|(n, p)| vec![n.to_string(), num(*p)]).collect();
    out.add_file("rabi.csv", csv_bytes(&["nu", "p1"], &rows));
    let mut fits = Vec::new();
    if let Some(f) = &scan.fit {
        fits.extend(fit_rows("rabi", f));
    }
    out.add_file("fit_report.csv", csv_bytes(&FIT_REPORT_HEADER, &fits));
    let pts = scan.nu.iter().zip(&scan.p1).map(|(n, p)| (*n as f64, *p)).collect();
    plot(out, cx, "rabi.svg", "Digital Rabi", ("drive periods", "P1"), &[Series { label: "P1", points: pts }]);

    let period = cfg.device.qubit.period() * k as f64;
    out.note(format!("pulse width σ = {:.3} ps, extra attenuation {:.3} dB", gate.sigma * 1e12, gate.extra_attenuation_db));
    match scan.nu_pi {
        Some(nu) => {
            out.note(format!(
                "ν_π = {:.2} (rounded {}), π-gate {:.2} ns, fit confident: {}",
                nu,
                nu.round(),
                nu.round() * period * 1e9,
                scan.confident
            ));
            if let (RabiKind::Jpg, Some(target)) = (cfg.experiment.rabi.drive, cfg.device.target_nu_pi) {
                let dev = (nu.round() - target as f64).abs();
                out.check("rabi_nu_pi", scan.confident && dev <= cfg.experiment.checks.nu_pi_tol, format!("ν_π {nu:.2} vs {target}"));
            }
        }
        None => {
            out.note("no ν_π: damped-sine fit failed");
            out.check("rabi_nu_pi", false, "fit failed");
        }
    }
    Ok(())
}

fn stability(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let cfg = cx.cfg;
    let gate = pipeline::device_gate(cfg)?;
    let e = &cfg.experiment.rabi_stability;
    let st = sim(
        "rabi stability",
        rabi_stability(
            &gate.rabi_drive(cfg.device.jpg.subharmonic_k),
            e.duration_s,
            e.window_oscillations,
            &noisy_ctx(cx, &gate),
            cx.strategy,
        ),
    )?;
    let rows: Vec<Vec<String>> = st
        .windows
        .estimates
        .iter()
        .zip(&st.nu_pi)
        .map(|(w, (_, nu))| vec![num(w.t_center), num(w.frequency), num(w.frequency_err), num(*nu)])
        .collect();
    out.add_file("rabi_stability.csv", csv_bytes(&["t_center_s", "f_rabi_Hz", "f_rabi_err_Hz", "nu_pi"], &rows));
    let trace: Vec<Vec<String>> = st.times.iter().zip(&st.p1).map(|(t, p)| vec![num(*t), num(*p)]).collect();
    out.add_file("rabi_long.csv", csv_bytes(&["t_s", "p1"], &trace));
    plot(out, cx, "rabi_stability.svg", "Windowed ν_π", ("time (s)", "ν_π"), &[Series { label: "ν_π", points: st.nu_pi.clone() }]);
    let drift = st.nu_pi_drift();
    out.note(format!("{} windows, {} skipped", st.windows.estimates.len(), st.windows.skipped.len()));
    out.note(format!("ν_π drift (max − min) = {drift:.3} periods"));
    if let Some(t) = st.decay_time {
        out.note(format!("Rabi envelope decay time {:.3} µs", t * 1e6));
    }
    out.check("nu_pi_drift", drift <= cfg.experiment.checks.nu_pi_drift_max, format!("{drift:.3}"));
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Decay {
    T1,
    Ramsey,
}

/// Characteristic time of a fitted decay and its standard error.
fn decay_time(kind: Decay, fit: &FitResult) -> (f64, f64) {
    match kind {
        Decay::T1 => (fit.params[1], fit.stderr(1)),
        Decay::Ramsey => {
            let g = fit.params[1];
            (1.0 / g, fit.stderr(1) / (g * g))
        }
    }
}

struct Arm {
    name: &'static str,
    exact: DecayExperiment,
    reps: Vec<f64>,
    first: DecayExperiment,
}

fn decay(cx: &Context, out: &mut Outcome, kind: Decay) -> Result<(), HarnessError> {
    let cfg = cx.cfg;
    if !cfg.device.noise.enabled {
        return Err(HarnessError::Config("T1 and Ramsey experiments need device.noise.enabled".into()));
    }
    let gate = pipeline::device_gate(cfg)?;
    let ctx = noisy_ctx(cx, &gate);
    let (jpg_pi, jpg_half) = pipeline::jpg_gates(cfg, &gate)?;
    let (res_pi, res_half) = pipeline::resonant_gates(cfg, gate.coupling)?;
    let (label, model, delays, shots, reps, truth, tol) = match kind {
        Decay::T1 => {
            let e = &cfg.experiment.t1;
            ("t1", FitModel::ExpDecay, e.delays_s.values(), e.shots, e.repetitions, cfg.device.qubit.t1, cfg.experiment.checks.t1_rel_tol)
        }
        Decay::Ramsey => {
            let e = &cfg.experiment.ramsey;
            ("ramsey", FitModel::DampedSin, e.delays_s.values(), e.shots, e.repetitions, cfg.device.qubit.t2_star, cfg.experiment.checks.t2_rel_tol)
        }
    };
    let run_arm = |name: &'static str, tag: u64, pi: &PulseSpec, half: &PulseSpec| -> Result<Arm, HarnessError> {
        let exact = match kind {
            Decay::T1 => sim("t1", t1_experiment(&delays, &ctx, pi, None))?,
            Decay::Ramsey => sim(
                "ramsey",
                ramsey_experiment(&delays, cfg.experiment.ramsey.detuning_hz, &ctx, half, None, cx.strategy),
            )?,
        };
        let samples: Vec<DecayExperiment> = (0..reps.max(1) as u64)
            .map(|i| exact.resample(shots, derive_seed(cx.seed, tag, i), model))
            .collect();
        let reps = samples.iter().filter_map(|s| s.fit.as_ref().map(|f| decay_time(kind, f).0)).collect();
        Ok(Arm {
            name,
            exact,
            reps,
            first: samples.into_iter().next().expect("at least one repetition"),
        })
    };
    let arms = [run_arm("jpg", 1, &jpg_pi, &jpg_half)?, run_arm("resonant", 2, &res_pi, &res_half)?];

    let mut fits = Vec::new();
    let mut rep_rows = Vec::new();
    let mut stats = Vec::new();
    for (a, arm) in arms.iter().enumerate() {
        let series: Vec<Vec<String>> = arm.first.delays.iter().zip(&arm.first.p1).map(|(t, p)| vec![num(*t), num(*p)]).collect();
        let file = if a == 0 { format!("{label}.csv") } else { format!("{label}_{}.csv", arm.name) };
        out.add_file(&file, csv_bytes(&["delay_s", "p1"], &series));
        let exact_fit = arm.exact.fit.as_ref();
        if let Some(f) = exact_fit {
            fits.extend(fit_rows(&format!("{label}_{}_exact", arm.name), f));
        }
        if let Some(f) = &arm.first.fit {
            fits.extend(fit_rows(&format!("{label}_{}_shots", arm.name), f));
        }
        for (i, v) in arm.reps.iter().enumerate() {
            rep_rows.push(vec![arm.name.to_string(), i.to_string(), num(*v)]);
        }
        let n = arm.reps.len() as f64;
        let mean = arm.reps.iter().sum::<f64>() / n;
        let sd = (arm.reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        let se = sd / n.sqrt();
        fits.push(vec![
            format!("{label}_{}_repetitions", arm.name),
            "mean".into(),
            num(mean),
            num(se),
            (arm.reps.len() as u32 == reps.max(1)).to_string(),
        ]);
        stats.push((mean, se));

        match exact_fit {
            Some(f) => {
                let (t, err) = decay_time(kind, f);
                let rel = (t - truth).abs() / truth;
                out.note(format!("{} arm, noiseless: {:.4} ± {:.4} µs", arm.name, t * 1e6, err * 1e6));
                out.check(&format!("{label}_{}_noiseless", arm.name), rel <= 0.02, format!("relative error {rel:.2e}"));
            }
            None => out.check(&format!("{label}_{}_noiseless", arm.name), false, "fit failed"),
        }
        let rel = (mean - truth).abs() / truth;
        out.note(format!(
            "{} arm, {} × {} shots: mean {:.4} µs, std {:.4} µs, {} fits",
            arm.name,
            reps,
            shots,
            mean * 1e6,
            sd * 1e6,
            arm.reps.len()
        ));
        if let Ok(h) = gaussian_histogram_stats(&arm.reps) {
            if let Some((mu, sigma)) = h.gaussian {
                out.note(format!("{} arm histogram Gaussian: μ = {:.4} µs, σ = {:.4} µs", arm.name, mu * 1e6, sigma * 1e6));
            }
        }
        out.check(&format!("{label}_{}_shots", arm.name), rel <= tol, format!("relative error {rel:.2e}"));
    }
    let ((m0, s0), (m1, s1)) = (stats[0], stats[1]);
    let combined = (s0 * s0 + s1 * s1).sqrt();
    out.note(format!("arm difference {:.4} µs (2σ = {:.4} µs)", (m0 - m1) * 1e6, 2.0 * combined * 1e6));
    out.check(&format!("{label}_arms_agree"), (m0 - m1).abs() <= 2.0 * combined, format!("{:.3e} s", (m0 - m1).abs()));

    out.add_file("fit_report.csv", csv_bytes(&FIT_REPORT_HEADER, &fits));
    out.add_file(&format!("{label}_repetitions.csv"), csv_bytes(&["arm", "repetition", "time_s"], &rep_rows));
    let series: Vec<Series> = arms
        .iter()
        .map(|a| Series {
            label: a.name,
            points: a.first.delays.iter().copied().zip(a.first.p1.iter().copied()).collect(),
        })
        .collect();
    plot(out, cx, &format!("{label}.svg"), label, ("delay (s)", "P1"), &series);
    Ok(())
}

struct RbSetup {
    group: CliffordGroup,
    channels: CliffordChannels,
    prims: Option<PrimitiveChannels>,
    layout: Option<GateLayout>,
    ctx: Option<DriveContext>,
    cache_deviation: Option<f64>,
}

fn rb_setup(cx: &Context) -> Result<RbSetup, HarnessError> {
    let cfg = cx.cfg;
    let e = &cfg.experiment.rb;
    let group = CliffordGroup::new();
    let mut s = RbSetup {
        channels: CliffordChannels::ideal(&group),
        group,
        prims: None,
        layout: None,
        ctx: None,
        cache_deviation: None,
    };
    match e.channel {
        RbChannelKind::Ideal => {}
        RbChannelKind::Depolarizing => {
            s.channels = sim("rb", CliffordChannels::depolarizing(&s.group, e.depolarizing_p))?;
        }
        RbChannelKind::Delta | RbChannelKind::Full => {
            let gate = pipeline::device_gate(cfg)?;
            let layout = pipeline::layout(cfg, e.drive, &gate)?;
            let ctx = noisy_ctx(cx, &gate);
            let prims = if e.channel == RbChannelKind::Full {
                sim("gate channels", PrimitiveChannels::full_dynamics(&layout, &ctx, cx.strategy))?
            } else {
                if e.drive != GateDrive::Jpg {
                    return Err(HarnessError::Config("the delta channel needs rb.drive = jpg".into()));
                }
                let theta = std::f64::consts::PI / gate.nu_pi()? as f64;
                sim("gate channels", PrimitiveChannels::delta_pulse(&layout, theta, &ctx))?
            };
            s.channels = CliffordChannels::from_primitives(&s.group, &prims);
            if e.channel == RbChannelKind::Full && e.verify_sequences > 0 {
                let seqs: Vec<Vec<usize>> =
                    (0..e.verify_sequences).map(|i| generate_sequence(&s.group, 2, cx.seed, u32::MAX, i)).collect();
                s.cache_deviation =
                    Some(sim("cache check", verify_cache(&s.group, &layout, &s.channels, &ctx, &seqs, 1e-6))?);
            }
            s.prims = Some(prims);
            s.layout = Some(layout);
            s.ctx = Some(ctx);
        }
    }
    Ok(s)
}

fn rb_config(cx: &Context) -> RbConfig {
    let e = &cx.cfg.experiment.rb;
    RbConfig {
        lengths: e.lengths.clone(),
        n_seq: e.n_seq,
        shots: e.shots,
        seed: cx.seed,
    }
}

fn rb_files(out: &mut Outcome, cx: &Context, res: &RbResult, prefix: &str) {
    let rows: Vec<Vec<String>> = res
        .points
        .iter()
        .map(|p| vec![p.m.to_string(), num(p.survival_mean), num(p.survival_stderr), p.n_seq.to_string()])
        .collect();
    out.add_file(&format!("{prefix}.csv"), csv_bytes(&["m", "survival_mean", "survival_stderr", "n_seq"], &rows));
    let f = &res.fit;
    out.add_file(
        &format!("{prefix}_fit.csv"),
        csv_bytes(&["a", "p", "b", "r", "r_err"], &[vec![num(f.a), num(f.p), num(f.b), num(f.r), num(f.r_err)]]),
    );
    let pts = res.points.iter().map(|p| (p.m as f64, p.survival_mean)).collect();
    plot(out, cx, &format!("{prefix}.svg"), "Randomized benchmarking", ("Clifford count", "survival"), &[Series { label: "survival", points: pts }]);
}

fn rb(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let e = &cx.cfg.experiment.rb;
    let s = rb_setup(cx)?;
    let res = sim("rb", run_rb(&s.group, &s.channels, None, &rb_config(cx), cx.strategy))?;
    rb_files(out, cx, &res, "rb");
    note_cache(out, &s);
    let mut fits = Vec::new();
    if let Some(fr) = &res.fit.fit {
        fits.extend(fit_rows("rb", fr));
    }
    out.add_file("fit_report.csv", csv_bytes(&FIT_REPORT_HEADER, &fits));
    let f = &res.fit;
    out.note(format!(
        "a = {:.5} p = {:.6} ± {:.2e} b = {:.5}",
        f.a, f.p, f.p_err, f.b
    ));
    out.note(format!("r = {:.4e} ± {:.2e}", f.r, f.r_err));
    match e.channel {
        RbChannelKind::Ideal => out.check("rb_ideal", f.r.abs() <= 1e-9, format!("r = {:.2e}", f.r)),
        RbChannelKind::Depolarizing => {
            let dev = (f.p - e.depolarizing_p).abs();
            out.check("rb_depolarizing", dev <= (2.0 * f.p_err).max(1e-9), format!("|Δp| = {dev:.2e}, σ = {:.2e}", f.p_err));
        }
        RbChannelKind::Delta | RbChannelKind::Full => {
            let (layout, ctx) = (s.layout.expect("set"), s.ctx.expect("set"));
            let q = &ctx.qubit;
            let tc = layout.mean_clifford_duration(&s.group, q);
            let limit = sim("rb", coherence_limit_error(q.t1, q.t2_star, tc))?;
            let ratio = f.r / limit;
            out.note(format!(
                "mean Clifford {:.2} ns, coherence limit {:.4e}, ratio {:.3}",
                tc * 1e9,
                limit,
                ratio
            ));
            if e.channel == RbChannelKind::Full {
                let [lo, hi] = cx.cfg.experiment.checks.rb_ratio;
                out.check("rb_coherence_ratio", (lo..=hi).contains(&ratio), format!("{ratio:.3}"));
            }
        }
    }
    Ok(())
}

fn irb(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let cfg = cx.cfg;
    let e = &cfg.experiment.irb;
    let s = rb_setup(cx)?;
    let rb_cfg = rb_config(cx);
    note_cache(out, &s);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut reference_written = false;
    for name in &e.gates {
        let p = pipeline::primitive_by_name(name)?;
        let mut gate = match &s.prims {
            Some(prims) => primitive_gate(&s.group, prims, p),
            None => InterleavedGate {
                name: p.name().to_string(),
                clifford: s.group.lookup(&p.unitary()).expect("primitive is a Clifford"),
                channel: unitary_superop(&embed(&p.unitary())),
            },
        };
        let injected = e.inject.as_ref().filter(|i| i.gate == *name).map(|i| i.p);
        if let Some(pe) = injected {
            gate.channel = depolarizing_superop(pe) * gate.channel;
        }
        let r = sim("irb", run_irb(&s.group, &s.channels, &gate, &rb_cfg, cx.strategy))?;
        if !reference_written {
            rb_files(out, cx, &r.reference, "rb");
            if let Some(fr) = &r.reference.fit.fit {
                fits.extend(fit_rows("rb_reference", fr));
            }
            reference_written = true;
        }
        if let Some(fr) = &r.interleaved.fit.fit {
            fits.extend(fit_rows(&format!("irb_{name}"), fr));
        }
        rows.push(vec![name.clone(), num(r.reference.fit.p), num(r.interleaved.fit.p), num(r.r_gate), num(r.r_err)]);
        out.note(format!("{name}: r = {:.4e} ± {:.2e}", r.r_gate, r.r_err));
        let tol = (2.0 * r.r_err).max(1e-9);
        match (cfg.experiment.rb.channel, injected) {
            (_, Some(pe)) => {
                let want = 0.5 * (1.0 - pe);
                out.check(&format!("irb_{name}_injected"), (r.r_gate - want).abs() <= tol, format!("r {:.3e} vs {want:.3e}", r.r_gate));
            }
            (RbChannelKind::Ideal | RbChannelKind::Depolarizing, None) => {
                out.check(&format!("irb_{name}_zero"), r.r_gate.abs() <= tol, format!("r {:.3e}", r.r_gate));
            }
            _ => out.check(&format!("irb_{name}_nonnegative"), r.r_gate >= -tol, format!("r {:.3e}", r.r_gate)),
        }
    }
    if !rows.is_empty() {
        let mean = rows.iter().map(|r| r[3].parse::<f64>().unwrap_or(f64::NAN)).sum::<f64>() / rows.len() as f64;
        out.note(format!("mean gate error {:.4e}", mean));
    }
    out.add_file("irb.csv", csv_bytes(&["gate_name", "p_ref", "p_int", "r_gate", "r_err"], &rows));
    out.add_file("fit_report.csv", csv_bytes(&FIT_REPORT_HEADER, &fits));
    Ok(())
}

fn list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn note_cache(out: &mut Outcome, s: &RbSetup) {
    if let Some(d) = s.cache_deviation {
        out.note(format!("channel cache vs direct evolution: max survival difference {d:.2e}"));
    }
}

/// `true` when successive values strictly decrease.
fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn leakage(cx: &Context, out: &mut Outcome) -> Result<(), HarnessError> {
    let cfg = cx.cfg;
    let e = &cfg.experiment.leakage;
    let d = &cfg.device;
    let extra = sim(
        "attenuation",
        jpgsim_core::quantum::extra_attenuation_for_nu_pi(&d.jpg, &d.qubit, e.reference_nu_pi as f64, e.reference_sigma_n),
    )?;
    let setup = LeakageSetup {
        jpg: JpgParams {
            extra_attenuation_db: extra,
            ..d.jpg
        },
        qubit: d.qubit,
        integrator: Default::default(),
    };
    let pts = sim("leakage", leakage_sweep(&e.alpha_frac, &e.sigma_n, e.k, &setup, cx.strategy))?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|p| vec![num(p.alpha_frac), num(p.sigma_n), num(p.rho_ff), p.nu_pi.to_string()])
        .collect();
    out.add_file("leakage.csv", csv_bytes(&["alpha_frac", "sigma_n", "rho_ff", "nu_pi"], &rows));
    let by_alpha = |a: f64| -> Vec<LeakagePoint> { pts.iter().filter(|p| p.alpha_frac == a).copied().collect() };
    let series: Vec<(String, Vec<(f64, f64)>)> = e
        .alpha_frac
        .iter()
        .map(|&a| (format!("α = {:.1}%", a * 100.0), by_alpha(a).iter().map(|p| (p.sigma_n, p.rho_ff)).collect()))
        .collect();
    let series: Vec<Series> = series.iter().map(|(l, p)| Series { label: l, points: p.clone() }).collect();
    plot(out, cx, "leakage.svg", "Leakage after X_π", ("σ_n", "ρ_ff"), &series);

    out.note(format!("extra attenuation {extra:.3} dB (ν_π = {} at σ_n = {})", e.reference_nu_pi, e.reference_sigma_n));
    for &a in &e.alpha_frac {
        let row = by_alpha(a);
        if let Some(m) = row.iter().min_by(|x, y| x.rho_ff.total_cmp(&y.rho_ff)) {
            out.note(format!("α = {:.2}%: min ρ_ff = {:.4e} at σ_n = {}", a * 100.0, m.rho_ff, m.sigma_n));
        }
    }
    let ch = &cfg.experiment.checks;
    let row = by_alpha(ch.leakage_check_alpha);
    if !row.is_empty() {
        let [lo, hi] = ch.leakage_flat_band;
        let flat: Vec<f64> = row.iter().filter(|p| p.sigma_n <= 0.1).map(|p| p.rho_ff).collect();
        let in_band = flat.iter().all(|v| (lo..=hi).contains(v));
        out.check("leakage_flat_band", in_band && !flat.is_empty(), list(&flat));
        let tail: Vec<f64> = row.iter().filter(|p| p.sigma_n > 0.1).map(|p| p.rho_ff).collect();
        out.check("leakage_decreasing_tail", decreasing(&tail), list(&tail));
    }
    let smallest = e.sigma_n.iter().copied().fold(f64::INFINITY, f64::min);
    let mut alphas: Vec<f64> = e.alpha_frac.clone();
    alphas.sort_by(f64::total_cmp);
    let narrow: Vec<f64> = alphas
        .iter()
        .filter_map(|&a| pts.iter().find(|p| p.alpha_frac == a && p.sigma_n == smallest))
        .map(|p| p.rho_ff)
        .collect();
    if narrow.len() >= 2 {
        let [lo, hi] = ch.leakage_alpha_band;
        out.check(
            "leakage_alpha_trend",
            narrow.iter().all(|v| (lo..=hi).contains(v)) && decreasing(&narrow),
            list(&narrow),
        );
    }
    Ok(())
}
