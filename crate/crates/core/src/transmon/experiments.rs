// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::drive::{axis_phase, synthesize_resonant_drive, Axis, DriveSignal, TrainDrive};
use super::evolve::{
    delta_period_superop, delta_pulse_series, evolve, DriveContext, InitialState, IntegratorConfig,
};
use super::state::{DensityMatrix3, IdleEvolution, NoiseModel, QutritState};
use crate::error::{domain, Error, Result};
use crate::fit::{fit_auto, sliding_window_frequency, FitModel, FitResult, WindowedFrequency};
use crate::parallel::{map_with, Strategy};
use crate::quantum::{gaussian_form_factor, port_coupling, tip_angle_per_pulse, JpgParams, QubitParams, PHI0};

/// Fits whose RMS residual is below this support a ±1 pulse ν_π.
pub const CONFIDENT_RMS: f64 = 0.02;

/// A single-qubit rotation primitive, placed from t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseSpec {
    /// `count` Gaussian pulses of `area` (V·s at the qubit) every `k` qubit periods.
    Jpg { k: u32, count: u32, sigma: f64, area: f64 },
    /// Gaussian-envelope carrier of peak `amplitude` (V at the qubit).
    Resonant { sigma: f64, duration: f64, amplitude: f64 },
}

impl PulseSpec {
    pub fn drive(&self, phase: f64, qubit: &QubitParams) -> Result<DriveSignal> {
        match *self {
            PulseSpec::Jpg { k, count, sigma, area } => Ok(DriveSignal::train(TrainDrive {
                k,
                count,
                sigma,
                area,
                phase,
                start: 0.0,
                period_q: qubit.period(),
            })),
            PulseSpec::Resonant { sigma, duration, amplitude } => {
                synthesize_resonant_drive(sigma, duration, amplitude, phase, qubit)
            }
        }
    }

    pub fn duration(&self, qubit: &QubitParams) -> f64 {
        match *self {
            PulseSpec::Jpg { k, count, .. } => (k * count) as f64 * qubit.period(),
            PulseSpec::Resonant { duration, .. } => duration,
        }
    }
}

/// Binomial estimate of each probability from `shots` projective measurements.
pub fn sample_shots(p: &[f64], shots: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    p.iter()
        .map(|&x| {
            let d = Binomial::new(shots as u64, x.clamp(0.0, 1.0)).expect("probability is clamped");
            d.sample(&mut rng) as f64 / shots as f64
        })
        .collect()
}

/// First local maximum at x > 0 of a fitted damped sinusoid.
///
/// Stationary points satisfy `tan w = −γ/(2πf)` with `w = 2πfx + φ`; a point
/// is a maximum when `A·cos w > 0`.
pub fn first_maximum(fit: &FitResult) -> Option<f64> {
    if fit.model != FitModel::DampedSin {
        return None;
    }
    let [a, gamma, f, phi, _] = fit.params[..] else { return None };
    if !(f > 0.0) {
        return None;
    }
    let omega = TAU * f;
    let w0 = (-gamma / omega).atan();
    let m_start = ((phi - w0) / PI).floor() as i64 - 1;
    (m_start..m_start + 6)
        .map(|m| w0 + m as f64 * PI)
        .filter(|w| a * w.cos() > 0.0)
        .map(|w| (w - phi) / omega)
        .filter(|x| *x > 0.0)
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RabiDrive {
    /// Delta-function pulses of tip angle `delta_theta`.
    Delta { delta_theta: f64, k: u32, phase: f64 },
    /// Gaussian pulses of `area` (V·s at the qubit); the coupling comes from the context.
    Train { k: u32, sigma: f64, area: f64, phase: f64 },
}

impl RabiDrive {
    pub fn k(&self) -> u32 {
        match *self {
            RabiDrive::Delta { k, .. } | RabiDrive::Train { k, .. } => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiScan {
    pub nu: Vec<u32>,
    pub p1: Vec<f64>,
    pub rho_ff: Vec<f64>,
    pub fit: Option<FitResult>,
    /// First maximum of the fitted curve, in drive periods.
    pub nu_pi: Option<f64>,
    /// Fit residual small enough to quote ν_π to ±1 pulse.
    pub confident: bool,
}

impl RabiScan {
    pub fn nu_pi_pulses(&self) -> Option<u32> {
        self.nu_pi.map(|v| v.round() as u32)
    }
}

fn populations_by_period(drive: &RabiDrive, nu_max: u32, ctx: &DriveContext) -> Result<Vec<[f64; 3]>> {
    let q = &ctx.qubit;
    match *drive {
        RabiDrive::Delta { delta_theta, k, phase } => {
            if !ctx.noise.enabled {
                return Ok(delta_pulse_series(&QutritState::ground(), delta_theta, k, nu_max, phase, q));
            }
            let s = delta_period_superop(delta_theta, k, phase, q, &ctx.noise);
            let mut rho = DensityMatrix3::ground();
            let mut out = Vec::with_capacity(nu_max as usize + 1);
            out.push(rho.populations());
            for _ in 0..nu_max {
                rho = rho.apply(&s);
                out.push(rho.populations());
            }
            Ok(out)
        }
        RabiDrive::Train { k, sigma, area, phase } => {
            let d = DriveSignal::train(TrainDrive {
                k,
                count: nu_max,
                sigma,
                area,
                phase,
                start: 0.0,
                period_q: q.period(),
            });
            let spacing = k as f64 * q.period();
            let times: Vec<f64> = (0..nu_max).map(|j| j as f64 * spacing).collect();
            let ev = evolve(&InitialState::Pure(QutritState::ground()), &d, ctx, &times)?;
            Ok(ev.states.iter().map(|s| s.populations()).collect())
        }
    }
}

/// Excited-state population after ν = 0..=nu_max drive periods, with ν_π from
/// a damped-sinusoid fit. A failed fit keeps the raw data and leaves ν_π empty.
pub fn rabi_scan(drive: &RabiDrive, nu_max: u32, ctx: &DriveContext) -> Result<RabiScan> {
    if nu_max < 8 {
        return Err(domain("a Rabi scan needs at least 8 drive periods"));
    }
    let pops = populations_by_period(drive, nu_max, ctx)?;
    let nu: Vec<u32> = (0..=nu_max).collect();
    let p1: Vec<f64> = pops.iter().map(|p| p[1]).collect();
    let rho_ff: Vec<f64> = pops.iter().map(|p| p[2]).collect();
    let x: Vec<f64> = nu.iter().map(|&v| v as f64).collect();
    let fit = fit_auto(FitModel::DampedSin, &x, &p1, 1e-10).ok().filter(|f| f.converged);
    let nu_pi = fit.as_ref().and_then(first_maximum);
    let confident = match (&fit, nu_pi) {
        (Some(f), Some(_)) => f.rms() < CONFIDENT_RMS && f.params[2] * nu_max as f64 >= 2.0,
        _ => false,
    };
    Ok(RabiScan {
        nu,
        p1,
        rho_ff,
        fit,
        nu_pi,
        confident,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayExperiment {
    pub delays: Vec<f64>,
    /// Noise-free expectation values.
    pub p1_exact: Vec<f64>,
    /// What was fitted: `p1_exact` or its shot-sampled estimate.
    pub p1: Vec<f64>,
    pub fit: Option<FitResult>,
}

impl DecayExperiment {
    fn fitted(delays: Vec<f64>, p1_exact: Vec<f64>, shots: Option<(u32, u64)>, model: FitModel) -> Self {
        let p1 = match shots {
            Some((n, seed)) => sample_shots(&p1_exact, n, seed),
            None => p1_exact.clone(),
        };
        let fit = fit_auto(model, &delays, &p1, 1e-10).ok().filter(|f| f.converged);
        Self {
            delays,
            p1_exact,
            p1,
            fit,
        }
    }

    /// Refits with fresh shot noise on the same expectation values.
    pub fn resample(&self, shots: u32, seed: u64, model: FitModel) -> Self {
        Self::fitted(self.delays.clone(), self.p1_exact.clone(), Some((shots, seed)), model)
    }
}

/// π pulse, idle for each delay, ideal measurement of the excited state.
pub fn t1_experiment(
    delays: &[f64],
    ctx: &DriveContext,
    pi_pulse: &PulseSpec,
    shots: Option<(u32, u64)>,
) -> Result<DecayExperiment> {
    if !ctx.noise.enabled {
        return Err(domain("T1 experiment needs noise enabled"));
    }
    if delays.iter().any(|d| !(*d >= 0.0)) {
        return Err(domain("delays must be non-negative"));
    }
    let d = pi_pulse.drive(axis_phase(Axis::X), &ctx.qubit)?;
    let rho = *evolve(&InitialState::Pure(QutritState::ground()), &d, ctx, &[])?.final_state();
    let idle = IdleEvolution::new(&ctx.qubit, &ctx.noise);
    let p1: Vec<f64> = delays.iter().map(|&t| idle.apply(&rho, t).population(1)).collect();
    Ok(DecayExperiment::fitted(delays.to_vec(), p1, shots, FitModel::ExpDecay))
}

/// Rounds delays to whole qubit periods so later pulses keep their phase reference.
pub fn snap_to_period(delays: &[f64], qubit: &QubitParams) -> Vec<f64> {
    let tq = qubit.period();
    delays.iter().map(|d| (d / tq).round() * tq).collect()
}

/// X_π/2, idle τ, then a π/2 pulse whose axis is advanced by `2π·detuning·τ`.
/// Delays are snapped to whole qubit periods first.
pub fn ramsey_experiment(
    delays: &[f64],
    detuning: f64,
    ctx: &DriveContext,
    half_pi: &PulseSpec,
    shots: Option<(u32, u64)>,
    strategy: Strategy,
) -> Result<DecayExperiment> {
    if !ctx.noise.enabled {
        return Err(domain("Ramsey experiment needs noise enabled"));
    }
    let delays = snap_to_period(delays, &ctx.qubit);
    let x = axis_phase(Axis::X);
    let first = half_pi.drive(x, &ctx.qubit)?;
    let rho = *evolve(&InitialState::Pure(QutritState::ground()), &first, ctx, &[])?.final_state();
    let idle = IdleEvolution::new(&ctx.qubit, &ctx.noise);
    let gate = half_pi.duration(&ctx.qubit);
    let f10 = ctx.qubit.f10();
    let p1: Vec<Result<f64>> = map_with(strategy, &delays, |&tau| {
        // The second pulse is simulated from its own t = 0. Train gates already
        // start on the qubit-period grid; a carrier needs its phase shifted.
        let carrier = match half_pi {
            PulseSpec::Resonant { .. } => TAU * (f10 * (gate + tau)).fract(),
            PulseSpec::Jpg { .. } => 0.0,
        };
        let phase = x + TAU * detuning * tau + carrier;
        let second = half_pi.drive(phase, &ctx.qubit)?;
        let start = InitialState::Mixed(idle.apply(&rho, tau));
        Ok(evolve(&start, &second, ctx, &[])?.final_state().population(1))
    });
    let p1 = p1.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DecayExperiment::fitted(delays, p1, shots, FitModel::DampedSin))
}

/// Amplitude of a resonant pulse that rotates by `theta` ≤ π, found by
/// bracketing around the rotating-wave estimate.
pub fn calibrate_resonant(sigma: f64, duration: f64, theta: f64, ctx: &DriveContext) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(domain("target rotation must lie in (0, π]"));
    }
    let ctx = ctx.noiseless();
    let n = 4000;
    let h = duration / n as f64;
    let envelope: f64 = (0..n)
        .map(|i| {
            let z = ((i as f64 + 0.5) * h - 0.5 * duration) / sigma;
            (-0.5 * z * z).exp() * h
        })
        .sum();
    let a0 = theta / (ctx.coupling * envelope);
    let p1 = |a: f64| -> Result<f64> {
        let d = synthesize_resonant_drive(sigma, duration, a, axis_phase(Axis::X), &ctx.qubit)?;
        Ok(evolve(&InitialState::Pure(QutritState::ground()), &d, &ctx, &[])?
            .final_state()
            .population(1))
    };
    let (mut lo, mut hi) = (0.8 * a0, 1.2 * a0);
    if (theta - PI).abs() < 1e-12 {
        // Golden-section search for the population maximum.
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (p1(x1)?, p1(x2)?);
        for _ in 0..60 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = p1(x2)?;
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = p1(x1)?;
            }
            if hi - lo < 1e-9 * a0 {
                break;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    let target = (0.5 * theta).sin().powi(2);
    let (mut flo, fhi) = (p1(lo)? - target, p1(hi)? - target);
    if flo * fhi > 0.0 {
        return Err(Error::Consistency("resonant calibration failed to bracket the target".into()));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = p1(mid)? - target;
        if fm * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-10 * a0 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Device description shared by every point of a leakage sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageSetup {
    pub jpg: JpgParams,
    /// Template qubit; the anharmonicity (and with it C_T) is replaced per point.
    pub qubit: QubitParams,
    pub integrator: IntegratorConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakagePoint {
    pub alpha_frac: f64,
    pub sigma_n: f64,
    pub nu_pi: u32,
    pub rho_ee: f64,
    pub rho_ff: f64,
}

fn first_peak(series: &[f64]) -> Option<usize> {
    (1..series.len().saturating_sub(1))
        .find(|&i| series[i] > 0.5 && series[i] >= series[i - 1] && series[i] > series[i + 1])
}

/// f-level population after the pulse count that maximises the e population,
/// recomputed for each width. Loss is not included.
///
/// `sigma_n = 0` uses delta-function pulses.
pub fn leakage_after_pi(alpha_frac: f64, sigma_n: f64, k: u32, setup: &LeakageSetup) -> Result<LeakagePoint> {
    if !(sigma_n >= 0.0) {
        return Err(domain("sigma_n must be non-negative"));
    }
    setup.jpg.validate()?;
    if k < 2 {
        return Err(domain("k must be at least 2"));
    }
    let qubit = setup.qubit.with_anharmonicity_fraction(alpha_frac)?;
    let delta_theta = tip_angle_per_pulse(&setup.jpg, &qubit)?;
    let estimate = PI / (delta_theta * gaussian_form_factor(sigma_n));
    let nu_max = (1.5 * estimate).ceil() as u32 + 10;

    if sigma_n == 0.0 {
        let phase = axis_phase(Axis::X);
        let series = delta_pulse_series(&QutritState::ground(), delta_theta, k, nu_max, phase, &qubit);
        let pe: Vec<f64> = series.iter().map(|p| p[1]).collect();
        let i = first_peak(&pe).ok_or_else(|| Error::Consistency("no Rabi maximum found".into()))?;
        return Ok(LeakagePoint {
            alpha_frac,
            sigma_n,
            nu_pi: i as u32,
            rho_ee: series[i][1],
            rho_ff: series[i][2],
        });
    }

    let coupling = port_coupling(setup.jpg.c_c, &qubit)?;
    let area = setup.jpg.n_jj as f64 * setup.jpg.amplitude_factor() * PHI0;
    let ctx = DriveContext {
        qubit,
        coupling,
        noise: NoiseModel::disabled(),
        integrator: setup.integrator,
    };
    let sigma = sigma_n * qubit.period();
    let rabi = RabiDrive::Train {
        k,
        sigma,
        area,
        phase: axis_phase(Axis::X),
    };
    let pops = populations_by_period(&rabi, nu_max, &ctx)?;
    let pe: Vec<f64> = pops.iter().map(|p| p[1]).collect();
    let guess = first_peak(&pe).ok_or_else(|| Error::Consistency("no Rabi maximum found".into()))? as u32;

    // Wide pulses spill across period boundaries, so finish complete trains.
    let mut best: Option<LeakagePoint> = None;
    for nu in guess.saturating_sub(2).max(1)..=guess + 2 {
        let tr = TrainDrive {
            k,
            count: nu,
            sigma,
            area,
            phase: axis_phase(Axis::X),
            start: 0.0,
            period_q: qubit.period(),
        };
        let mut d = DriveSignal::train(tr);
        let tail = tr.center(nu - 1) + 4.0 * sigma;
        let tq = qubit.period();
        d.duration = d.duration.max((tail / tq).ceil() * tq);
        let ev = evolve(&InitialState::Pure(QutritState::ground()), &d, &ctx, &[])?;
        let p = ev.final_state().populations();
        if best.is_none_or(|b| p[1] > b.rho_ee) {
            best = Some(LeakagePoint {
                alpha_frac,
                sigma_n,
                nu_pi: nu,
                rho_ee: p[1],
                rho_ff: p[2],
            });
        }
    }
    Ok(best.expect("at least one candidate count"))
}

/// [`leakage_after_pi`] over the grid `alphas × sigma_ns`, alpha-major.
pub fn leakage_sweep(
    alphas: &[f64],
    sigma_ns: &[f64],
    k: u32,
    setup: &LeakageSetup,
    strategy: Strategy,
) -> Result<Vec<LeakagePoint>> {
    let grid: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| sigma_ns.iter().map(move |&s| (a, s)))
        .collect();
    map_with(strategy, &grid, |&(a, s)| leakage_after_pi(a, s, k, setup))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiStability {
    pub times: Vec<f64>,
    pub p1: Vec<f64>,
    pub windows: WindowedFrequency,
    /// `(t_center, ν_π)` per window, ν_π = 1/(2f) in drive periods.
    pub nu_pi: Vec<(f64, f64)>,
    /// Envelope decay time of the whole record.
    pub decay_time: Option<f64>,
}

impl RabiStability {
    /// Largest minus smallest windowed ν_π.
    pub fn nu_pi_drift(&self) -> f64 {
        let lo = self.nu_pi.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = self.nu_pi.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        if self.nu_pi.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Long Rabi record at fixed drive, analysed with sliding windows of
/// `window_oscillations` Rabi periods.
pub fn rabi_stability(
    drive: &RabiDrive,
    duration: f64,
    window_oscillations: f64,
    ctx: &DriveContext,
    strategy: Strategy,
) -> Result<RabiStability> {
    let spacing = drive.k() as f64 * ctx.qubit.period();
    let nu_max = (duration / spacing).floor() as u32;
    let scan = rabi_scan(drive, nu_max, ctx)?;
    let times: Vec<f64> = scan.nu.iter().map(|&n| n as f64 * spacing).collect();
    let fit = scan
        .fit
        .as_ref()
        .ok_or_else(|| Error::Fit("long Rabi record could not be fitted".into()))?;
    let f_per_period = fit.params[2];
    let decay_time = (fit.params[1] > 0.0).then(|| spacing / fit.params[1]);
    let span = window_oscillations / f_per_period * spacing;
    let windows = sliding_window_frequency(&times, &scan.p1, span, strategy)?;
    let nu_pi = windows
        .estimates
        .iter()
        .map(|e| (e.t_center, 0.5 / (e.frequency * spacing)))
        .collect();
    Ok(RabiStability {
        times,
        p1: scan.p1,
        windows,
        nu_pi,
        decay_time,
    })
}
