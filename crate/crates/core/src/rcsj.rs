// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Overdamped resistively shunted junction model of the pulse generator.
//!
//! The array is N identical junctions in series, so one junction is simulated
//! and voltages are scaled by N. In units of Ic the phase obeys
//! `dδ/dt = ω_c·(i_b + i_rf·sin(2π f_d t) − sin δ)` with `ω_c = 2π/τ`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fit::{fit_auto, FitModel};
use crate::parallel::{map_with, Strategy};
use crate::quantum::{characteristic_time, shapiro_voltage, JpgParams, PHI0};

/// Step-size and measurement-window settings shared by every sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Fixed step; `None` picks the largest step ≤ min(τ, 1/f_d)/100 that
    /// divides the drive period.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_transient")]
    pub transient_periods: u32,
    #[serde(default = "default_measure")]
    pub measure_periods: u32,
}

fn default_transient() -> u32 {
    50
}

fn default_measure() -> u32 {
    40
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: None,
            transient_periods: default_transient(),
            measure_periods: default_measure(),
        }
    }
}

impl SimConfig {
    pub fn step(&self, params: &JpgParams) -> Result<f64> {
        match self.dt {
            Some(dt) => Ok(dt),
            None => default_dt(params),
        }
    }

    pub fn transient(&self, params: &JpgParams) -> f64 {
        self.transient_periods as f64 / params.f_d
    }

    pub fn duration(&self, params: &JpgParams) -> f64 {
        (self.transient_periods + self.measure_periods) as f64 / params.f_d
    }
}

/// Largest step ≤ min(τ, 1/f_d)/100 with an integer number of steps per drive period.
pub fn default_dt(params: &JpgParams) -> Result<f64> {
    let (tau, _) = characteristic_time(params.ic, params.rs)?;
    if !(params.f_d > 0.0) {
        return Err(domain("f_d must be positive"));
    }
    let period = 1.0 / params.f_d;
    let target = tau.min(period) / 100.0;
    Ok(period / (period / target).ceil())
}

/// Junction phase on a uniform grid `t_i = t0 + i·dt`, with the phase rate
/// stored alongside so voltages need no numerical differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub phase: Vec<f64>,
    /// dδ/dt in rad/s.
    pub rate: Vec<f64>,
    pub f_d: f64,
}

impl PhaseTrajectory {
    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len().saturating_sub(1) as f64
    }

    /// Drive periods covered, as a real number.
    pub fn periods(&self) -> f64 {
        self.duration() * self.f_d
    }

    /// Grid steps per drive period when the step divides the period.
    pub fn steps_per_period(&self) -> Option<usize> {
        let s = 1.0 / (self.f_d * self.dt);
        let r = s.round();
        ((s - r).abs() < 1e-6 && r >= 1.0).then_some(r as usize)
    }

    /// Net number of upward crossings of odd multiples of π.
    pub fn windings(&self) -> i64 {
        match (self.phase.first(), self.phase.last()) {
            (Some(&a), Some(&b)) => winding_index(b) - winding_index(a),
            _ => 0,
        }
    }

    /// Array voltage samples `n_jj·(Φ0/2π)·dδ/dt`.
    pub fn voltage(&self, n_jj: u32) -> Vec<f64> {
        let k = n_jj as f64 * PHI0 / TAU;
        self.rate.iter().map(|r| k * r).collect()
    }

    /// Cubic Hermite interpolation of δ inside the trajectory.
    fn phase_inside(&self, t: f64) -> f64 {
        let u = ((t - self.t0) / self.dt).clamp(0.0, (self.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.len() - 2);
        let s = u - i as f64;
        let (p0, p1) = (self.phase[i], self.phase[i + 1]);
        let (m0, m1) = (self.rate[i] * self.dt, self.rate[i + 1] * self.dt);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1
    }

    /// δ(t) with the locked-state extension δ(t + T) = δ(t) + 2π outside the record.
    fn phase_periodic(&self, t: f64) -> f64 {
        let period = 1.0 / self.f_d;
        let end = self.time(self.len() - 1);
        let mut shift = 0.0;
        let mut tt = t;
        while tt < self.t0 {
            tt += period;
            shift -= TAU;
        }
        while tt > end {
            tt -= period;
            shift += TAU;
        }
        self.phase_inside(tt) + shift
    }

    /// Rate at grid index `i`, which may lie outside the record, using the same extension.
    fn rate_periodic(&self, i: i64, spp: usize) -> f64 {
        let n = self.len() as i64;
        let spp = spp as i64;
        let mut j = i;
        while j < 0 {
            j += spp;
        }
        while j >= n {
            j -= spp;
        }
        self.rate[j as usize]
    }
}

fn winding_index(delta: f64) -> i64 {
    ((delta + PI) / TAU).floor() as i64
}

fn rhs(omega_c: f64, i_b: f64, i_rf: f64, w_d: f64, t: f64, delta: f64) -> f64 {
    omega_c * (i_b + i_rf * (w_d * t).sin() - delta.sin())
}

/// Integrates the junction phase from δ(0) = 0 with fixed-step RK4 and returns
/// the part of the trajectory after `transient_skip`.
pub fn simulate_rcsj(
    params: &JpgParams,
    duration: f64,
    dt: f64,
    transient_skip: f64,
) -> Result<PhaseTrajectory> {
    params.validate()?;
    let (tau, _) = characteristic_time(params.ic, params.rs)?;
    let period = 1.0 / params.f_d;
    if !(dt > 0.0) || dt > tau.min(period) / 50.0 * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "dt = {dt:e} s exceeds min(τ, 1/f_d)/50 = {:e} s",
            tau.min(period) / 50.0
        )));
    }
    if !(transient_skip >= 0.0) || duration < transient_skip + 20.0 * period * (1.0 - 1e-12) {
        return Err(Error::Config(
            "duration must cover the transient plus at least 20 drive periods".into(),
        ));
    }

    let omega_c = TAU / tau;
    let i_b = params.i_b / params.ic;
    let i_rf = params.i_rf / params.ic;
    let w_d = TAU * params.f_d;
    let f = |t: f64, d: f64| rhs(omega_c, i_b, i_rf, w_d, t, d);

    let n_total = (duration / dt).round() as usize;
    let n_skip = (transient_skip / dt).round() as usize;
    let mut phase = Vec::with_capacity(n_total - n_skip + 1);
    let mut rate = Vec::with_capacity(n_total - n_skip + 1);
    let mut d = 0.0f64;
    for i in 0..=n_total {
        let t = i as f64 * dt;
        if i >= n_skip {
            phase.push(d);
            rate.push(f(t, d));
        }
        if i == n_total {
            break;
        }
        let k1 = f(t, d);
        let k2 = f(t + 0.5 * dt, d + 0.5 * dt * k1);
        let k3 = f(t + 0.5 * dt, d + 0.5 * dt * k2);
        let k4 = f(t + dt, d + dt * k3);
        d += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !d.is_finite() {
            return Err(Error::Diverged {
                time: t + dt,
                reason: "junction phase is not finite".into(),
            });
        }
    }
    Ok(PhaseTrajectory {
        t0: n_skip as f64 * dt,
        dt,
        phase,
        rate,
        f_d: params.f_d,
    })
}

/// Simulates with the transient and measurement window of `cfg`.
pub fn simulate_with(params: &JpgParams, cfg: &SimConfig) -> Result<PhaseTrajectory> {
    simulate_rcsj(params, cfg.duration(params), cfg.step(params)?, cfg.transient(params))
}

/// Time-averaged array voltage over the trajectory.
pub fn mean_voltage(traj: &PhaseTrajectory, n_jj: u32) -> Result<f64> {
    if traj.len() < 2 {
        return Err(domain("trajectory has fewer than two samples"));
    }
    let periods = traj.periods();
    if periods < 10.0 - 1e-6 {
        return Err(domain(format!(
            "trajectory covers {periods:.3} drive periods, need at least 10"
        )));
    }
    if (periods - periods.round()).abs() > 1e-6 {
        return Err(domain("trajectory must cover an integer number of drive periods"));
    }
    let dphi = traj.phase[traj.len() - 1] - traj.phase[0];
    Ok(n_jj as f64 * (PHI0 / TAU * dphi / traj.duration()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvPoint {
    pub i_b: f64,
    /// `None` when the simulation at this bias failed.
    pub v_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvCurve {
    pub points: Vec<IvPoint>,
    pub f_d: f64,
    pub i_rf: f64,
    pub n_jj: u32,
}

impl IvCurve {
    /// Builds a curve from known voltages.
    pub fn from_samples(bias: &[f64], v_mean: &[f64], f_d: f64, i_rf: f64, n_jj: u32) -> Self {
        Self {
            points: bias
                .iter()
                .zip(v_mean)
                .map(|(&i_b, &v)| IvPoint { i_b, v_mean: Some(v) })
                .collect(),
            f_d,
            i_rf,
            n_jj,
        }
    }
}

/// Mean voltage at every bias in `bias_grid`; failed points are kept as `None`.
pub fn iv_curve(
    params: &JpgParams,
    bias_grid: &[f64],
    cfg: &SimConfig,
    strategy: Strategy,
) -> Result<IvCurve> {
    if bias_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(domain("bias grid must be sorted ascending"));
    }
    params.validate()?;
    let points = map_with(strategy, bias_grid, |&i_b| {
        let p = JpgParams { i_b, ..*params };
        let v = simulate_with(&p, cfg)
            .and_then(|traj| mean_voltage(&traj, 1))
            .ok()
            .map(|v1| params.n_jj as f64 * v1);
        IvPoint { i_b, v_mean: v }
    });
    Ok(IvCurve {
        points,
        f_d: params.f_d,
        i_rf: params.i_rf,
        n_jj: params.n_jj,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockingRange {
    pub i_min: f64,
    pub i_max: f64,
    pub step_index: u32,
    pub width: f64,
}

impl LockingRange {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.i_min + self.i_max)
    }

    pub fn contains(&self, i_b: f64) -> bool {
        (self.i_min..=self.i_max).contains(&i_b)
    }
}

/// Widest contiguous run of bias points sitting on Shapiro step `step_index`.
/// A run needs at least two points; ties go to the lower bias.
pub fn detect_locking_range(curve: &IvCurve, step_index: u32, rel_tol: f64) -> Option<LockingRange> {
    let v_step = shapiro_voltage(curve.n_jj, curve.f_d, step_index).ok()?;
    let on_step = |p: &IvPoint| {
        p.v_mean
            .is_some_and(|v| (v - v_step).abs() <= rel_tol * v_step)
    };
    let mut best: Option<LockingRange> = None;
    let mut run_start: Option<usize> = None;
    let pts = &curve.points;
    for i in 0..=pts.len() {
        let inside = i < pts.len() && on_step(&pts[i]);
        match (inside, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                run_start = None;
                if i - s >= 2 {
                    let (lo, hi) = (pts[s].i_b, pts[i - 1].i_b);
                    if hi > lo && best.is_none_or(|b| hi - lo > b.width) {
                        best = Some(LockingRange {
                            i_min: lo,
                            i_max: hi,
                            step_index,
                            width: hi - lo,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    best
}

/// Index of the widest locking range; ties go to the smaller drive amplitude.
pub fn best_power_index(i_rf: &[f64], widths: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, w) in widths.iter().enumerate() {
        let Some(w) = *w else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let wb = widths[b].unwrap_or(f64::NEG_INFINITY);
                if w > wb || (w == wb && i_rf[i] < i_rf[b]) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivePowerScan {
    pub best_i_rf: f64,
    pub best_range: LockingRange,
    /// One entry per drive amplitude in grid order.
    pub entries: Vec<(f64, Option<LockingRange>)>,
}

/// Sweeps the drive amplitude and keeps the one with the widest first-step range.
pub fn optimize_drive_power(
    params: &JpgParams,
    power_grid: &[f64],
    bias_grid: &[f64],
    cfg: &SimConfig,
    rel_tol: f64,
    strategy: Strategy,
) -> Result<DrivePowerScan> {
    if power_grid.is_empty() {
        return Err(domain("drive power grid is empty"));
    }
    let ranges = map_with(strategy, power_grid, |&i_rf| {
        let p = JpgParams { i_rf, ..*params };
        iv_curve(&p, bias_grid, cfg, strategy).map(|c| detect_locking_range(&c, 1, rel_tol))
    });
    let ranges: Vec<Option<LockingRange>> = ranges.into_iter().collect::<Result<_>>()?;
    let widths: Vec<Option<f64>> = ranges.iter().map(|r| r.map(|r| r.width)).collect();
    let best = best_power_index(power_grid, &widths).ok_or(Error::NoLocking)?;
    Ok(DrivePowerScan {
        best_i_rf: power_grid[best],
        best_range: ranges[best].expect("best index has a range"),
        entries: power_grid.iter().copied().zip(ranges).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub t_center: f64,
    /// V·s
    pub area: f64,
    pub sigma: f64,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Each pulse is a Gaussian with its own area and width.
    Gaussian,
    /// Array voltage on a uniform grid starting at `t0`.
    Sampled { t0: f64, dt: f64, samples: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub pulses: Vec<Pulse>,
    pub shape: PulseShape,
    pub n_jj: u32,
}

impl PulseTrain {
    pub fn total_area(&self) -> f64 {
        self.pulses.iter().map(|p| p.area).sum()
    }

    pub fn mean_sigma(&self) -> f64 {
        self.pulses.iter().map(|p| p.sigma).sum::<f64>() / self.pulses.len().max(1) as f64
    }

    /// The same pulses with the sampled voltage replaced by fitted Gaussians.
    pub fn gaussian(&self) -> PulseTrain {
        PulseTrain {
            pulses: self.pulses.clone(),
            shape: PulseShape::Gaussian,
            n_jj: self.n_jj,
        }
    }

    /// `(t, V)` samples; Gaussian trains are rendered on a grid of step `dt`.
    pub fn waveform(&self, dt: f64) -> Vec<(f64, f64)> {
        match &self.shape {
            PulseShape::Sampled { t0, dt, samples } => samples
                .iter()
                .enumerate()
                .map(|(i, v)| (t0 + i as f64 * dt, *v))
                .collect(),
            PulseShape::Gaussian => {
                let (Some(first), Some(last)) = (self.pulses.first(), self.pulses.last()) else {
                    return Vec::new();
                };
                let t0 = first.t_center - 5.0 * first.sigma;
                let t1 = last.t_center + 5.0 * last.sigma;
                let n = ((t1 - t0) / dt).ceil() as usize + 1;
                (0..n)
                    .map(|i| {
                        let t = t0 + i as f64 * dt;
                        let v = self
                            .pulses
                            .iter()
                            .map(|p| {
                                let z = (t - p.t_center) / p.sigma;
                                p.area / ((TAU).sqrt() * p.sigma) * (-0.5 * z * z).exp()
                            })
                            .sum();
                        (t, v)
                    })
                    .collect()
            }
        }
    }
}

/// Cuts a locked trajectory into one pulse per 2π slip.
///
/// Each pulse spans ±1/(2f_d) around the time δ crosses an odd multiple of π;
/// its area is the exact phase advance over that window and σ comes from a
/// least-squares Gaussian fit to the voltage samples inside it. Windows that
/// reach past the record use the locked periodicity of the trajectory.
pub fn extract_pulses(traj: &PhaseTrajectory, n_jj: u32) -> Result<PulseTrain> {
    if traj.len() < 2 {
        return Err(domain("trajectory has fewer than two samples"));
    }
    let periods = traj.periods().round() as i64;
    let windings = traj.windings();
    let backward = traj
        .phase
        .windows(2)
        .any(|w| winding_index(w[1]) < winding_index(w[0]));
    if windings != periods || backward {
        return Err(Error::NotLocked { windings, periods });
    }
    let spp = traj
        .steps_per_period()
        .ok_or_else(|| domain("time step must divide the drive period"))?;

    let half = 0.5 / traj.f_d;
    let scale = n_jj as f64 * PHI0 / TAU;
    let mut crossings = Vec::with_capacity(windings.max(0) as usize);
    for i in 0..traj.len() - 1 {
        let (a, b) = (traj.phase[i], traj.phase[i + 1]);
        if winding_index(b) > winding_index(a) {
            let level = TAU * winding_index(b) as f64 - PI;
            let s = (level - a) / (b - a);
            crossings.push(traj.time(i) + s * traj.dt);
        }
    }

    let mut pulses = Vec::with_capacity(crossings.len());
    for &tc in &crossings {
        let area = scale * (traj.phase_periodic(tc + half) - traj.phase_periodic(tc - half));
        let lo = ((tc - half - traj.t0) / traj.dt).ceil() as i64;
        let hi = ((tc + half - traj.t0) / traj.dt).floor() as i64;
        let (x, y): (Vec<f64>, Vec<f64>) = (lo..=hi)
            .map(|i| {
                let t = traj.t0 + i as f64 * traj.dt;
                (t - tc, scale * traj.rate_periodic(i, spp))
            })
            .unzip();
        let fit = fit_auto(FitModel::Gaussian, &x, &y, 1e-10)?;
        pulses.push(Pulse {
            t_center: tc + fit.params[1],
            area,
            sigma: fit.params[2].abs(),
            sign: 1,
        });
    }
    Ok(PulseTrain {
        pulses,
        shape: PulseShape::Sampled {
            t0: traj.t0,
            dt: traj.dt,
            samples: traj.voltage(n_jj),
        },
        n_jj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};

    fn device() -> JpgParams {
        JpgParams::reference_device()
    }

    #[test]
    fn default_step_divides_period() {
        let p = device();
        let dt = default_dt(&p).unwrap();
        let spp = 1.0 / (p.f_d * dt);
        assert!((spp - spp.round()).abs() < 1e-9);
        assert_eq!(spp.round() as usize, 337);
    }

    #[test]
    fn supercurrent_branch_has_zero_voltage() {
        let p = JpgParams { i_rf: 0.0, i_b: 0.5 * device().ic, ..device() };
        let traj = simulate_with(&p, &SimConfig::default()).unwrap();
        let v = mean_voltage(&traj, 1).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
        let d = traj.phase[traj.len() - 1];
        assert!((d - 0.5f64.asin()).abs() < 1e-6);
    }

    #[test]
    fn free_running_junction_matches_closed_form() {
        let base = device();
        let p = JpgParams { i_rf: 0.0, i_b: 2.0 * base.ic, ..base };
        let cfg = SimConfig { measure_periods: 400, ..SimConfig::default() };
        let traj = simulate_with(&p, &cfg).unwrap();
        let v = mean_voltage(&traj, 1).unwrap();
        let want = base.ic * base.rs * 3f64.sqrt();
        assert_relative_eq!(v, want, max_relative = 2e-3);
    }

    #[test]
    fn step_size_and_duration_are_checked() {
        let p = device();
        let period = 1.0 / p.f_d;
        assert!(matches!(simulate_rcsj(&p, 100.0 * period, period / 10.0, 0.0), Err(Error::Config(_))));
        assert!(matches!(simulate_rcsj(&p, 10.0 * period, period / 400.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn mean_voltage_needs_ten_periods() {
        let p = device();
        let mut traj = simulate_rcsj(&p, 25.0 / p.f_d, default_dt(&p).unwrap(), 0.0).unwrap();
        let keep = traj.steps_per_period().unwrap() * 5 + 1;
        traj.phase.truncate(keep);
        traj.rate.truncate(keep);
        assert!(matches!(mean_voltage(&traj, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn locked_trajectory_slips_once_per_period() {
        let p = device();
        let cfg = SimConfig::default();
        let traj = simulate_with(&p, &cfg).unwrap();
        assert_eq!(traj.windings(), cfg.measure_periods as i64);
        let v = mean_voltage(&traj, p.n_jj).unwrap();
        let v1 = shapiro_voltage(p.n_jj, p.f_d, 1).unwrap();
        assert_relative_eq!(v, v1, max_relative = 1e-3);
    }

    #[test]
    fn extracted_pulses_are_quantized() {
        let p = device();
        let cfg = SimConfig::default();
        let traj = simulate_with(&p, &cfg).unwrap();
        let train = extract_pulses(&traj, p.n_jj).unwrap();
        assert_eq!(train.pulses.len(), cfg.measure_periods as usize);
        let quantum = p.n_jj as f64 * PHI0;
        for pulse in &train.pulses {
            assert_relative_eq!(pulse.area, quantum, max_relative = 1e-3);
        }
        assert_relative_eq!(train.total_area(), quantum * train.pulses.len() as f64, max_relative = 1e-3);
        assert!(train.pulses.windows(2).all(|w| w[1].t_center > w[0].t_center));
    }

    #[test]
    fn unlocked_trajectory_is_rejected() {
        let p = JpgParams { i_rf: 0.0, i_b: 2.0 * device().ic, ..device() };
        let traj = simulate_with(&p, &SimConfig::default()).unwrap();
        assert!(matches!(extract_pulses(&traj, 1), Err(Error::NotLocked { .. })));
    }

    #[test]
    fn halving_the_step_changes_voltage_little() {
        let p = device();
        let cfg = SimConfig::default();
        let dt = default_dt(&p).unwrap();
        let a = mean_voltage(&simulate_with(&p, &cfg).unwrap(), 1).unwrap();
        let half = SimConfig { dt: Some(dt / 2.0), ..cfg };
        let b = mean_voltage(&simulate_with(&p, &half).unwrap(), 1).unwrap();
        assert!(((a - b) / a).abs() < 1e-3);
    }

    #[test]
    fn locking_range_on_constructed_curves() {
        let v1 = shapiro_voltage(10, 1e9, 1).unwrap();
        let bias: Vec<f64> = (0..9).map(|i| i as f64 * 1e-4).collect();
        let flat = IvCurve::from_samples(&bias, &[v1; 9], 1e9, 0.0, 10);
        let r = detect_locking_range(&flat, 1, 1e-3).unwrap();
        assert_eq!((r.i_min, r.i_max), (bias[0], bias[8]));

        let mut v: Vec<f64> = bias.iter().map(|b| b * 1e-2).collect();
        for x in &mut v[3..6] {
            *x = v1;
        }
        let third = IvCurve::from_samples(&bias, &v, 1e9, 0.0, 10);
        let r = detect_locking_range(&third, 1, 1e-3).unwrap();
        assert_eq!((r.i_min, r.i_max), (bias[3], bias[5]));
        assert_relative_eq!(r.width, bias[5] - bias[3]);

        let none = IvCurve::from_samples(&bias, &[0.0; 9], 1e9, 0.0, 10);
        assert!(detect_locking_range(&none, 1, 1e-3).is_none());
    }

    #[test]
    fn best_power_is_argmax_with_small_tie_break() {
        let i_rf = [1.0, 2.0, 3.0];
        assert_eq!(best_power_index(&i_rf, &[Some(0.1e-3), Some(0.5e-3), Some(0.3e-3)]), Some(1));
        assert_eq!(best_power_index(&i_rf, &[None, Some(0.5e-3), Some(0.5e-3)]), Some(1));
        assert_eq!(best_power_index(&i_rf, &[None, None, None]), None);
    }

    #[test]
    fn no_rf_means_no_locking() {
        let p = device();
        let bias: Vec<f64> = (0..21).map(|i| i as f64 * 0.1 * p.ic).collect();
        let r = optimize_drive_power(&p, &[0.0], &bias, &SimConfig::default(), 1e-3, Strategy::Parallel);
        assert!(matches!(r, Err(Error::NoLocking)));
    }

    #[test]
    fn zero_drive_below_critical_current_is_flat() {
        let p = JpgParams { i_rf: 0.0, ..device() };
        let bias: Vec<f64> = (0..10).map(|i| i as f64 * 0.09 * p.ic).collect();
        let c = iv_curve(&p, &bias, &SimConfig::default(), Strategy::Parallel).unwrap();
        assert!(c.points.iter().all(|pt| pt.v_mean.unwrap().abs() < 1e-12));
        assert!(iv_curve(&p, &[2e-3, 1e-3], &SimConfig::default(), Strategy::Sequential).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn array_voltage_scales_linearly(n in 1u32..2000, ib in 0.0f64..2.0) {
            let base = JpgParams { n_jj: 1, ..device() };
            let p = JpgParams { i_b: ib * base.ic, ..base };
            let cfg = SimConfig { measure_periods: 20, transient_periods: 10, dt: None };
            let single = iv_curve(&p, &[p.i_b], &cfg, Strategy::Sequential).unwrap();
            let array = iv_curve(&JpgParams { n_jj: n, ..p }, &[p.i_b], &cfg, Strategy::Sequential).unwrap();
            let v1 = single.points[0].v_mean.unwrap();
            prop_assert_eq!(array.points[0].v_mean.unwrap(), n as f64 * v1);
        }
    }
}
