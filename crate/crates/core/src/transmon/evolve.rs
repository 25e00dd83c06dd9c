// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution in the frame rotating at ω10 on every rung.
//!
//! With `R(t) = diag(1, e^{iω10 t}, e^{2iω10 t})` the generator becomes
//! `diag(0, 0, 2πiα) + s(t)·Ω·Ỹ(ω10 t)`, which keeps every counter-rotating
//! term of the lab-frame drive. The frame equals the lab frame whenever
//! `ω10·t` is a multiple of 2π. Where `s(t) = 0` the evolution is applied in
//! closed form, so fixed-step RK4 only runs inside pulse windows.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::drive::{rotated_drive_operator, DriveSignal};
use super::state::{c, unitary_superop, DensityMatrix3, IdleEvolution, NoiseModel, Op3, QutritState, Superop, C64};
use crate::error::{Error, Result};
use crate::quantum::QubitParams;

/// Trace or norm drift tolerated before integration is declared diverged.
pub const TRACE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Fixed RK4 step inside pulse windows; `None` uses the largest allowed step.
    #[serde(default)]
    pub dt: Option<f64>,
}

/// Everything the integrator needs besides the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveContext {
    pub qubit: QubitParams,
    /// Ω per volt at the drive port (rad s⁻¹ V⁻¹).
    pub coupling: f64,
    pub noise: NoiseModel,
    pub integrator: IntegratorConfig,
}

impl DriveContext {
    pub fn new(qubit: QubitParams, coupling: f64, noise: NoiseModel) -> Self {
        Self {
            qubit,
            coupling,
            noise,
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn noiseless(&self) -> Self {
        Self {
            noise: NoiseModel::disabled(),
            ..*self
        }
    }

    /// Largest step allowed for `drive`: min(σ/20, T_q/100).
    pub fn max_step(&self, drive: &DriveSignal) -> f64 {
        let tq = self.qubit.period();
        let scale = drive.min_time_scale().unwrap_or(f64::INFINITY);
        (scale / 20.0).min(tq / 100.0)
    }

    fn step(&self, drive: &DriveSignal) -> Result<f64> {
        let max = self.max_step(drive);
        match self.integrator.dt {
            None => Ok(max),
            Some(dt) if dt > 0.0 && dt <= max * (1.0 + 1e-12) => Ok(dt),
            Some(dt) => Err(Error::Config(format!(
                "integrator dt = {dt:e} s exceeds min(σ/20, T_q/100) = {max:e} s"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Pure(QutritState),
    Mixed(DensityMatrix3),
}

impl InitialState {
    pub fn density(&self) -> DensityMatrix3 {
        match self {
            InitialState::Pure(p) => p.to_density(),
            InitialState::Mixed(r) => *r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
}

impl Evolution {
    pub fn final_state(&self) -> &DensityMatrix3 {
        self.states.last().expect("evolution records the final state")
    }
}

/// State representation advanced by the stepper.
trait Dynamics {
    type State: Clone;
    fn derivative(&self, gen: &Op3, s: &Self::State) -> Self::State;
    fn axpy(s: &Self::State, h: f64, d: &Self::State) -> Self::State;
    fn combine(s: &Self::State, h: f64, k: [&Self::State; 4]) -> Self::State;
    fn idle(&self, s: &Self::State, tau: f64) -> Self::State;
    fn drift(&self, s: &Self::State) -> f64;
}

struct Pure {
    idle: IdleEvolution,
}

impl Dynamics for Pure {
    type State = Vec<Vector3<C64>>;
    fn derivative(&self, gen: &Op3, s: &Self::State) -> Self::State {
        s.iter().map(|v| gen * v).collect()
    }
    fn axpy(s: &Self::State, h: f64, d: &Self::State) -> Self::State {
        s.iter().zip(d).map(|(a, b)| a + b * c(h, 0.0)).collect()
    }
    fn combine(s: &Self::State, h: f64, k: [&Self::State; 4]) -> Self::State {
        let w = c(h / 6.0, 0.0);
        s.iter()
            .enumerate()
            .map(|(i, v)| v + (k[0][i] + k[1][i] * c(2.0, 0.0) + k[2][i] * c(2.0, 0.0) + k[3][i]) * w)
            .collect()
    }
    fn idle(&self, s: &Self::State, tau: f64) -> Self::State {
        let u = self.idle.unitary(tau);
        s.iter().map(|v| u * v).collect()
    }
    fn drift(&self, s: &Self::State) -> f64 {
        s.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

struct Mixed {
    idle: IdleEvolution,
    jumps: Vec<Op3>,
    jump_norm: Op3,
    /// Whether states are density matrices (trace checked) or superoperator basis elements.
    physical: bool,
}

impl Mixed {
    fn new(idle: IdleEvolution, physical: bool) -> Self {
        let jumps = idle.noise.collapse_operators();
        let jump_norm = jumps
            .iter()
            .fold(Op3::zeros(), |acc, l| acc + l.adjoint() * l)
            .scale(0.5);
        Self {
            idle,
            jumps,
            jump_norm,
            physical,
        }
    }
}

impl Dynamics for Mixed {
    type State = Vec<Op3>;
    fn derivative(&self, gen: &Op3, s: &Self::State) -> Self::State {
        let k = gen - self.jump_norm;
        let kd = k.adjoint();
        s.iter()
            .map(|r| {
                let mut d = k * r + r * kd;
                for l in &self.jumps {
                    d += l * r * l.adjoint();
                }
                d
            })
            .collect()
    }
    fn axpy(s: &Self::State, h: f64, d: &Self::State) -> Self::State {
        s.iter().zip(d).map(|(a, b)| a + b.scale(h)).collect()
    }
    fn combine(s: &Self::State, h: f64, k: [&Self::State; 4]) -> Self::State {
        s.iter()
            .enumerate()
            .map(|(i, r)| r + (k[0][i] + k[1][i].scale(2.0) + k[2][i].scale(2.0) + k[3][i]).scale(h / 6.0))
            .collect()
    }
    fn idle(&self, s: &Self::State, tau: f64) -> Self::State {
        let sup = self.idle.superop(tau);
        s.iter()
            .map(|r| DensityMatrix3 { matrix: *r }.apply(&sup).matrix)
            .collect()
    }
    fn drift(&self, s: &Self::State) -> f64 {
        if !self.physical {
            return 0.0;
        }
        s.iter().map(|r| (r.trace().re - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Generator of the state derivative at time `t` in the rotating frame.
struct Generator<'a> {
    drive: &'a DriveSignal,
    coupling: f64,
    f10: f64,
    drift: Op3,
}

impl<'a> Generator<'a> {
    fn new(drive: &'a DriveSignal, ctx: &DriveContext) -> Self {
        let mut drift = Op3::zeros();
        drift[(2, 2)] = c(0.0, TAU * ctx.qubit.anharmonicity_hz);
        Self {
            drive,
            coupling: ctx.coupling,
            f10: ctx.qubit.f10(),
            drift,
        }
    }

    fn at(&self, t: f64) -> Op3 {
        let s = self.drive.value(t) * self.coupling;
        if s == 0.0 {
            return self.drift;
        }
        let cycles = self.f10 * t;
        let psi = TAU * (cycles - cycles.floor());
        self.drift + rotated_drive_operator(psi).scale(s)
    }
}

struct Stepper<'a, D: Dynamics> {
    dynamics: D,
    gen: Generator<'a>,
    intervals: Vec<(f64, f64)>,
    h_max: f64,
    next: usize,
    t: f64,
}

impl<'a, D: Dynamics> Stepper<'a, D> {
    fn new(dynamics: D, drive: &'a DriveSignal, ctx: &DriveContext) -> Result<Self> {
        let h_max = ctx.step(drive)?;
        let intervals = drive
            .active_intervals()
            .into_iter()
            .map(|(a, b)| (a.max(0.0), b.min(drive.duration)))
            .filter(|(a, b)| b > a)
            .collect();
        Ok(Self {
            dynamics,
            gen: Generator::new(drive, ctx),
            intervals,
            h_max,
            next: 0,
            t: 0.0,
        })
    }

    fn rk4(&self, s: D::State, t0: f64, t1: f64) -> D::State {
        let n = ((t1 - t0) / self.h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let mut s = s;
        for i in 0..n {
            let t = t0 + i as f64 * h;
            let g0 = self.gen.at(t);
            let gm = self.gen.at(t + 0.5 * h);
            let g1 = self.gen.at(t + h);
            let k1 = self.dynamics.derivative(&g0, &s);
            let k2 = self.dynamics.derivative(&gm, &D::axpy(&s, 0.5 * h, &k1));
            let k3 = self.dynamics.derivative(&gm, &D::axpy(&s, 0.5 * h, &k2));
            let k4 = self.dynamics.derivative(&g1, &D::axpy(&s, h, &k3));
            s = D::combine(&s, h, [&k1, &k2, &k3, &k4]);
        }
        s
    }

    fn advance_to(&mut self, mut s: D::State, target: f64) -> Result<D::State> {
        while self.t < target {
            while self.next < self.intervals.len() && self.intervals[self.next].1 <= self.t {
                self.next += 1;
            }
            let window = self.intervals.get(self.next).copied();
            match window {
                Some((a, b)) if a <= self.t => {
                    let end = b.min(target);
                    s = self.rk4(s, self.t, end);
                    self.t = end;
                    let drift = self.dynamics.drift(&s);
                    if !(drift <= TRACE_TOLERANCE) {
                        return Err(Error::Diverged {
                            time: end,
                            reason: format!("trace drift {drift:e}"),
                        });
                    }
                }
                _ => {
                    let end = window.map_or(target, |(a, _)| a.min(target));
                    s = self.dynamics.idle(&s, end - self.t);
                    self.t = end;
                }
            }
        }
        Ok(s)
    }
}

fn check_samples(samples: &[f64], duration: f64) -> Result<()> {
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be sorted".into()));
    }
    if samples.iter().any(|&t| !(0.0..=duration).contains(&t)) {
        return Err(Error::Domain("sample times must lie within the drive".into()));
    }
    Ok(())
}

/// Evolves `initial` under `drive` from t = 0 to the end of the drive and
/// records the state at each of `sample_times` plus the final time.
///
/// Noise-free pure states take the Schrödinger path; otherwise the Lindblad
/// equation is integrated.
pub fn evolve(
    initial: &InitialState,
    drive: &DriveSignal,
    ctx: &DriveContext,
    sample_times: &[f64],
) -> Result<Evolution> {
    ctx.noise.validate()?;
    check_samples(sample_times, drive.duration)?;
    let idle = IdleEvolution::new(&ctx.qubit, &ctx.noise);
    let mut times: Vec<f64> = sample_times.to_vec();
    times.push(drive.duration);
    let mut states = Vec::with_capacity(times.len());
    match initial {
        InitialState::Pure(psi) if !ctx.noise.enabled => {
            let mut st = Stepper::new(Pure { idle }, drive, ctx)?;
            let mut s = vec![psi.amplitudes];
            for &t in &times {
                s = st.advance_to(s, t)?;
                states.push(QutritState { amplitudes: s[0] }.to_density());
            }
        }
        _ => {
            let mut st = Stepper::new(Mixed::new(idle, true), drive, ctx)?;
            let mut s = vec![initial.density().matrix];
            for &t in &times {
                s = st.advance_to(s, t)?;
                states.push(DensityMatrix3 { matrix: s[0] });
            }
        }
    }
    Ok(Evolution { times, states })
}

/// Pure-state evolution to the end of a noise-free drive.
pub fn evolve_pure(initial: &QutritState, drive: &DriveSignal, ctx: &DriveContext) -> Result<QutritState> {
    let mut st = Stepper::new(Pure { idle: IdleEvolution::new(&ctx.qubit, &NoiseModel::disabled()) }, drive, ctx)?;
    let s = st.advance_to(vec![initial.amplitudes], drive.duration)?;
    Ok(QutritState { amplitudes: s[0] })
}

/// Propagator of a noise-free drive.
pub fn gate_unitary(drive: &DriveSignal, ctx: &DriveContext) -> Result<Op3> {
    let idle = IdleEvolution::new(&ctx.qubit, &NoiseModel::disabled());
    let mut st = Stepper::new(Pure { idle }, drive, ctx)?;
    let basis: Vec<Vector3<C64>> = (0..3).map(|i| QutritState::basis(i).amplitudes).collect();
    let cols = st.advance_to(basis, drive.duration)?;
    Ok(Op3::from_columns(&cols))
}

/// Channel implemented by `drive` under the context noise.
pub fn gate_superop(drive: &DriveSignal, ctx: &DriveContext) -> Result<Superop> {
    ctx.noise.validate()?;
    if !ctx.noise.enabled {
        return Ok(unitary_superop(&gate_unitary(drive, ctx)?));
    }
    let idle = IdleEvolution::new(&ctx.qubit, &ctx.noise);
    let mut st = Stepper::new(Mixed::new(idle, false), drive, ctx)?;
    let basis: Vec<Op3> = (0..9)
        .map(|k| {
            let mut m = Op3::zeros();
            m[(k % 3, k / 3)] = c(1.0, 0.0);
            m
        })
        .collect();
    let out = st.advance_to(basis, drive.duration)?;
    let mut s = Superop::zeros();
    for (k, m) in out.iter().enumerate() {
        for (r, v) in m.as_slice().iter().enumerate() {
            s[(r, k)] = *v;
        }
    }
    Ok(s)
}

/// `exp(a·Ỹ(φ))` for the drive operator with g–e element 1 and e–f element
/// `ef`, phased by `φ`: Rodrigues' formula on the real skew-symmetric
/// generator, conjugated by `diag(1, e^{iφ}, e^{2iφ})`.
pub fn drive_rotation(a: f64, phi: f64, ef: f64) -> Op3 {
    let mut y = Op3::zeros();
    y[(0, 1)] = c(-1.0, 0.0);
    y[(1, 0)] = c(1.0, 0.0);
    y[(1, 2)] = c(-ef, 0.0);
    y[(2, 1)] = c(ef, 0.0);
    let w = (1.0 + ef * ef).sqrt();
    let u = Op3::identity() + y.scale((a * w).sin() / w) + (y * y).scale((1.0 - (a * w).cos()) / (w * w));
    let d = Op3::from_diagonal(&Vector3::new(c(1.0, 0.0), C64::from_polar(1.0, phi), C64::from_polar(1.0, 2.0 * phi)));
    d * u * d.adjoint()
}

/// Free precession over `k` qubit periods in the lab frame,
/// `diag(1, e^{−iω10 kT_q}, e^{−i(ω10+ω21) kT_q})`, with `ω10·T_q = 2π` reduced exactly.
pub fn free_precession(k: u32, qubit: &QubitParams) -> Op3 {
    let cycles = k as f64 * qubit.omega_21() / qubit.omega_10;
    let frac = cycles - cycles.floor();
    Op3::from_diagonal(&Vector3::new(c(1.0, 0.0), c(1.0, 0.0), C64::from_polar(1.0, -TAU * frac)))
}

/// Delta-function pulse train: ν times a rotation `exp(δθ/2·Ỹ(φ))` followed by
/// free precession over `k` qubit periods.
pub fn delta_pulse_propagate(
    initial: &QutritState,
    delta_theta: f64,
    k: u32,
    nu: u32,
    axis_phase: f64,
    qubit: &QubitParams,
) -> QutritState {
    delta_pulse_propagate_with(initial, delta_theta, k, nu, axis_phase, qubit, std::f64::consts::SQRT_2)
}

/// [`delta_pulse_propagate`] with an explicit e–f to g–e coupling ratio;
/// zero truncates the transmon to two levels.
pub fn delta_pulse_propagate_with(
    initial: &QutritState,
    delta_theta: f64,
    k: u32,
    nu: u32,
    axis_phase: f64,
    qubit: &QubitParams,
    ef_ratio: f64,
) -> QutritState {
    let period = free_precession(k, qubit) * drive_rotation(0.5 * delta_theta, axis_phase, ef_ratio);
    let mut psi = initial.amplitudes;
    for _ in 0..nu {
        psi = period * psi;
    }
    QutritState { amplitudes: psi }
}

/// Populations after every period of a delta-pulse train, index 0 being the initial state.
pub fn delta_pulse_series(
    initial: &QutritState,
    delta_theta: f64,
    k: u32,
    nu_max: u32,
    axis_phase: f64,
    qubit: &QubitParams,
) -> Vec<[f64; 3]> {
    let period = free_precession(k, qubit) * drive_rotation(0.5 * delta_theta, axis_phase, std::f64::consts::SQRT_2);
    let mut psi = initial.amplitudes;
    let mut out = Vec::with_capacity(nu_max as usize + 1);
    out.push(QutritState { amplitudes: psi }.populations());
    for _ in 0..nu_max {
        psi = period * psi;
        out.push(QutritState { amplitudes: psi }.populations());
    }
    out
}

/// One period of a delta-pulse train under noise: the pulse, then `k` idle periods.
pub fn delta_period_superop(
    delta_theta: f64,
    k: u32,
    axis_phase: f64,
    qubit: &QubitParams,
    noise: &NoiseModel,
) -> Superop {
    let pulse = unitary_superop(&drive_rotation(0.5 * delta_theta, axis_phase, std::f64::consts::SQRT_2));
    let idle = IdleEvolution::new(qubit, noise).superop(k as f64 * qubit.period());
    idle * pulse
}

/// Rotation angle of the g–e subspace of a unitary, from its |g⟩ → |e⟩ population.
pub fn rotation_angle(u: &Op3) -> f64 {
    let p = u[(1, 0)].norm_sqr().clamp(0.0, 1.0);
    2.0 * p.sqrt().asin()
}
