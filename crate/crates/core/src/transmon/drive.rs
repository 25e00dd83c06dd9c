// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use super::state::{c, Op3, C64};
use crate::error::{domain, Result};
use crate::quantum::{amplitude_factor, QubitParams};
use crate::rcsj::{PulseShape, PulseTrain};

/// Gaussian pulses are cut at this many widths on either side.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

/// Wraps an angle into [−π, π).
pub fn wrap_phase(phi: f64) -> f64 {
    (phi + PI).rem_euclid(TAU) - PI
}

/// Parametric train of Gaussian pulses arriving every `k` qubit periods.
///
/// Pulse `j` is centred at `start + ⌊k/2⌋·T_q + wrap(phase)/ω10 + j·k·T_q`,
/// so the train with phase φ rotates the qubit about the equatorial axis at
/// angle φ + π/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainDrive {
    pub k: u32,
    pub count: u32,
    /// Gaussian width (s).
    pub sigma: f64,
    /// Voltage area of each pulse at the qubit (V·s).
    pub area: f64,
    pub phase: f64,
    pub start: f64,
    pub period_q: f64,
}

impl TrainDrive {
    pub fn spacing(&self) -> f64 {
        self.k as f64 * self.period_q
    }

    pub fn center(&self, j: u32) -> f64 {
        let offset = (self.k / 2) as f64 * self.period_q + wrap_phase(self.phase) / TAU * self.period_q;
        self.start + offset + j as f64 * self.spacing()
    }

    pub fn duration(&self) -> f64 {
        self.count as f64 * self.spacing()
    }

    fn half_width(&self) -> f64 {
        TRUNCATION_SIGMAS * self.sigma
    }

    fn value(&self, t: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let hw = self.half_width();
        let c0 = self.center(0);
        let sp = self.spacing();
        let lo = ((t - hw - c0) / sp).ceil().max(0.0) as i64;
        let hi = (((t + hw - c0) / sp).floor() as i64).min(self.count as i64 - 1);
        let norm = self.area / ((TAU).sqrt() * self.sigma);
        (lo..=hi)
            .map(|j| {
                let z = (t - self.center(j as u32)) / self.sigma;
                if z.abs() <= TRUNCATION_SIGMAS {
                    norm * (-0.5 * z * z).exp()
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn windows(&self, out: &mut Vec<(f64, f64)>) {
        let hw = self.half_width();
        for j in 0..self.count {
            let c = self.center(j);
            out.push((c - hw, c + hw));
        }
    }
}

/// Gaussian-envelope carrier `A·g(t)·cos(ω10 t − φ)` truncated at ±2σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantDrive {
    pub start: f64,
    pub duration: f64,
    pub sigma: f64,
    /// Peak voltage at the qubit.
    pub amplitude: f64,
    pub phase: f64,
    pub omega: f64,
}

impl ResonantDrive {
    fn value(&self, t: f64) -> f64 {
        if t < self.start || t > self.start + self.duration {
            return 0.0;
        }
        let z = (t - self.start - 0.5 * self.duration) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp() * (self.omega * t - self.phase).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriveComponent {
    Train(TrainDrive),
    Resonant(ResonantDrive),
    /// Voltage at the qubit on a uniform grid, linearly interpolated.
    Sampled { t0: f64, dt: f64, samples: Vec<f64> },
}

impl DriveComponent {
    fn value(&self, t: f64) -> f64 {
        match self {
            DriveComponent::Train(tr) => tr.value(t),
            DriveComponent::Resonant(r) => r.value(t),
            DriveComponent::Sampled { t0, dt, samples } => {
                let u = (t - t0) / dt;
                if u < 0.0 || samples.is_empty() || u > (samples.len() - 1) as f64 {
                    return 0.0;
                }
                let i = (u.floor() as usize).min(samples.len().saturating_sub(2));
                let s = u - i as f64;
                if samples.len() == 1 {
                    samples[0]
                } else {
                    samples[i] * (1.0 - s) + samples[i + 1] * s
                }
            }
        }
    }

    fn shift(&mut self, dt_shift: f64) {
        match self {
            DriveComponent::Train(tr) => tr.start += dt_shift,
            DriveComponent::Resonant(r) => r.start += dt_shift,
            DriveComponent::Sampled { t0, .. } => *t0 += dt_shift,
        }
    }

    /// Smallest time scale the integrator must resolve.
    fn time_scale(&self) -> Option<f64> {
        match self {
            DriveComponent::Train(tr) => Some(tr.sigma),
            DriveComponent::Resonant(r) => Some(r.sigma),
            DriveComponent::Sampled { dt, .. } => Some(*dt),
        }
    }
}

/// Drive voltage `s(t)` at the qubit on `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriveSignal {
    pub components: Vec<DriveComponent>,
    pub duration: f64,
}

impl DriveSignal {
    pub fn idle(duration: f64) -> Self {
        Self {
            components: Vec::new(),
            duration,
        }
    }

    pub fn train(train: TrainDrive) -> Self {
        Self {
            duration: train.start + train.duration(),
            components: vec![DriveComponent::Train(train)],
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.components.iter().map(|c| c.value(t)).sum()
    }

    /// Appends `other` after the end of `self`.
    pub fn then(mut self, other: &DriveSignal) -> Self {
        let offset = self.duration;
        for comp in &other.components {
            let mut comp = comp.clone();
            comp.shift(offset);
            self.components.push(comp);
        }
        self.duration += other.duration;
        self
    }

    pub fn min_time_scale(&self) -> Option<f64> {
        self.components
            .iter()
            .filter_map(|c| c.time_scale())
            .min_by(f64::total_cmp)
    }

    /// Sorted, merged intervals outside which `s(t) = 0`.
    pub fn active_intervals(&self) -> Vec<(f64, f64)> {
        let mut raw = Vec::new();
        for comp in &self.components {
            match comp {
                DriveComponent::Train(tr) => tr.windows(&mut raw),
                DriveComponent::Resonant(r) => raw.push((r.start, r.start + r.duration)),
                DriveComponent::Sampled { t0, dt, samples } => {
                    raw.push((*t0, t0 + dt * samples.len().saturating_sub(1) as f64))
                }
            }
        }
        raw.retain(|(a, b)| b > a);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        merged
    }
}

/// Lab-frame Hamiltonian over ħ (rad/s): `Σz + i·s(t)·Ω·Y` with
/// `Σz = diag(0, ω10, ω10 + ω21)` and `Y` real antisymmetric with g–e element
/// −1 and e–f element −√2 above the diagonal.
pub fn hamiltonian_at(t: f64, qubit: &QubitParams, drive: &DriveSignal, coupling: f64) -> Op3 {
    let w10 = qubit.omega_10;
    let w21 = qubit.omega_21();
    let a = drive.value(t) * coupling;
    let y = drive_operator();
    let mut h = Op3::zeros();
    h[(1, 1)] = c(w10, 0.0);
    h[(2, 2)] = c(w10 + w21, 0.0);
    h + y.map(|z| z * c(0.0, a))
}

/// The real antisymmetric drive operator of the three-level transmon.
pub fn drive_operator() -> Op3 {
    let mut y = Op3::zeros();
    y[(0, 1)] = c(-1.0, 0.0);
    y[(1, 0)] = c(1.0, 0.0);
    y[(1, 2)] = c(-SQRT_2, 0.0);
    y[(2, 1)] = c(SQRT_2, 0.0);
    y
}

/// Drive operator seen in the frame rotating at ω10 on every rung at a time
/// where the qubit phase is `psi`.
pub fn rotated_drive_operator(psi: f64) -> Op3 {
    let e = C64::from_polar(1.0, psi);
    let ec = e.conj();
    let mut y = Op3::zeros();
    y[(0, 1)] = -ec;
    y[(1, 0)] = e;
    y[(1, 2)] = -ec * SQRT_2;
    y[(2, 1)] = e * SQRT_2;
    y
}

/// Schedules a generator pulse train at the qubit.
///
/// Parametric trains keep their mean area and width and are re-timed onto a
/// `k·T_q` grid; sampled waveforms keep their own timing. Amplitudes are
/// scaled by the line attenuation and the axis phase becomes a time offset φ/ω10.
pub fn synthesize_jpg_drive(
    train: &PulseTrain,
    attenuation_db: f64,
    k: u32,
    phase: f64,
    qubit: &QubitParams,
) -> Result<DriveSignal> {
    if k < 1 {
        return Err(domain("subharmonic k must be at least 1"));
    }
    let scale = amplitude_factor(attenuation_db);
    match &train.shape {
        PulseShape::Gaussian => {
            if train.pulses.is_empty() {
                return Ok(DriveSignal::idle(0.0));
            }
            let n = train.pulses.len() as f64;
            let area = train.pulses.iter().map(|p| p.area * p.sign as f64).sum::<f64>() / n;
            Ok(DriveSignal::train(TrainDrive {
                k,
                count: train.pulses.len() as u32,
                sigma: train.mean_sigma(),
                area: area * scale,
                phase,
                start: 0.0,
                period_q: qubit.period(),
            }))
        }
        PulseShape::Sampled { t0, dt, samples } => {
            let shift = wrap_phase(phase) / qubit.omega_10;
            let samples: Vec<f64> = samples.iter().map(|v| v * scale).collect();
            let duration = t0 + shift + dt * samples.len() as f64;
            Ok(DriveSignal {
                components: vec![DriveComponent::Sampled {
                    t0: t0 + shift,
                    dt: *dt,
                    samples,
                }],
                duration: duration.max(0.0),
            })
        }
    }
}

/// Gaussian-envelope resonant pulse on `[0, t_total]`.
pub fn synthesize_resonant_drive(
    sigma: f64,
    t_total: f64,
    amplitude: f64,
    phase: f64,
    qubit: &QubitParams,
) -> Result<DriveSignal> {
    if !(sigma > 0.0) || !(t_total > 0.0) {
        return Err(domain("sigma and t_total must be positive"));
    }
    Ok(DriveSignal {
        components: vec![DriveComponent::Resonant(ResonantDrive {
            start: 0.0,
            duration: t_total,
            sigma,
            amplitude,
            phase,
            omega: qubit.omega_10,
        })],
        duration: t_total,
    })
}

/// Axis phase of the named equatorial rotation axes.
pub fn axis_phase(axis: Axis) -> f64 {
    match axis {
        Axis::X => -PI / 2.0,
        Axis::Y => 0.0,
        Axis::MinusX => PI / 2.0,
        Axis::MinusY => PI,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    MinusX,
    MinusY,
}
