// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Generator calibration and the gate set built from it.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use jpgsim_core::parallel::{map_with, Strategy};
use jpgsim_core::quantum::{extra_attenuation_for_nu_pi, port_coupling, JpgParams};
use jpgsim_core::rb::{GateLayout, Primitive};
use jpgsim_core::rcsj::{extract_pulses, optimize_drive_power, simulate_with, LockingRange, PulseTrain};
use jpgsim_core::transmon::{
    axis_phase, calibrate_resonant, rabi_scan, synthesize_jpg_drive, Axis, DriveComponent, DriveContext, NoiseModel,
    PulseSpec, RabiDrive, RabiScan,
};

use crate::config::{Config, GateDrive};
use crate::HarnessError;

pub fn primitive_by_name(name: &str) -> Result<Primitive, HarnessError> {
    Primitive::ALL
        .into_iter()
        .find(|p| p.name() == name)
        .ok_or_else(|| HarnessError::Config(format!("unknown gate {name:?}")))
}

fn stage<T>(name: &'static str, r: jpgsim_core::Result<T>) -> Result<T, HarnessError> {
    r.map_err(|source| HarnessError::Simulation { stage: name, source })
}

/// Pulses of a locked generator at its configured bias and drive.
pub fn generator_pulses(cfg: &Config, jpg: &JpgParams) -> Result<PulseTrain, HarnessError> {
    let traj = stage("rcsj", simulate_with(jpg, &cfg.device.rcsj))?;
    stage("pulse extraction", extract_pulses(&traj, jpg.n_jj))
}

/// Extra attenuation that yields the configured ν_π for pulses of width `sigma`.
pub fn extra_attenuation(cfg: &Config, sigma: f64) -> Result<f64, HarnessError> {
    let d = &cfg.device;
    match d.target_nu_pi {
        None => Ok(d.jpg.extra_attenuation_db),
        Some(nu) => stage(
            "attenuation",
            extra_attenuation_for_nu_pi(&d.jpg, &d.qubit, nu as f64, sigma / d.qubit.period()),
        ),
    }
}

/// Gate parameters of a generator operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct JpgGate {
    pub i_b: f64,
    pub sigma: f64,
    /// Per-pulse area at the qubit (V·s).
    pub area: f64,
    pub extra_attenuation_db: f64,
    pub coupling: f64,
    pub scan: RabiScan,
    pub pulses: PulseTrain,
}

impl JpgGate {
    pub fn nu_pi(&self) -> Result<u32, HarnessError> {
        self.scan.nu_pi_pulses().ok_or_else(|| HarnessError::Simulation {
            stage: "rabi",
            source: jpgsim_core::Error::Fit("no Rabi maximum could be located".into()),
        })
    }

    pub fn rabi_drive(&self, k: u32) -> RabiDrive {
        RabiDrive::Train {
            k,
            sigma: self.sigma,
            area: self.area,
            phase: axis_phase(Axis::X),
        }
    }
}

/// Extracts pulses at `jpg`'s bias, places them at the qubit and finds ν_π
/// from a noise-free Rabi scan.
pub fn build_gate(cfg: &Config, jpg: &JpgParams, extra_db: Option<f64>, nu_max: u32) -> Result<JpgGate, HarnessError> {
    let q = &cfg.device.qubit;
    let pulses = generator_pulses(cfg, jpg)?;
    let extra = match extra_db {
        Some(v) => v,
        None => extra_attenuation(cfg, pulses.mean_sigma())?,
    };
    let jpg = JpgParams {
        extra_attenuation_db: extra,
        ..*jpg
    };
    let drive = stage(
        "synthesis",
        synthesize_jpg_drive(&pulses.gaussian(), jpg.total_attenuation_db(), jpg.subharmonic_k, axis_phase(Axis::X), q),
    )?;
    let Some(DriveComponent::Train(train)) = drive.components.first() else {
        return Err(HarnessError::Simulation {
            stage: "synthesis",
            source: jpgsim_core::Error::Consistency("generator produced no pulses".into()),
        });
    };
    let coupling = stage("coupling", port_coupling(jpg.c_c, q))?;
    let ctx = DriveContext::new(*q, coupling, NoiseModel::disabled());
    let rabi = RabiDrive::Train {
        k: jpg.subharmonic_k,
        sigma: train.sigma,
        area: train.area,
        phase: axis_phase(Axis::X),
    };
    let scan = stage("rabi", rabi_scan(&rabi, nu_max, &ctx))?;
    Ok(JpgGate {
        i_b: jpg.i_b,
        sigma: train.sigma,
        area: train.area,
        extra_attenuation_db: extra,
        coupling,
        scan,
        pulses,
    })
}

/// The generator gate at the configured device operating point.
pub fn device_gate(cfg: &Config) -> Result<JpgGate, HarnessError> {
    build_gate(cfg, &cfg.device.jpg, None, cfg.experiment.calibrate.nu_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub i_b: f64,
    pub sigma: f64,
    pub area: f64,
    pub nu_pi_fit: Option<f64>,
    pub nu_pi: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub best_i_rf: f64,
    pub locking_range: LockingRange,
    pub power_scan: Vec<(f64, Option<LockingRange>)>,
    pub extra_attenuation_db: f64,
    pub table: Vec<CalibrationRow>,
    pub chosen_i_b: f64,
    pub nu_pi: u32,
}

/// Index of the row where ν_π changes least with bias; ties go to the row
/// closest to the middle of the range.
pub fn flattest(bias: &[f64], nu: &[f64]) -> Option<usize> {
    let n = bias.len();
    if n < 2 {
        return None;
    }
    let slope = |i: usize| {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        ((nu[b] - nu[a]) / (bias[b] - bias[a])).abs()
    };
    let mid = 0.5 * (bias[0] + bias[n - 1]);
    (0..n).filter(|&i| nu[i].is_finite()).min_by(|&i, &j| {
        slope(i)
            .total_cmp(&slope(j))
            .then((bias[i] - mid).abs().total_cmp(&(bias[j] - mid).abs()))
    })
}

pub fn calibrate(cfg: &Config, strategy: Strategy) -> Result<(CalibrationRecord, JpgGate), HarnessError> {
    let d = &cfg.device;
    let e = &cfg.experiment;
    let ic = d.jpg.ic;
    let powers: Vec<f64> = e.locking.i_rf_ic.values().iter().map(|v| v * ic).collect();
    let bias: Vec<f64> = e.locking.bias_ic.values().iter().map(|v| v * ic).collect();
    let scan = stage(
        "locking",
        optimize_drive_power(&d.jpg, &powers, &bias, &d.rcsj, e.locking.rel_tol, strategy),
    )?;
    let range = scan.best_range;
    let jpg = JpgParams {
        i_rf: scan.best_i_rf,
        ..d.jpg
    };
    let mid = generator_pulses(cfg, &JpgParams {
        i_b: range.midpoint(),
        ..jpg
    })?;
    let extra = extra_attenuation(cfg, mid.mean_sigma())?;

    let n = e.calibrate.bias_points;
    let points: Vec<f64> = (0..n)
        .map(|i| range.i_min + (range.i_max - range.i_min) * i as f64 / (n - 1) as f64)
        .collect();
    let gates = map_with(strategy, &points, |&i_b| {
        build_gate(cfg, &JpgParams { i_b, ..jpg }, Some(extra), e.calibrate.nu_max)
    });
    let gates = gates.into_iter().collect::<Result<Vec<_>, _>>()?;
    let table: Vec<CalibrationRow> = gates
        .iter()
        .map(|g| CalibrationRow {
            i_b: g.i_b,
            sigma: g.sigma,
            area: g.area,
            nu_pi_fit: g.scan.nu_pi,
            nu_pi: g.scan.nu_pi_pulses(),
        })
        .collect();
    let nu: Vec<f64> = table.iter().map(|r| r.nu_pi_fit.unwrap_or(f64::NAN)).collect();
    let best = flattest(&points, &nu).ok_or_else(|| HarnessError::Simulation {
        stage: "rabi",
        source: jpgsim_core::Error::Fit("no bias point gave a usable Rabi fit".into()),
    })?;
    let gate = gates[best].clone();
    let record = CalibrationRecord {
        best_i_rf: scan.best_i_rf,
        locking_range: range,
        power_scan: scan.entries,
        extra_attenuation_db: extra,
        chosen_i_b: gate.i_b,
        nu_pi: gate.nu_pi()?,
        table,
    };
    Ok((record, gate))
}

/// Resonant π and π/2 pulses calibrated against the noise-free dynamics.
pub fn resonant_gates(cfg: &Config, coupling: f64) -> Result<(PulseSpec, PulseSpec), HarnessError> {
    let r = &cfg.experiment.resonant;
    let ctx = DriveContext::new(cfg.device.qubit, coupling, NoiseModel::disabled());
    let amp = |theta| stage("resonant calibration", calibrate_resonant(r.sigma_s, r.duration_s, theta, &ctx));
    let spec = |amplitude| PulseSpec::Resonant {
        sigma: r.sigma_s,
        duration: r.duration_s,
        amplitude,
    };
    Ok((spec(amp(PI)?), spec(amp(FRAC_PI_2)?)))
}

pub fn jpg_gates(cfg: &Config, gate: &JpgGate) -> Result<(PulseSpec, PulseSpec), HarnessError> {
    let nu = gate.nu_pi()?;
    let spec = |count| PulseSpec::Jpg {
        k: cfg.device.jpg.subharmonic_k,
        count,
        sigma: gate.sigma,
        area: gate.area,
    };
    Ok((spec(nu), spec(nu.div_ceil(2))))
}

pub fn layout(cfg: &Config, drive: GateDrive, gate: &JpgGate) -> Result<GateLayout, HarnessError> {
    let (pi, half_pi) = match drive {
        GateDrive::Jpg => jpg_gates(cfg, gate)?,
        GateDrive::Resonant => resonant_gates(cfg, gate.coupling)?,
    };
    Ok(GateLayout {
        pi,
        half_pi,
        buffer: cfg.experiment.rb.buffer_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattest_prefers_small_slope_then_centre() {
        let b = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(flattest(&b, &[10.0, 8.0, 7.0, 7.0, 9.0]), Some(2));
        assert_eq!(flattest(&b, &[5.0, 5.0, 5.0, 5.0, 5.0]), Some(2));
        assert_eq!(flattest(&b, &[f64::NAN, 1.0, 2.0, 3.0, 4.0]), Some(2));
        assert_eq!(flattest(&[1.0], &[1.0]), None);
    }

    #[test]
    fn primitive_names_resolve() {
        for p in Primitive::ALL {
            assert_eq!(primitive_by_name(p.name()).unwrap(), p);
        }
        assert!(primitive_by_name("Z").is_err());
    }
}
