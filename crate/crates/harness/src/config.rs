// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: one JSON file with `device`, `experiment` and `output` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jpgsim_core::quantum::{JpgParams, QubitParams};
use jpgsim_core::rcsj::SimConfig;
use jpgsim_core::transmon::NoiseModel;

use crate::HarnessError;

/// Overrides `output.directory` when set and `--out` is absent.
pub const OUT_DIR_ENV: &str = "JPGSIM_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub device: DeviceConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub jpg: JpgParams,
    pub qubit: QubitParams,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub rcsj: SimConfig,
    /// Pick the extra line attenuation so the simulated pulses give this many
    /// periods per π rotation. `None` keeps `jpg.extra_attenuation_db`.
    #[serde(default)]
    pub target_nu_pi: Option<u32>,
    /// Readout data, stored for the record only.
    #[serde(default)]
    pub cavity: Option<CavityParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    pub frequency_hz: f64,
    pub linewidth_hz: f64,
    pub dispersive_shift_hz: f64,
}

/// Evenly spaced `points` values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + i as f64 * step).collect()
    }

    fn validate(&self, name: &str) -> Result<(), HarnessError> {
        if self.points < 1 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(HarnessError::Config(format!("{name}: grid needs finite bounds and at least one point")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub iv: IvConfig,
    pub locking: LockingConfig,
    pub calibrate: CalibrateConfig,
    pub rabi: RabiConfig,
    pub rabi_stability: StabilityConfig,
    pub t1: DecayConfig,
    pub ramsey: RamseyConfig,
    pub resonant: ResonantConfig,
    pub rb: RbSection,
    pub irb: IrbSection,
    pub leakage: LeakageConfig,
    pub checks: Checks,
}

/// Bias grids are in units of the junction critical current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IvConfig {
    pub bias_ic: Grid,
    /// Drive amplitude in units of Ic; defaults to `device.jpg.i_rf`.
    pub i_rf_ic: Option<f64>,
}

impl Default for IvConfig {
    fn default() -> Self {
        Self {
            bias_ic: Grid::new(0.0, 2.0, 81),
            i_rf_ic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LockingConfig {
    pub i_rf_ic: Grid,
    pub bias_ic: Grid,
    pub rel_tol: f64,
}

impl Default for LockingConfig {
    fn default() -> Self {
        Self {
            i_rf_ic: Grid::new(0.6, 1.8, 13),
            bias_ic: Grid::new(0.0, 1.0, 41),
            rel_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    /// Bias points inside the locking range for the ν_π table.
    pub bias_points: usize,
    pub nu_max: u32,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            bias_points: 9,
            nu_max: 800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RabiKind {
    /// Gaussian pulses at the simulated width.
    Jpg,
    /// Delta pulses at the device tip angle.
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    pub nu_max: u32,
    pub drive: RabiKind,
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self {
            nu_max: 800,
            drive: RabiKind::Jpg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub duration_s: f64,
    /// Window length in Rabi oscillations.
    pub window_oscillations: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            duration_s: 10e-6,
            window_oscillations: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub delays_s: Grid,
    pub shots: u32,
    /// Seeded shot-noise repetitions per drive arm.
    pub repetitions: u32,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            delays_s: Grid::new(0.0, 60e-6, 61),
            shots: 1000,
            repetitions: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseyConfig {
    pub delays_s: Grid,
    pub detuning_hz: f64,
    pub shots: u32,
    pub repetitions: u32,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        Self {
            delays_s: Grid::new(0.0, 30e-6, 121),
            detuning_hz: 0.5e6,
            shots: 1000,
            repetitions: 100,
        }
    }
}

/// Gaussian-envelope carrier pulses used as the comparison arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonantConfig {
    pub sigma_s: f64,
    pub duration_s: f64,
}

impl Default for ResonantConfig {
    fn default() -> Self {
        Self {
            sigma_s: 15e-9,
            duration_s: 60e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbChannelKind {
    Ideal,
    Depolarizing,
    Delta,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDrive {
    Jpg,
    Resonant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbSection {
    pub lengths: Vec<u32>,
    pub n_seq: u32,
    pub shots: Option<u32>,
    pub channel: RbChannelKind,
    pub drive: GateDrive,
    /// Per-Clifford parameter of the depolarizing channel.
    pub depolarizing_p: f64,
    pub buffer_s: f64,
    /// Short sequences re-simulated directly to validate the channel cache.
    pub verify_sequences: u32,
}

impl Default for RbSection {
    fn default() -> Self {
        Self {
            lengths: (0..9).map(|i| 1 << i).collect(),
            n_seq: 30,
            shots: None,
            channel: RbChannelKind::Full,
            drive: GateDrive::Jpg,
            depolarizing_p: 0.99,
            buffer_s: 5e-9,
            verify_sequences: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub gate: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrbSection {
    /// Primitive names: I, X, Y, X/2, Y/2, -X/2, -Y/2.
    pub gates: Vec<String>,
    /// Extra depolarization applied to one interleaved gate.
    pub inject: Option<Injection>,
}

impl Default for IrbSection {
    fn default() -> Self {
        Self {
            gates: ["X", "Y", "X/2", "Y/2", "-X/2", "-Y/2"].map(String::from).to_vec(),
            inject: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageConfig {
    pub alpha_frac: Vec<f64>,
    pub sigma_n: Vec<f64>,
    pub k: u32,
    /// The line attenuation is fixed so the device qubit reaches
    /// `reference_nu_pi` at `reference_sigma_n`.
    pub reference_sigma_n: f64,
    pub reference_nu_pi: u32,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        Self {
            alpha_frac: vec![0.03, 0.033, 0.04, 0.05, 0.06, 0.07],
            sigma_n: vec![0.0, 0.01, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3],
            k: 2,
            reference_sigma_n: 0.15,
            reference_nu_pi: 187,
        }
    }
}

/// Acceptance bands used by `--check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub shapiro_rel_tol: f64,
    pub nu_pi_tol: f64,
    pub t1_rel_tol: f64,
    pub t2_rel_tol: f64,
    pub rb_ratio: [f64; 2],
    pub leakage_flat_band: [f64; 2],
    pub leakage_alpha_band: [f64; 2],
    pub leakage_check_alpha: f64,
    pub nu_pi_drift_max: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            shapiro_rel_tol: 1e-3,
            nu_pi_tol: 1.0,
            t1_rel_tol: 0.1,
            t2_rel_tol: 0.1,
            rb_ratio: [1.0, 2.0],
            leakage_flat_band: [0.7e-3, 3e-3],
            leakage_alpha_band: [0.7e-3, 3e-3],
            leakage_check_alpha: 0.033,
            nu_pi_drift_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub plot: bool,
    pub report: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            plot: false,
            report: true,
        }
    }
}

impl Config {
    /// Device values of the measured generator and qubit with default experiments.
    pub fn device_default() -> Self {
        Self {
            device: DeviceConfig {
                jpg: JpgParams::reference_device(),
                qubit: QubitParams::reference_device(),
                noise: NoiseConfig::default(),
                rcsj: SimConfig::default(),
                target_nu_pi: Some(187),
                cavity: Some(CavityParams {
                    frequency_hz: 7.4498e9,
                    linewidth_hz: 0.850e6,
                    dispersive_shift_hz: 920e3,
                }),
            },
            experiment: ExperimentConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), HarnessError> {
        let bytes = std::fs::read(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| HarnessError::Config("config is not UTF-8".into()))?;
        Ok((Self::from_json(text)?, bytes))
    }

    pub fn noise(&self) -> NoiseModel {
        if self.device.noise.enabled {
            NoiseModel::from_qubit(&self.device.qubit).expect("validated")
        } else {
            NoiseModel::disabled()
        }
    }

    /// Output directory: explicit argument, then the environment, then the file.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.directory.clone(),
        }
    }

    /// Checks every embedded record before anything runs.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |e: jpgsim_core::Error| HarnessError::Config(e.to_string());
        let d = &self.device;
        d.jpg.validate_for_qubit_drive().map_err(err)?;
        d.qubit.validate().map_err(err)?;
        if d.noise.enabled {
            NoiseModel::from_qubit(&d.qubit).map_err(err)?;
        }
        if d.rcsj.measure_periods < 20 {
            return Err(HarnessError::Config("rcsj.measure_periods must be at least 20".into()));
        }
        if d.target_nu_pi == Some(0) {
            return Err(HarnessError::Config("target_nu_pi must be positive".into()));
        }
        let e = &self.experiment;
        e.iv.bias_ic.validate("iv.bias_ic")?;
        e.locking.i_rf_ic.validate("locking.i_rf_ic")?;
        e.locking.bias_ic.validate("locking.bias_ic")?;
        if !(e.locking.rel_tol > 0.0) {
            return Err(HarnessError::Config("locking.rel_tol must be positive".into()));
        }
        if e.calibrate.bias_points < 3 {
            return Err(HarnessError::Config("calibrate.bias_points must be at least 3".into()));
        }
        for (name, nu) in [("calibrate.nu_max", e.calibrate.nu_max), ("rabi.nu_max", e.rabi.nu_max)] {
            if nu < 8 {
                return Err(HarnessError::Config(format!("{name} must be at least 8")));
            }
        }
        if !(e.rabi_stability.duration_s > 0.0) || !(e.rabi_stability.window_oscillations >= 1.0) {
            return Err(HarnessError::Config("rabi_stability needs a positive duration and ≥ 1 oscillation per window".into()));
        }
        e.t1.delays_s.validate("t1.delays_s")?;
        e.ramsey.delays_s.validate("ramsey.delays_s")?;
        for (name, g) in [("t1", &e.t1.delays_s), ("ramsey", &e.ramsey.delays_s)] {
            if g.points < 8 || g.start < 0.0 || g.stop <= g.start {
                return Err(HarnessError::Config(format!("{name}.delays_s needs ≥ 8 increasing non-negative delays")));
            }
        }
        if e.t1.shots == 0 || e.ramsey.shots == 0 {
            return Err(HarnessError::Config("shots must be positive".into()));
        }
        if !(e.resonant.sigma_s > 0.0) || !(e.resonant.duration_s > 0.0) {
            return Err(HarnessError::Config("resonant pulse sigma and duration must be positive".into()));
        }
        let rb = &e.rb;
        let mut lengths = rb.lengths.clone();
        lengths.sort_unstable();
        lengths.dedup();
        if lengths.len() < 3 || rb.n_seq < 2 || rb.shots == Some(0) {
            return Err(HarnessError::Config("rb needs ≥ 3 distinct lengths, ≥ 2 sequences and positive shots".into()));
        }
        if !(0.0..=1.0).contains(&rb.depolarizing_p) || !(rb.buffer_s >= 0.0) {
            return Err(HarnessError::Config("rb.depolarizing_p must lie in [0, 1] and buffer_s ≥ 0".into()));
        }
        for g in &e.irb.gates {
            crate::pipeline::primitive_by_name(g)?;
        }
        if let Some(inj) = &e.irb.inject {
            crate::pipeline::primitive_by_name(&inj.gate)?;
            if !(0.0..=1.0).contains(&inj.p) {
                return Err(HarnessError::Config("irb.inject.p must lie in [0, 1]".into()));
            }
        }
        let lk = &e.leakage;
        if lk.alpha_frac.is_empty() || lk.sigma_n.is_empty() || lk.k < 2 {
            return Err(HarnessError::Config("leakage needs α and σ_n values and k ≥ 2".into()));
        }
        if lk.alpha_frac.iter().any(|a| !(*a > 0.0 && *a < 0.5)) || lk.sigma_n.iter().any(|s| !(*s >= 0.0)) {
            return Err(HarnessError::Config("leakage α must lie in (0, 0.5) and σ_n ≥ 0".into()));
        }
        if !(lk.reference_sigma_n >= 0.0) || lk.reference_nu_pi == 0 {
            return Err(HarnessError::Config("leakage reference point is invalid".into()));
        }
        Ok(())
    }
}
