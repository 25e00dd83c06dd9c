// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-qubit Clifford randomized benchmarking on the qutrit channels.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fit::{nlls_fit, FitModel, FitOptions, FitResult};
use crate::parallel::{map_range, map_with, Strategy};
use crate::quantum::QubitParams;
use crate::transmon::{
    axis_phase, delta_period_superop, drive_rotation, evolve, gate_superop, unitary_superop, Axis, DensityMatrix3,
    DriveContext, DriveSignal, IdleEvolution, InitialState, Op3, PulseSpec, Superop, C64,
};

pub type Op2 = Matrix2<C64>;

/// Physical gates from which every Clifford is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Primitive {
    Idle,
    X,
    Y,
    X2,
    Y2,
    MX2,
    MY2,
}

impl Primitive {
    pub const ALL: [Primitive; 7] = [
        Primitive::Idle,
        Primitive::X,
        Primitive::Y,
        Primitive::X2,
        Primitive::Y2,
        Primitive::MX2,
        Primitive::MY2,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|p| *p == self).expect("listed")
    }

    /// Rotation angle and axis, or `None` for the idle.
    pub fn rotation(self) -> Option<(f64, Axis)> {
        match self {
            Primitive::Idle => None,
            Primitive::X => Some((PI, Axis::X)),
            Primitive::Y => Some((PI, Axis::Y)),
            Primitive::X2 => Some((FRAC_PI_2, Axis::X)),
            Primitive::Y2 => Some((FRAC_PI_2, Axis::Y)),
            Primitive::MX2 => Some((FRAC_PI_2, Axis::MinusX)),
            Primitive::MY2 => Some((FRAC_PI_2, Axis::MinusY)),
        }
    }

    /// Qubit-subspace unitary, taken from the same rotation map the drive uses.
    pub fn unitary(self) -> Op2 {
        match self.rotation() {
            None => Op2::identity(),
            Some((theta, axis)) => drive_rotation(0.5 * theta, axis_phase(axis), 0.0)
                .fixed_view::<2, 2>(0, 0)
                .into_owned(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Idle => "I",
            Primitive::X => "X",
            Primitive::Y => "Y",
            Primitive::X2 => "X/2",
            Primitive::Y2 => "Y/2",
            Primitive::MX2 => "-X/2",
            Primitive::MY2 => "-Y/2",
        }
    }
}

use Primitive::{Idle, MX2, MY2, X, X2, Y, Y2};

/// Time-ordered decompositions of the 24 single-qubit Cliffords.
const DECOMPOSITION: [&[Primitive]; 24] = [
    &[Idle],
    &[X],
    &[Y],
    &[Y, X],
    &[X2, Y2],
    &[X2, MY2],
    &[MX2, Y2],
    &[MX2, MY2],
    &[Y2, X2],
    &[Y2, MX2],
    &[MY2, X2],
    &[MY2, MX2],
    &[X2],
    &[MX2],
    &[Y2],
    &[MY2],
    &[MX2, Y2, X2],
    &[MX2, MY2, X2],
    &[X, Y2],
    &[X, MY2],
    &[Y, X2],
    &[Y, MX2],
    &[X2, Y2, X2],
    &[MX2, Y2, MX2],
];

fn same_up_to_phase(a: &Op2, b: &Op2) -> bool {
    ((a.adjoint() * b).trace().norm() - 2.0).abs() < 1e-9
}

/// The single-qubit Clifford group with its multiplication table.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    unitaries: Vec<Op2>,
    /// `product[a][b]` is the index of "apply a, then b".
    product: Vec<[u8; 24]>,
    inverse: [u8; 24],
}

impl CliffordGroup {
    pub fn new() -> Self {
        let unitaries: Vec<Op2> = DECOMPOSITION
            .iter()
            .map(|seq| seq.iter().fold(Op2::identity(), |u, p| p.unitary() * u))
            .collect();
        let find = |u: &Op2| {
            unitaries
                .iter()
                .position(|v| same_up_to_phase(u, v))
                .expect("Clifford table is closed") as u8
        };
        let product = (0..24)
            .map(|a| {
                let mut row = [0u8; 24];
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot = find(&(unitaries[b] * unitaries[a]));
                }
                row
            })
            .collect::<Vec<_>>();
        let mut inverse = [0u8; 24];
        for (a, slot) in inverse.iter_mut().enumerate() {
            *slot = (0..24).find(|&b| product[a][b] == 0).expect("group has inverses") as u8;
        }
        Self {
            unitaries,
            product,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        24
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn decomposition(&self, index: usize) -> &'static [Primitive] {
        DECOMPOSITION[index]
    }

    pub fn unitary(&self, index: usize) -> &Op2 {
        &self.unitaries[index]
    }

    pub fn compose(&self, first: usize, then: usize) -> usize {
        self.product[first][then] as usize
    }

    pub fn inverse(&self, index: usize) -> usize {
        self.inverse[index] as usize
    }

    /// Index of the Clifford equal to `u` up to a global phase.
    pub fn lookup(&self, u: &Op2) -> Option<usize> {
        self.unitaries.iter().position(|v| same_up_to_phase(u, v))
    }

    /// Recovery element that returns `sequence` to the identity.
    pub fn recovery(&self, sequence: &[usize]) -> usize {
        let net = sequence.iter().fold(0, |acc, &c| self.compose(acc, c));
        self.inverse(net)
    }

    pub fn mean_primitives(&self) -> f64 {
        DECOMPOSITION.iter().map(|d| d.len()).sum::<usize>() as f64 / 24.0
    }
}

impl Default for CliffordGroup {
    fn default() -> Self {
        Self::new()
    }
}

/// Placement of the physical gates: half of `buffer` idles on each side of a
/// pulse, and every primitive occupies a whole number of qubit periods so the
/// channels compose independently of their start time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateLayout {
    pub pi: PulseSpec,
    pub half_pi: PulseSpec,
    pub buffer: f64,
}

impl GateLayout {
    fn half_buffer(&self, qubit: &QubitParams) -> f64 {
        let tq = qubit.period();
        (0.5 * self.buffer / tq).round() * tq
    }

    fn padded(&self, pulse: f64, qubit: &QubitParams) -> f64 {
        let tq = qubit.period();
        ((pulse + 2.0 * self.half_buffer(qubit)) / tq - 1e-9).ceil() * tq
    }

    pub fn pulse(&self, p: Primitive) -> Option<(PulseSpec, f64)> {
        p.rotation().map(|(theta, axis)| {
            let spec = if theta == PI { self.pi } else { self.half_pi };
            (spec, axis_phase(axis))
        })
    }

    pub fn duration(&self, p: Primitive, qubit: &QubitParams) -> f64 {
        let body = match self.pulse(p) {
            Some((spec, _)) => spec.duration(qubit),
            None => self.half_pi.duration(qubit),
        };
        self.padded(body, qubit)
    }

    pub fn drive(&self, p: Primitive, qubit: &QubitParams) -> Result<DriveSignal> {
        let total = self.duration(p, qubit);
        let half = self.half_buffer(qubit);
        let Some((spec, phase)) = self.pulse(p) else {
            return Ok(DriveSignal::idle(total));
        };
        let body = spec.drive(phase, qubit)?;
        let tail = total - half - body.duration;
        Ok(DriveSignal::idle(half).then(&body).then(&DriveSignal::idle(tail)))
    }

    pub fn clifford_duration(&self, group: &CliffordGroup, index: usize, qubit: &QubitParams) -> f64 {
        group.decomposition(index).iter().map(|p| self.duration(*p, qubit)).sum()
    }

    pub fn mean_clifford_duration(&self, group: &CliffordGroup, qubit: &QubitParams) -> f64 {
        (0..24).map(|i| self.clifford_duration(group, i, qubit)).sum::<f64>() / 24.0
    }

    /// One continuous drive for a Clifford sequence, for waveform export and checks.
    pub fn compile(&self, group: &CliffordGroup, sequence: &[usize], qubit: &QubitParams) -> Result<DriveSignal> {
        let mut out = DriveSignal::idle(0.0);
        for &c in sequence {
            for &p in group.decomposition(c) {
                out = out.then(&self.drive(p, qubit)?);
            }
        }
        Ok(out)
    }
}

/// Cached channels of the seven primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveChannels {
    pub superops: [Superop; 7],
}

impl PrimitiveChannels {
    /// Integrates each primitive's drive once under the context noise.
    pub fn full_dynamics(layout: &GateLayout, ctx: &DriveContext, strategy: Strategy) -> Result<Self> {
        let maps = map_with(strategy, &Primitive::ALL, |&p| {
            gate_superop(&layout.drive(p, &ctx.qubit)?, ctx)
        });
        let v = maps.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self {
            superops: v.try_into().expect("seven primitives"),
        })
    }

    /// Delta-function trains of tip angle `delta_theta` with the same layout.
    /// Only train gates have a delta limit.
    pub fn delta_pulse(layout: &GateLayout, delta_theta: f64, ctx: &DriveContext) -> Result<Self> {
        let q = &ctx.qubit;
        let idle = IdleEvolution::new(q, &ctx.noise);
        let mut superops = [Superop::identity(); 7];
        for p in Primitive::ALL {
            let total = layout.duration(p, q);
            superops[p.index()] = match layout.pulse(p) {
                None => idle.superop(total),
                Some((PulseSpec::Jpg { k, count, .. }, phase)) => {
                    let half = layout.half_buffer(q);
                    let period = delta_period_superop(delta_theta, k, phase, q, &ctx.noise);
                    let mut train = Superop::identity();
                    for _ in 0..count {
                        train = period * train;
                    }
                    // Each delta sits at the first qubit period of its slot.
                    let offset = (k / 2) as f64 * q.period();
                    let lead = idle.superop(half + offset);
                    let body = (k * count) as f64 * q.period();
                    let rest = idle.superop(total - half - offset - body);
                    rest * train * lead
                }
                Some((PulseSpec::Resonant { .. }, _)) => {
                    return Err(domain("resonant gates have no delta-pulse limit"));
                }
            };
        }
        Ok(Self { superops })
    }
}

/// Per-Clifford channels used by the benchmarking loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordChannels {
    pub superops: Vec<Superop>,
}

/// Qubit unitary acting trivially on the f level.
pub fn embed(u: &Op2) -> Op3 {
    let mut m = Op3::identity();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(u);
    m
}

/// Qubit-subspace depolarizing map `ρ ↦ pρ + (1 − p)·tr_q(ρ)·I/2`; the f
/// population is left alone so the map preserves trace.
pub fn depolarizing_superop(p: f64) -> Superop {
    let idx = |i: usize, j: usize| i + 3 * j;
    let mut s = Superop::identity().scale(p);
    for a in 0..2 {
        for b in 0..2 {
            s[(idx(a, a), idx(b, b))] += C64::new(0.5 * (1.0 - p), 0.0);
        }
    }
    s[(idx(2, 2), idx(2, 2))] = C64::new(1.0, 0.0);
    s
}

impl CliffordChannels {
    pub fn ideal(group: &CliffordGroup) -> Self {
        Self {
            superops: (0..24).map(|i| unitary_superop(&embed(group.unitary(i)))).collect(),
        }
    }

    /// Ideal Clifford followed by depolarization with parameter `p`.
    pub fn depolarizing(group: &CliffordGroup, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain("depolarizing parameter must lie in [0, 1]"));
        }
        let d = depolarizing_superop(p);
        Ok(Self {
            superops: Self::ideal(group).superops.iter().map(|s| d * s).collect(),
        })
    }

    pub fn from_primitives(group: &CliffordGroup, prims: &PrimitiveChannels) -> Self {
        Self {
            superops: (0..24)
                .map(|i| {
                    group
                        .decomposition(i)
                        .iter()
                        .fold(Superop::identity(), |acc, p| prims.superops[p.index()] * acc)
                })
                .collect(),
        }
    }
}

/// A gate inserted after every random Clifford in interleaved benchmarking.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedGate {
    pub name: String,
    /// Ideal Clifford the gate implements.
    pub clifford: usize,
    pub channel: Superop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub lengths: Vec<u32>,
    pub n_seq: u32,
    /// Projective measurements per sequence; `None` uses exact survival.
    pub shots: Option<u32>,
    pub seed: u64,
}

impl RbConfig {
    fn validate(&self) -> Result<()> {
        if self.lengths.len() < 3 {
            return Err(domain("RB needs at least three sequence lengths"));
        }
        if self.n_seq < 2 {
            return Err(domain("RB needs at least two sequences per length"));
        }
        if self.shots == Some(0) {
            return Err(domain("shots must be positive"));
        }
        Ok(())
    }
}

/// Random Clifford indices plus the recovery element. The stream is derived
/// from `(seed, length index, sequence index)` so any subset can be regenerated.
pub fn generate_sequence(group: &CliffordGroup, m: u32, seed: u64, length_index: u32, seq_index: u32) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((length_index as u64) << 32) | seq_index as u64);
    let mut seq: Vec<usize> = (0..m).map(|_| rng.random_range(0..24)).collect();
    seq.push(group.recovery(&seq));
    seq
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbPoint {
    pub m: u32,
    pub survival_mean: f64,
    pub survival_stderr: f64,
    pub n_seq: u32,
}

/// `F(m) = a·p^m + b` with `r = (1 − p)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepolarizingFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub p_err: f64,
    pub r: f64,
    pub r_err: f64,
    /// Absent when the survival is flat and `p = 1` exactly.
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbResult {
    pub points: Vec<RbPoint>,
    pub fit: DepolarizingFit,
}

fn survival(channels: &CliffordChannels, seq: &[usize], inter: Option<&InterleavedGate>) -> f64 {
    let mut rho = DensityMatrix3::ground();
    let n = seq.len();
    for (i, &c) in seq.iter().enumerate() {
        rho = rho.apply(&channels.superops[c]);
        if let (Some(g), true) = (inter, i + 1 < n) {
            rho = rho.apply(&g.channel);
        }
    }
    rho.population(0).clamp(0.0, 1.0)
}

/// Interleaved sequences fold the gate into the recovery element.
fn sequence_for(group: &CliffordGroup, cfg: &RbConfig, li: usize, si: u32, inter: Option<&InterleavedGate>) -> Vec<usize> {
    let m = cfg.lengths[li];
    let mut seq = generate_sequence(group, m, cfg.seed, li as u32, si);
    if let Some(g) = inter {
        let body = &seq[..m as usize];
        let net = body.iter().fold(0, |acc, &c| group.compose(group.compose(acc, c), g.clifford));
        *seq.last_mut().expect("recovery present") = group.inverse(net);
    }
    seq
}

pub fn run_rb(
    group: &CliffordGroup,
    channels: &CliffordChannels,
    interleaved: Option<&InterleavedGate>,
    cfg: &RbConfig,
    strategy: Strategy,
) -> Result<RbResult> {
    cfg.validate()?;
    let n = cfg.n_seq as usize;
    let jobs = cfg.lengths.len() * n;
    let values = map_range(strategy, jobs, |j| {
        let (li, si) = (j / n, (j % n) as u32);
        let seq = sequence_for(group, cfg, li, si, interleaved);
        let s = survival(channels, &seq, interleaved);
        match cfg.shots {
            None => s,
            Some(shots) => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5407);
                rng.set_stream(j as u64);
                let bin = rand_distr::Binomial::new(shots as u64, s).expect("clamped probability");
                rand_distr::Distribution::sample(&bin, &mut rng) as f64 / shots as f64
            }
        }
    });
    let points: Vec<RbPoint> = cfg
        .lengths
        .iter()
        .enumerate()
        .map(|(li, &m)| {
            let v = &values[li * n..(li + 1) * n];
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            RbPoint {
                m,
                survival_mean: mean,
                survival_stderr: (var / n as f64).sqrt(),
                n_seq: cfg.n_seq,
            }
        })
        .collect();
    let fit = fit_depolarizing(&points)?;
    Ok(RbResult { points, fit })
}

pub fn fit_depolarizing(points: &[RbPoint]) -> Result<DepolarizingFit> {
    if points.len() < 3 {
        return Err(domain("need at least three lengths"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.m as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.survival_mean).collect();
    let spread = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - y.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread < 1e-12 {
        return Ok(DepolarizingFit {
            a: 0.0,
            p: 1.0,
            b: y[0],
            p_err: 0.0,
            r: 0.0,
            r_err: 0.0,
            fit: None,
        });
    }
    // Start from the log-slope of the first and last points above the floor of 0.5.
    let (y0, y1) = (y[0] - 0.5, y[y.len() - 1] - 0.5);
    let p0 = if y0 > 0.0 && y1 > 0.0 {
        ((y1 / y0).ln() / (x[x.len() - 1] - x[0])).exp().clamp(0.5, 1.0 - 1e-9)
    } else {
        0.99
    };
    let a0 = (y[0] - 0.5) / p0.powf(x[0]);
    let opts = FitOptions {
        bounds: Some(FitModel::PowerLaw.default_bounds()),
        ..FitOptions::default()
    };
    let fit = nlls_fit(FitModel::PowerLaw, &x, &y, &[a0, p0, 0.5], &opts)?;
    if !fit.converged {
        return Err(Error::Fit("RB decay fit did not converge".into()));
    }
    let (a, p, b) = (fit.params[0], fit.params[1], fit.params[2]);
    let p_err = fit.stderr(1);
    Ok(DepolarizingFit {
        a,
        p,
        b,
        p_err,
        r: 0.5 * (1.0 - p),
        r_err: 0.5 * p_err,
        fit: Some(fit),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrbResult {
    pub gate_name: String,
    pub reference: RbResult,
    pub interleaved: RbResult,
    pub r_gate: f64,
    pub r_err: f64,
}

/// Reference and interleaved runs on the same random sequences;
/// `r = (1 − p_int/p_ref)/2`.
pub fn run_irb(
    group: &CliffordGroup,
    channels: &CliffordChannels,
    gate: &InterleavedGate,
    cfg: &RbConfig,
    strategy: Strategy,
) -> Result<IrbResult> {
    let reference = run_rb(group, channels, None, cfg, strategy)?;
    let interleaved = run_rb(group, channels, Some(gate), cfg, strategy)?;
    let (pr, pi) = (reference.fit.p, interleaved.fit.p);
    if !(pr > 0.0) {
        return Err(Error::Fit("reference decay parameter is zero".into()));
    }
    let (er, ei) = (reference.fit.p_err, interleaved.fit.p_err);
    let r_gate = 0.5 * (1.0 - pi / pr);
    let r_err = 0.5 * ((ei / pr).powi(2) + (pi * er / (pr * pr)).powi(2)).sqrt();
    Ok(IrbResult {
        gate_name: gate.name.clone(),
        reference,
        interleaved,
        r_gate,
        r_err,
    })
}

/// Largest survival difference between cached channels and direct evolution
/// of the compiled drive, over the given sequences.
pub fn verify_cache(
    group: &CliffordGroup,
    layout: &GateLayout,
    channels: &CliffordChannels,
    ctx: &DriveContext,
    sequences: &[Vec<usize>],
    tolerance: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for seq in sequences {
        let drive = layout.compile(group, seq, &ctx.qubit)?;
        let direct = evolve(&InitialState::Pure(crate::transmon::QutritState::ground()), &drive, ctx, &[])?;
        let cached = survival(channels, seq, None);
        worst = worst.max((direct.final_state().population(0) - cached).abs());
    }
    if worst > tolerance {
        return Err(Error::Consistency(format!(
            "cached channels differ from direct evolution by {worst:e}"
        )));
    }
    Ok(worst)
}

/// Interleaved gate from the primitive cache, e.g. a bare X or the idle.
pub fn primitive_gate(group: &CliffordGroup, prims: &PrimitiveChannels, p: Primitive) -> InterleavedGate {
    InterleavedGate {
        name: p.name().to_string(),
        clifford: group.lookup(&p.unitary()).expect("primitives are Cliffords"),
        channel: prims.superops[p.index()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transmon::{max_abs, NoiseModel};

    #[test]
    fn group_is_closed_and_complete() {
        let g = CliffordGroup::new();
        for i in 0..24 {
            for j in 0..24 {
                if i != j {
                    assert!(!same_up_to_phase(g.unitary(i), g.unitary(j)), "{i} {j}");
                }
            }
            assert_eq!(g.compose(i, g.inverse(i)), 0);
            assert_eq!(g.compose(g.inverse(i), i), 0);
        }
        assert!((g.mean_primitives() - 1.875).abs() < 1e-12);
    }

    #[test]
    fn composition_is_associative() {
        let g = CliffordGroup::new();
        for a in 0..24 {
            for b in (0..24).step_by(5) {
                for c in (0..24).step_by(7) {
                    assert_eq!(g.compose(g.compose(a, b), c), g.compose(a, g.compose(b, c)));
                }
            }
        }
    }

    #[test]
    fn sequences_return_to_ground() {
        let g = CliffordGroup::new();
        let ch = CliffordChannels::ideal(&g);
        for s in 0..20 {
            let seq = generate_sequence(&g, 37, 11, 0, s);
            assert!((survival(&ch, &seq, None) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sequences_are_seeded() {
        let g = CliffordGroup::new();
        assert_eq!(generate_sequence(&g, 50, 1, 2, 3), generate_sequence(&g, 50, 1, 2, 3));
        assert_ne!(generate_sequence(&g, 50, 1, 2, 3), generate_sequence(&g, 50, 1, 2, 4));
    }

    #[test]
    fn depolarizing_decay_is_exact() {
        let g = CliffordGroup::new();
        let ch = CliffordChannels::depolarizing(&g, 0.98).unwrap();
        let seq = generate_sequence(&g, 10, 5, 0, 0);
        let s = survival(&ch, &seq, None);
        assert!((s - (0.5 * 0.98f64.powi(11) + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn interleaved_identity_is_free() {
        let g = CliffordGroup::new();
        let ch = CliffordChannels::depolarizing(&g, 0.99).unwrap();
        let id = InterleavedGate {
            name: "I".into(),
            clifford: 0,
            channel: Superop::identity(),
        };
        let cfg = RbConfig {
            lengths: vec![1, 10, 50, 100],
            n_seq: 4,
            shots: None,
            seed: 3,
        };
        let r = run_irb(&g, &ch, &id, &cfg, Strategy::Sequential).unwrap();
        assert!(r.r_gate.abs() < 1e-9, "{}", r.r_gate);
    }

    #[test]
    fn noiseless_delta_primitives_match_ideal() {
        let q = QubitParams::reference_device();
        let train = |count| PulseSpec::Jpg {
            k: 2,
            count,
            sigma: 0.0,
            area: 0.0,
        };
        let layout = GateLayout {
            pi: train(200),
            half_pi: train(100),
            buffer: 5e-9,
        };
        let ctx = DriveContext::new(q, 1.0, NoiseModel::disabled());
        let prims = PrimitiveChannels::delta_pulse(&layout, PI / 200.0, &ctx).unwrap();
        // Population transfer matches the ideal gate to the leakage level.
        let g = CliffordGroup::new();
        let ideal = CliffordChannels::ideal(&g);
        let actual = CliffordChannels::from_primitives(&g, &prims);
        for i in [1, 2, 12, 14] {
            let a = DensityMatrix3::ground().apply(&actual.superops[i]);
            let b = DensityMatrix3::ground().apply(&ideal.superops[i]);
            let d: f64 = (0..3).map(|l| (a.population(l) - b.population(l)).abs()).sum();
            assert!(d < 1e-2, "clifford {i}: {d}");
        }
        assert!(max_abs(&(prims.superops[0] - Superop::identity())) > 0.0);
    }

    #[test]
    fn gate_durations_are_period_multiples() {
        let q = QubitParams::reference_device();
        let layout = GateLayout {
            pi: PulseSpec::Resonant {
                sigma: 15e-9,
                duration: 60e-9,
                amplitude: 1.0,
            },
            half_pi: PulseSpec::Resonant {
                sigma: 15e-9,
                duration: 60e-9,
                amplitude: 0.5,
            },
            buffer: 5e-9,
        };
        for p in Primitive::ALL {
            let n = layout.duration(p, &q) / q.period();
            assert!((n - n.round()).abs() < 1e-6);
            assert!(layout.duration(p, &q) >= 65e-9 - q.period());
        }
    }
}
