// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{Complex, Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::quantum::QubitParams;

pub type C64 = Complex<f64>;
pub type Op3 = Matrix3<C64>;
/// Channel on column-stacked 3×3 density matrices.
pub type Superop = SMatrix<C64, 9, 9>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest element modulus.
pub fn max_abs<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pure state in the (g, e, f) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritState {
    pub amplitudes: Vector3<C64>,
}

impl QutritState {
    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn excited() -> Self {
        Self::basis(1)
    }

    pub fn basis(level: usize) -> Self {
        let mut amplitudes = Vector3::zeros();
        amplitudes[level] = c(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn populations(&self) -> [f64; 3] {
        let a = &self.amplitudes;
        [a[0].norm_sqr(), a[1].norm_sqr(), a[2].norm_sqr()]
    }

    pub fn to_density(&self) -> DensityMatrix3 {
        DensityMatrix3 {
            matrix: self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    pub matrix: Op3,
}

impl DensityMatrix3 {
    pub fn ground() -> Self {
        QutritState::ground().to_density()
    }

    pub fn population(&self, level: usize) -> f64 {
        self.matrix[(level, level)].re
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.population(0), self.population(1), self.population(2)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.matrix + self.matrix.adjoint()).scale(0.5);
        h.symmetric_eigenvalues().min()
    }

    /// Checks the density-matrix invariants to tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.hermiticity_error() > tol {
            return Err(domain("density matrix is not Hermitian"));
        }
        if (self.trace() - 1.0).abs() > tol {
            return Err(domain(format!("trace is {}", self.trace())));
        }
        if self.min_eigenvalue() < -tol {
            return Err(domain("density matrix has a negative eigenvalue"));
        }
        Ok(())
    }

    pub fn vec(&self) -> SVector<C64, 9> {
        SVector::from_column_slice(self.matrix.as_slice())
    }

    pub fn from_vec(v: &SVector<C64, 9>) -> Self {
        Self {
            matrix: Op3::from_column_slice(v.as_slice()),
        }
    }

    pub fn apply(&self, channel: &Superop) -> Self {
        Self::from_vec(&(channel * self.vec()))
    }

    pub fn apply_unitary(&self, u: &Op3) -> Self {
        Self {
            matrix: u * self.matrix * u.adjoint(),
        }
    }
}

/// Superoperator `ρ ↦ UρU†`, equal to `conj(U) ⊗ U` for column stacking.
pub fn unitary_superop(u: &Op3) -> Superop {
    let uc = u.map(|z| z.conj());
    uc.kronecker(u)
}

/// Amplitude damping and pure dephasing of the transmon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub t1: f64,
    /// `f64::INFINITY` when the coherence is relaxation limited.
    pub t_phi: f64,
    pub enabled: bool,
}

impl NoiseModel {
    pub fn disabled() -> Self {
        Self {
            t1: f64::INFINITY,
            t_phi: f64::INFINITY,
            enabled: false,
        }
    }

    /// Derives `T_φ` from `1/T2* = 1/(2T1) + 1/T_φ`.
    pub fn from_times(t1: f64, t2_star: f64) -> Result<Self> {
        if !(t1 > 0.0) || !(t2_star > 0.0) {
            return Err(domain("T1 and T2* must be positive"));
        }
        let rate = 1.0 / t2_star - 0.5 / t1;
        if rate < -1e-12 / t2_star {
            return Err(domain("T2* cannot exceed 2·T1"));
        }
        let t_phi = if rate <= 0.0 { f64::INFINITY } else { 1.0 / rate };
        Ok(Self {
            t1,
            t_phi,
            enabled: true,
        })
    }

    pub fn from_qubit(q: &QubitParams) -> Result<Self> {
        Self::from_times(q.t1, q.t2_star)
    }

    pub fn t2_star(&self) -> f64 {
        1.0 / (0.5 / self.t1 + 1.0 / self.t_phi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && (!(self.t1 > 0.0) || !(self.t_phi > 0.0)) {
            return Err(config("noise times must be positive"));
        }
        Ok(())
    }

    fn gamma1(&self) -> f64 {
        if self.enabled && self.t1.is_finite() {
            1.0 / self.t1
        } else {
            0.0
        }
    }

    fn gamma_phi(&self) -> f64 {
        if self.enabled && self.t_phi.is_finite() {
            1.0 / self.t_phi
        } else {
            0.0
        }
    }

    /// Collapse operators: e→g at 1/T1, f→e at 2/T1, and `sqrt(2/T_φ)·diag(0,1,2)`.
    pub fn collapse_operators(&self) -> Vec<Op3> {
        let mut ops = Vec::new();
        let g1 = self.gamma1();
        if g1 > 0.0 {
            let mut a = Op3::zeros();
            a[(0, 1)] = c(g1.sqrt(), 0.0);
            ops.push(a);
            let mut b = Op3::zeros();
            b[(1, 2)] = c((2.0 * g1).sqrt(), 0.0);
            ops.push(b);
        }
        let gp = self.gamma_phi();
        if gp > 0.0 {
            let s = (2.0 * gp).sqrt();
            ops.push(Op3::from_diagonal(&Vector3::new(c(0.0, 0.0), c(s, 0.0), c(2.0 * s, 0.0))));
        }
        ops
    }

    /// Level decay rates (g, e, f).
    fn level_rates(&self) -> [f64; 3] {
        let g1 = self.gamma1();
        [0.0, g1, 2.0 * g1]
    }
}

/// Exact undriven evolution in the frame rotating at ω10 on every rung:
/// the only Hamiltonian term is the f-level shift −2πα.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleEvolution {
    /// Energies of (g, e, f) in rad/s.
    pub energies: [f64; 3],
    pub noise: NoiseModel,
}

impl IdleEvolution {
    pub fn new(qubit: &QubitParams, noise: &NoiseModel) -> Self {
        Self {
            energies: [0.0, 0.0, -2.0 * std::f64::consts::PI * qubit.anharmonicity_hz],
            noise: *noise,
        }
    }

    pub fn unitary(&self, tau: f64) -> Op3 {
        Op3::from_diagonal(&Vector3::from_fn(|i, _| C64::from_polar(1.0, -self.energies[i] * tau)))
    }

    pub fn apply_pure(&self, psi: &QutritState, tau: f64) -> QutritState {
        QutritState {
            amplitudes: self.unitary(tau) * psi.amplitudes,
        }
    }

    pub fn apply(&self, rho: &DensityMatrix3, tau: f64) -> DensityMatrix3 {
        DensityMatrix3::from_vec(&(self.superop(tau) * rho.vec()))
    }

    /// Closed-form channel: populations cascade f→e→g, coherences decay
    /// at `(Γm + Γn)/2 + (m − n)²/T_φ` while precessing.
    pub fn superop(&self, tau: f64) -> Superop {
        let rates = self.noise.level_rates();
        let gp = self.noise.gamma_phi();
        let mut s = Superop::zeros();
        let idx = |i: usize, j: usize| i + 3 * j;
        for m in 0..3 {
            for n in 0..3 {
                if m == n {
                    continue;
                }
                let d = (m as f64 - n as f64).powi(2);
                let decay = 0.5 * (rates[m] + rates[n]) + d * gp;
                let phase = -(self.energies[m] - self.energies[n]) * tau;
                s[(idx(m, n), idx(m, n))] = C64::from_polar((-decay * tau).exp(), phase);
            }
        }
        let g1 = rates[1];
        let pe = (-g1 * tau).exp();
        let pf = (-2.0 * g1 * tau).exp();
        // f: decays at 2Γ1 into e; e: decays at Γ1 into g.
        s[(idx(2, 2), idx(2, 2))] = c(pf, 0.0);
        let f_to_e = 2.0 * (pe - pf);
        s[(idx(1, 1), idx(2, 2))] = c(f_to_e, 0.0);
        s[(idx(0, 0), idx(2, 2))] = c(1.0 - pf - f_to_e, 0.0);
        s[(idx(1, 1), idx(1, 1))] = c(pe, 0.0);
        s[(idx(0, 0), idx(1, 1))] = c(1.0 - pe, 0.0);
        s[(idx(0, 0), idx(0, 0))] = c(1.0, 0.0);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_phi_derivation() {
        let n = NoiseModel::from_times(20e-6, 15e-6).unwrap();
        assert!((1.0 / n.t_phi - (1.0 / 15e-6 - 1.0 / 40e-6)).abs() < 1e-6);
        assert!((n.t2_star() - 15e-6).abs() < 1e-18);
        let limited = NoiseModel::from_times(20e-6, 40e-6).unwrap();
        assert!(limited.t_phi.is_infinite());
        assert!(NoiseModel::from_times(20e-6, 41e-6).is_err());
    }

    #[test]
    fn unitary_superop_matches_conjugation() {
        let u = Op3::new(
            c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.8),
            c(0.0, 0.0), c(0.0, 0.8), c(0.6, 0.0),
        );
        let psi = QutritState {
            amplitudes: Vector3::new(c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)),
        };
        let rho = psi.to_density();
        let a = rho.apply_unitary(&u);
        let b = rho.apply(&unitary_superop(&u));
        assert!(max_abs(&(a.matrix - b.matrix)) < 1e-15);
    }

    #[test]
    fn idle_relaxation_is_exponential() {
        let q = QubitParams::reference_device();
        let noise = NoiseModel::from_qubit(&q).unwrap();
        let idle = IdleEvolution::new(&q, &noise);
        let rho = idle.apply(&QutritState::excited().to_density(), 7e-6);
        assert!((rho.population(1) - (-7e-6f64 / 20e-6).exp()).abs() < 1e-14);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let f = idle.apply(&QutritState::basis(2).to_density(), 5e-6);
        assert!((f.trace() - 1.0).abs() < 1e-14);
        assert!(f.validate(1e-12).is_ok());
    }
}
