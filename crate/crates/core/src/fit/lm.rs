// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::FitModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn project(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Stop when an accepted step lowers the residual by less than this fraction.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub bounds: Option<Bounds>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    /// `s²·(JᵀJ)⁻¹` at the solution, with `s² = RSS/(n − p)`.
    pub covariance: DMatrix<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_points: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        let idx = self.model.param_names().iter().position(|n| *n == name)?;
        Some(self.params[idx])
    }

    pub fn stderr(&self, idx: usize) -> f64 {
        self.covariance[(idx, idx)].max(0.0).sqrt()
    }

    pub fn stderr_of(&self, name: &str) -> Option<f64> {
        let idx = self.model.param_names().iter().position(|n| *n == name)?;
        Some(self.stderr(idx))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(x, &self.params)
    }

    /// Root-mean-square residual.
    pub fn rms(&self) -> f64 {
        (self.rss / self.n_points as f64).sqrt()
    }
}

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
const LAMBDA_MIN: f64 = 1e-15;

fn residuals(model: FitModel, x: &[f64], y: &[f64], p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(&xi, &yi)| yi - model.eval(xi, p)))
}

fn rss_of(r: &DVector<f64>) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn step_size(p: f64, scale: f64) -> f64 {
    // cbrt(ε) is optimal for central differences.
    let mag = p.abs().max(scale);
    6.055e-6 * if mag > 0.0 { mag } else { 1.0 }
}

/// Central-difference Jacobian of the model with respect to its parameters,
/// one row per data point.
pub fn numerical_jacobian(model: FitModel, x: &[f64], p: &[f64], scales: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let m = p.len();
    let mut jac = DMatrix::zeros(n, m);
    let mut work = p.to_vec();
    for j in 0..m {
        let h = step_size(p[j], scales[j]);
        work[j] = p[j] + h;
        let plus: Vec<f64> = x.iter().map(|&xi| model.eval(xi, &work)).collect();
        work[j] = p[j] - h;
        for (i, &xi) in x.iter().enumerate() {
            jac[(i, j)] = (plus[i] - model.eval(xi, &work)) / (2.0 * h);
        }
        work[j] = p[j];
    }
    jac
}

/// Levenberg–Marquardt least squares.
///
/// Damping follows Marquardt's diagonal scaling: λ starts at 1e-3, is divided
/// by 10 after an accepted step and multiplied by 10 after a rejected one.
/// Only steps that lower the residual are accepted. If no step lowers the
/// residual for λ up to 1e16 the current point is a minimum to working precision.
pub fn nlls_fit(
    model: FitModel,
    x: &[f64],
    y: &[f64],
    initial: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    let m = model.n_params();
    if initial.len() != m {
        return Err(Error::Fit(format!(
            "{} expects {m} parameters, got {}",
            model.name(),
            initial.len()
        )));
    }
    if x.len() != y.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if x.len() < m {
        return Err(Error::Fit(format!(
            "{} points cannot determine {m} parameters",
            x.len()
        )));
    }
    if x.iter().chain(y).chain(initial).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite input".into()));
    }

    let scales: Vec<f64> = initial.iter().map(|v| v.abs() * 1e-3).collect();
    let mut p = initial.to_vec();
    if let Some(b) = &opts.bounds {
        b.project(&mut p);
    }
    let mut r = residuals(model, x, y, &p);
    let mut rss = rss_of(&r);
    if !rss.is_finite() {
        return Err(Error::Fit("model is not finite at the initial guess".into()));
    }

    let mut lambda = LAMBDA_INIT;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = numerical_jacobian(model, x, &p, &scales);

    while iterations < opts.max_iterations {
        iterations += 1;
        if rss == 0.0 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut a = jtj.clone();
            for i in 0..m {
                let d = jtj[(i, i)];
                a[(i, i)] += lambda * if d > 0.0 { d } else { 1e-30 };
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            if let Some(b) = &opts.bounds {
                b.project(&mut trial);
            }
            let r_trial = residuals(model, x, y, &trial);
            let rss_trial = rss_of(&r_trial);
            if rss_trial.is_finite() && rss_trial < rss {
                let reduction = (rss - rss_trial) / rss;
                p = trial;
                r = r_trial;
                rss = rss_trial;
                lambda = (lambda / 10.0).max(LAMBDA_MIN);
                accepted = true;
                if reduction < opts.tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            converged = true;
            break;
        }
        if converged {
            break;
        }
        jac = numerical_jacobian(model, x, &p, &scales);
    }

    let jac = numerical_jacobian(model, x, &p, &scales);
    let covariance = covariance(&jac, rss, x.len())?;
    Ok(FitResult {
        model,
        params: p,
        covariance,
        rss,
        converged,
        iterations,
        n_points: x.len(),
    })
}

fn covariance(jac: &DMatrix<f64>, rss: f64, n: usize) -> Result<DMatrix<f64>> {
    let m = jac.ncols();
    let jtj = jac.transpose() * jac;
    let d: Vec<f64> = (0..m).map(|i| jtj[(i, i)].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::RankDeficient(
            "a parameter has no influence on the model".into(),
        ));
    }
    let scaled = DMatrix::from_fn(m, m, |i, j| jtj[(i, j)] / (d[i] * d[j]));
    let eig = scaled.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > hi * 1e-14) {
        return Err(Error::RankDeficient(format!(
            "condition number of scaled normal matrix exceeds 1e14 (λmin = {lo:e})"
        )));
    }
    let inv = scaled
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("normal matrix is singular".into()))?;
    let s2 = if n > m { rss / (n - m) as f64 } else { 0.0 };
    Ok(DMatrix::from_fn(m, m, |i, j| s2 * inv[(i, j)] / (d[i] * d[j])))
}
