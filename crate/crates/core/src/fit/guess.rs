// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use num_complex::Complex64;

use super::FitModel;
use crate::error::{Error, Result};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Ordinary least-squares line `y = a + b·x`; returns `(a, b)`.
fn linear_regression(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

fn sorted_by_x(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| y[i]).collect())
}

/// Dominant frequency of `y(x)` from a zero-padded periodogram refined by
/// parabolic interpolation. Returns `(frequency, amplitude, phase)` for
/// `y ≈ mean + amplitude·cos(2πfx + phase)`.
pub fn spectral_peak(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() < 4 || x.len() != y.len() {
        return Err(Error::Fit("spectral estimate needs at least 4 points".into()));
    }
    let (x, y) = sorted_by_x(x, y);
    let span = x[x.len() - 1] - x[0];
    if span <= 0.0 {
        return Err(Error::Fit("x values span zero width".into()));
    }
    let mut gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    gaps.sort_by(f64::total_cmp);
    let dx = gaps[gaps.len() / 2];
    let f_nyq = 0.5 / dx;
    let my = mean(&y);
    let centered: Vec<f64> = y.iter().map(|v| v - my).collect();

    let x0 = x[0];
    let dft = |f: f64| -> Complex64 {
        x.iter()
            .zip(&centered)
            .map(|(&xi, &yi)| yi * Complex64::from_polar(1.0, -2.0 * PI * f * (xi - x0)))
            .sum()
    };
    let df = 1.0 / (8.0 * span);
    let n_f = (f_nyq / df).ceil() as usize;
    let power: Vec<f64> = (1..=n_f).map(|k| dft(k as f64 * df).norm_sqr()).collect();
    let (k_best, _) = power
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let mut f = (k_best + 1) as f64 * df;
    if k_best > 0 && k_best + 1 < power.len() {
        let (a, b, c) = (power[k_best - 1], power[k_best], power[k_best + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            f += 0.5 * (a - c) / denom * df;
        }
    }
    let s = dft(f);
    let amplitude = 2.0 * s.norm() / x.len() as f64;
    let phase = s.arg() - 2.0 * PI * f * x0;
    Ok((f, amplitude, phase))
}

/// Data-driven starting point for [`super::nlls_fit`].
pub fn initial_guess(model: FitModel, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.len() < model.n_params() {
        return Err(Error::Fit(format!(
            "{} needs at least {} matched points",
            model.name(),
            model.n_params()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite input".into()));
    }
    let (x, y) = sorted_by_x(x, y);
    let span = x[x.len() - 1] - x[0];
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = (ymax - ymin).max(f64::MIN_POSITIVE);

    match model {
        FitModel::ExpDecay => {
            let rising = y[0] < y[y.len() - 1];
            let c0 = if rising { ymax + 0.05 * range } else { ymin - 0.05 * range };
            let ly: Vec<f64> = y.iter().map(|v| (v - c0).abs().ln()).collect();
            let (a, b) = linear_regression(&x, &ly)
                .ok_or_else(|| Error::Fit("degenerate x values".into()))?;
            let t = if b < 0.0 { -1.0 / b } else { span.max(f64::MIN_POSITIVE) };
            let amp = a.exp() * if rising { -1.0 } else { 1.0 };
            Ok(vec![amp, t, c0])
        }
        FitModel::DampedSin => {
            let (f, amp, phase) = spectral_peak(&x, &y)?;
            let gamma = if span > 0.0 { 0.5 / span } else { 0.0 };
            Ok(vec![amp.max(1e-3 * range), gamma, f, phase, mean(&y)])
        }
        FitModel::PowerLaw => {
            // Scan the asymptote and keep the log-linear line with least residual.
            let mut best: Option<(f64, Vec<f64>)> = None;
            for i in 1..=40 {
                let b = ymin - range * (i as f64 / 40.0).powi(2) * 2.0;
                let ly: Vec<f64> = y.iter().map(|v| (v - b).ln()).collect();
                let Some((a_ln, slope)) = linear_regression(&x, &ly) else {
                    continue;
                };
                let p = slope.exp().clamp(1e-6, 1.0);
                let a = a_ln.exp();
                let rss: f64 = x
                    .iter()
                    .zip(&y)
                    .map(|(xi, yi)| (yi - a * p.powf(*xi) - b).powi(2))
                    .sum();
                if best.as_ref().is_none_or(|(r, _)| rss < *r) {
                    best = Some((rss, vec![a, p, b]));
                }
            }
            best.map(|(_, p)| p)
                .ok_or_else(|| Error::Fit("degenerate x values".into()))
        }
        FitModel::Gaussian | FitModel::GaussianOffset => {
            let base = if model == FitModel::GaussianOffset { ymin } else { 0.0 };
            let w: Vec<f64> = y.iter().map(|v| (v - base).max(0.0)).collect();
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::Fit("no positive weight for a peak".into()));
            }
            let mu = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / total;
            let var = x.iter().zip(&w).map(|(a, b)| (a - mu).powi(2) * b).sum::<f64>() / total;
            let sigma = var.sqrt().max(span * 1e-3).max(f64::MIN_POSITIVE);
            let mut p = vec![ymax - base, mu, sigma];
            if model == FitModel::GaussianOffset {
                p.push(base);
            }
            Ok(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_peak_of_pure_tone() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 1e-9).collect();
        let y: Vec<f64> = x.iter().map(|t| 0.4 * (2.0 * PI * 37e6 * t + 0.7).cos() + 0.5).collect();
        let (f, a, phi) = spectral_peak(&x, &y).unwrap();
        assert_relative_eq!(f, 37e6, max_relative = 5e-3);
        assert!((a - 0.4).abs() < 0.05);
        let dphi = (phi - 0.7).rem_euclid(2.0 * PI);
        assert!(!(0.3..=2.0 * PI - 0.3).contains(&dphi), "{phi}");
    }

    #[test]
    fn exp_guess_is_close() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 * (-t / 7.0).exp() + 0.1).collect();
        let p = initial_guess(FitModel::ExpDecay, &x, &y).unwrap();
        assert!((p[1] - 7.0).abs() / 7.0 < 0.5, "{p:?}");
    }

    #[test]
    fn too_few_points() {
        assert!(initial_guess(FitModel::DampedSin, &[0.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
