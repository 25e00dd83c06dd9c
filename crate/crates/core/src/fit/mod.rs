// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Curve fitting shared by the experiment pipelines.
//!
//! [`nlls_fit`] is a damped Gauss–Newton (Levenberg–Marquardt) solver with a
//! central-difference Jacobian. Models are a closed set ([`FitModel`]); each has
//! a data-driven initial guess so callers normally go through [`fit_auto`].

mod guess;
mod histogram;
mod lm;
mod window;

pub use guess::{initial_guess, spectral_peak};
pub use histogram::{gaussian_histogram_stats, Histogram, HistogramStats};
pub use lm::{nlls_fit, numerical_jacobian, Bounds, FitOptions, FitResult};
pub use window::{sliding_window_frequency, WindowEstimate, WindowedFrequency};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::Result;

/// Closed set of model functions.
///
/// Parameter order is fixed per model and matches [`FitModel::param_names`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `A·exp(−x/T) + C`
    ExpDecay,
    /// `A·exp(−γx)·cos(2πfx + φ) + C`; the decay time is `1/γ`.
    DampedSin,
    /// `a·p^x + b`
    PowerLaw,
    /// `A·exp(−(x−μ)²/2σ²)`
    Gaussian,
    /// `A·exp(−(x−μ)²/2σ²) + C`
    GaussianOffset,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::ExpDecay => "exp_decay",
            FitModel::DampedSin => "damped_sin",
            FitModel::PowerLaw => "power_law",
            FitModel::Gaussian => "gaussian",
            FitModel::GaussianOffset => "gaussian_offset",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FitModel::ExpDecay => &["A", "T", "C"],
            FitModel::DampedSin => &["A", "gamma", "f", "phi", "C"],
            FitModel::PowerLaw => &["a", "p", "b"],
            FitModel::Gaussian => &["A", "mu", "sigma"],
            FitModel::GaussianOffset => &["A", "mu", "sigma", "C"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn eval(self, x: f64, p: &[f64]) -> f64 {
        match self {
            FitModel::ExpDecay => p[0] * (-x / p[1]).exp() + p[2],
            FitModel::DampedSin => {
                p[0] * (-p[1] * x).exp() * (2.0 * PI * p[2] * x + p[3]).cos() + p[4]
            }
            FitModel::PowerLaw => p[0] * p[1].powf(x) + p[2],
            FitModel::Gaussian => {
                let z = (x - p[1]) / p[2];
                p[0] * (-0.5 * z * z).exp()
            }
            FitModel::GaussianOffset => {
                let z = (x - p[1]) / p[2];
                p[0] * (-0.5 * z * z).exp() + p[3]
            }
        }
    }

    /// Box constraints applied when the caller gives none.
    pub fn default_bounds(self) -> Bounds {
        let n = self.n_params();
        let mut b = Bounds::unbounded(n);
        match self {
            FitModel::ExpDecay => b.lower[1] = f64::MIN_POSITIVE,
            FitModel::DampedSin => {
                b.lower[1] = 0.0;
                b.lower[2] = 0.0;
            }
            FitModel::PowerLaw => {
                b.lower[1] = 0.0;
                b.upper[1] = 1.0;
            }
            FitModel::Gaussian | FitModel::GaussianOffset => b.lower[2] = f64::MIN_POSITIVE,
        }
        b
    }
}

/// Fits `model` starting from [`initial_guess`] with its default bounds.
pub fn fit_auto(model: FitModel, x: &[f64], y: &[f64], tolerance: f64) -> Result<FitResult> {
    let p0 = initial_guess(model, x, y)?;
    let opts = FitOptions {
        tolerance,
        bounds: Some(model.default_bounds()),
        ..FitOptions::default()
    };
    nlls_fit(model, x, y, &p0, &opts)
}
