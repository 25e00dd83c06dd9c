// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use super::{fit_auto, FitModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_dev: f64,
    pub histogram: Histogram,
    /// `(μ, σ)` of a Gaussian fitted to the histogram, absent when the
    /// samples are degenerate or the fit fails.
    pub gaussian: Option<(f64, f64)>,
}

/// Sample statistics plus a Sturges-binned histogram with a Gaussian fit.
pub fn gaussian_histogram_stats(samples: &[f64]) -> Result<HistogramStats> {
    if samples.len() < 10 {
        return Err(Error::Domain(format!(
            "histogram statistics need at least 10 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_dev = var.sqrt();

    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = (n.log2().ceil() as usize + 1).max(1);
    if hi <= lo {
        return Ok(HistogramStats {
            mean,
            std_dev: 0.0,
            histogram: Histogram {
                edges: vec![lo, hi],
                counts: vec![samples.len()],
            },
            gaussian: None,
        });
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let histogram = Histogram { edges, counts };
    let centers = histogram.centers();
    let heights: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    let gaussian = fit_auto(FitModel::Gaussian, &centers, &heights, 1e-10)
        .ok()
        .filter(|f| f.params.iter().all(|p| p.is_finite()))
        .map(|f| (f.params[1], f.params[2].abs()));
    Ok(HistogramStats {
        mean,
        std_dev,
        histogram,
        gaussian,
    })
}
