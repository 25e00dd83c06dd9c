// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use super::{fit_auto, FitModel};
use crate::error::{Error, Result};
use crate::parallel::{map_with, Strategy};

const MIN_WINDOW_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowEstimate {
    pub t_center: f64,
    pub frequency: f64,
    pub frequency_err: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowedFrequency {
    pub estimates: Vec<WindowEstimate>,
    /// Centres of windows whose fit failed or did not converge.
    pub skipped: Vec<f64>,
}

/// Tracks the oscillation frequency of `y(t)` with damped-sinusoid fits over
/// windows of width `window_span` that advance by half a span.
///
/// Each window is fitted in local time `t − t_center`.
pub fn sliding_window_frequency(
    t: &[f64],
    y: &[f64],
    window_span: f64,
    strategy: Strategy,
) -> Result<WindowedFrequency> {
    if t.len() != y.len() {
        return Err(Error::Fit("t and y lengths differ".into()));
    }
    if !(window_span > 0.0) {
        return Err(Error::Domain("window span must be positive".into()));
    }
    if t.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time samples must be sorted".into()));
    }
    let (Some(&t0), Some(&t_end)) = (t.first(), t.last()) else {
        return Ok(WindowedFrequency::default());
    };
    let step = 0.5 * window_span;
    let mut starts = Vec::new();
    let mut s = t0;
    // A tiny slack keeps the last window when the span divides the record exactly.
    while s + window_span <= t_end + 1e-9 * window_span {
        starts.push(s);
        s += step;
    }

    let fits = map_with(strategy, &starts, |&start| {
        let end = start + window_span;
        let center = start + step;
        let lo = t.partition_point(|&v| v < start);
        let hi = t.partition_point(|&v| v <= end);
        if hi - lo < MIN_WINDOW_SAMPLES {
            return Err(center);
        }
        let local: Vec<f64> = t[lo..hi].iter().map(|v| v - center).collect();
        match fit_auto(FitModel::DampedSin, &local, &y[lo..hi], 1e-10) {
            Ok(fit) if fit.converged && fit.params[2].is_finite() => Ok(WindowEstimate {
                t_center: center,
                frequency: fit.params[2],
                frequency_err: fit.stderr(2),
            }),
            _ => Err(center),
        }
    });

    let mut out = WindowedFrequency::default();
    for r in fits {
        match r {
            Ok(e) => out.estimates.push(e),
            Err(c) => out.skipped.push(c),
        }
    }
    Ok(out)
}
