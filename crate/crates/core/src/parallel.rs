// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Ordered map over independent work items.
//!
//! Every sweep in the crate (bias points, drive powers, delays, sequences,
//! pulse widths) goes through [`map`], so switching the `parallel` feature off
//! yields a fully sequential build with identical results.

/// Scheduling strategy for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Sequential,
    /// Uses the rayon global pool when the `parallel` feature is enabled,
    /// otherwise falls back to [`Strategy::Sequential`].
    #[default]
    Parallel,
}

impl Strategy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }
}

/// Maps `f` over `items` with the default strategy. Output order matches input order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(Strategy::default(), items, f)
}

pub fn map_with<T, R, F>(strategy: Strategy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = strategy;
    items.iter().map(f).collect()
}

/// Index-based variant of [`map_with`] for work described by a count.
pub fn map_range<R, F>(strategy: Strategy, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = strategy;
    (0..n).map(f).collect()
}
