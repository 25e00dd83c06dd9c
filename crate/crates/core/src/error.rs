// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of a formula or operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid simulation or integrator configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration diverged at t = {time:e} s: {reason}")]
    Diverged { time: f64, reason: String },

    #[error("trajectory is not locked: {windings} phase windings over {periods} drive periods")]
    NotLocked { windings: i64, periods: i64 },

    #[error("no Shapiro locking found for any drive amplitude")]
    NoLocking,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("normal equations are rank deficient: {0}")]
    RankDeficient(String),

    /// Two routes that must agree (e.g. cached and direct channels) did not.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
