// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation core for digital control of a transmon qubit by trains of
//! quantized Josephson voltage pulses.
//!
//! The crate is split along the physical pipeline:
//!
//! * [`quantum`]: constants, device parameter records and closed-form formulas.
//! * [`rcsj`]: overdamped junction-array dynamics, Shapiro steps, pulse extraction.
//! * [`transmon`]: three-level transmon evolution under pulse-train or resonant drive
//!   and the Rabi / T1 / Ramsey / leakage experiments built on it.
//! * [`rb`]: single-qubit Clifford group, randomized and interleaved benchmarking.
//! * [`fit`]: nonlinear least squares and the time-series analyses used by the experiments.
//!
//! Independent sweep points are scheduled through [`parallel`], which uses rayon
//! when the `parallel` feature is enabled and runs sequentially otherwise. Results
//! are always merged in input order, so outputs do not depend on the schedule.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod parallel;
pub mod quantum;
pub mod rb;
pub mod rcsj;
pub mod transmon;

pub use error::{Error, Result};
