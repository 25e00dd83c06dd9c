// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Three-level transmon driven by pulse trains or resonant pulses.

mod drive;
mod evolve;
mod experiments;
mod state;

pub use drive::*;
pub use evolve::*;
pub use experiments::*;
pub use state::*;
