// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;
use std::path::Path;

use crate::artifacts::Outcome;
use crate::HarnessError;

pub const REPORT_NAME: &str = "report.txt";

/// Plain-text summary of one command's results and checks. Every listed
/// artifact must already exist under `dir`.
pub fn emit_report(dir: &Path, outcome: &Outcome) -> Result<String, HarnessError> {
    if outcome.files.is_empty() {
        return Err(HarnessError::Io("no artifacts to report on".into()));
    }
    for a in &outcome.files {
        if !dir.join(&a.name).is_file() {
            return Err(HarnessError::Io(format!("missing artifact {}", a.name)));
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "== {} ==", outcome.command);
    for line in &outcome.summary {
        let _ = writeln!(s, "  {line}");
    }
    if !outcome.checks.is_empty() {
        let _ = writeln!(s, "  checks:");
        for c in &outcome.checks {
            let _ = writeln!(s, "    [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    let _ = writeln!(s, "  files:");
    for a in &outcome.files {
        let _ = writeln!(s, "    {}", a.name);
    }
    Ok(s)
}
