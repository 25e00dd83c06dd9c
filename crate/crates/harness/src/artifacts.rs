// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use jpgsim_core::fit::FitResult;

use crate::HarnessError;

/// A file produced by a command, held in memory until the run completes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn is_csv(&self) -> bool {
        self.name.ends_with(".csv")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything a command hands back for writing and reporting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub command: String,
    pub files: Vec<Artifact>,
    /// Human-readable result lines for the report.
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn add_file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push(Artifact {
            name: name.to_string(),
            bytes,
        });
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Shortest round-trip decimal form, so equal values always print identically.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "nan".to_string())
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for r in rows {
        w.write_record(r).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub const FIT_REPORT_HEADER: [&str; 5] = ["model", "param_name", "value", "stderr", "converged"];

/// Rows of `fit_report.csv` for one fit, labelled `label`.
pub fn fit_rows(label: &str, fit: &FitResult) -> Vec<Vec<String>> {
    fit.model
        .param_names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            vec![
                label.to_string(),
                name.to_string(),
                num(fit.params[i]),
                num(fit.stderr(i)),
                fit.converged.to_string(),
            ]
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub files: Vec<ManifestFile>,
    pub duration_s: f64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunManifest {
    pub fn new(config_bytes: &[u8], seed: u64, files: &[Artifact], duration_s: f64) -> Self {
        let mut files: Vec<ManifestFile> = files
            .iter()
            .map(|a| ManifestFile {
                name: a.name.clone(),
                sha256: sha256_hex(&a.bytes),
            })
            .collect();
        files.sort_by(|a, b| a.name.cmp(&b.name));
        Self {
            config_sha256: sha256_hex(config_bytes),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            files,
            duration_s,
        }
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }
}

/// Writes each artifact exactly once; names must be unique.
pub fn write_all(dir: &Path, files: &[Artifact]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut seen = std::collections::BTreeSet::new();
    for a in files {
        if !seen.insert(&a.name) {
            return Err(HarnessError::Io(format!("duplicate output {}", a.name)));
        }
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_exact_header_and_unix_newlines() {
        let b = csv_bytes(&["a", "b"], &[vec![num(1.5), num(-0.25)]]);
        assert_eq!(String::from_utf8(b).unwrap(), "a,b\n1.5e0,-2.5e-1\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.0698e9, -1e-300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn manifest_is_sorted_and_hashed() {
        let files = vec![
            Artifact {
                name: "b.csv".into(),
                bytes: b"x".to_vec(),
            },
            Artifact {
                name: "a.csv".into(),
                bytes: Vec::new(),
            },
        ];
        let m = RunManifest::new(b"{}", 7, &files, 0.0);
        assert_eq!(m.files[0].name, "a.csv");
        assert_eq!(
            m.files[0].sha256,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
