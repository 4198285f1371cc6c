//! Run manifest, written atomically as JSON.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{CheckResult, ExperimentReport};

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    /// Whether the check contributes to the exit status.
    pub enabled: bool,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub relation: String,
}

impl CheckEntry {
    pub fn new(check: &CheckResult, enabled: bool) -> Self {
        CheckEntry {
            name: check.name.clone(),
            enabled,
            passed: check.passed,
            measured: check.measured,
            threshold: check.threshold,
            relation: check.relation.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KsEntry {
    pub time: f64,
    pub distance: f64,
    pub critical: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HSummary {
    pub points: usize,
    pub first: Option<f64>,
    pub last: Option<f64>,
    pub floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub preset: String,
    pub seed: u64,
    pub samples: usize,
    pub threads: usize,
    pub runtime_seconds: f64,
    /// `"pass"` or `"fail"`.
    pub status: String,
    pub exit_code: i32,
    /// Command-line values that replaced configuration values.
    pub overrides: BTreeMap<String, String>,
    /// Effective configuration as TOML.
    pub config: String,
    pub checks: Vec<CheckEntry>,
    pub metrics: BTreeMap<String, f64>,
    pub ks: Vec<KsEntry>,
    pub channel_fractions: Vec<f64>,
    pub dwell_times: usize,
    pub mean_dwell_time: Option<f64>,
    pub h_series: HSummary,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn summarize(report: &ExperimentReport) -> (Vec<KsEntry>, HSummary, Option<f64>) {
        let ks = report
            .ks
            .iter()
            .map(|k| KsEntry {
                time: k.time,
                distance: k.distance,
                critical: k.critical,
                passed: k.passed,
            })
            .collect();
        let h = &report.h_series;
        let summary = HSummary {
            points: h.values.len(),
            first: h.values.first().copied(),
            last: h.values.last().copied(),
            floor: h.floor,
        };
        let dwell = (!report.dwell_times.is_empty())
            .then(|| report.dwell_times.iter().sum::<f64>() / report.dwell_times.len() as f64);
        (ks, summary, dwell)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Writes `contents` to a temporary sibling of `path`, then renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn atomic_write_missing_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nope").join("m.json");
        assert!(matches!(write_atomic(&p, b"x"), Err(Error::Io { .. })));
    }
}
