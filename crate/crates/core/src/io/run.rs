//! Command-line run orchestration: configuration, thread pool, outputs and
//! exit status.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::experiments::run_experiment;

use super::config::{parse_config_with, RunConfig};
use super::manifest::{write_atomic, CheckEntry, RunManifest};
use super::output::{field_csv, h_series_csv, histogram_csv, trajectory_csv};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

pub const DEFAULT_OUT_DIR: &str = "bohm-out";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const FIELD_FILE: &str = "fields.csv";
pub const HISTOGRAM_FILE: &str = "histograms.csv";
pub const H_SERIES_FILE: &str = "h_series.csv";

/// Command-line values; each one that is set overrides the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub experiment: Option<String>,
    pub checks: Option<Vec<String>>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

/// Resolves the effective configuration and the overrides applied to it.
pub fn resolve(opts: &RunOptions) -> Result<(RunConfig, BTreeMap<String, String>)> {
    let text = match &opts.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    let mut cfg = parse_config_with(&text, opts.experiment.as_deref())?;
    let mut overrides = BTreeMap::new();
    if let Some(e) = &opts.experiment {
        overrides.insert("experiment".into(), e.clone());
    }
    if let Some(s) = opts.seed {
        cfg.experiment.seed = s;
        overrides.insert("seed".into(), s.to_string());
    }
    if let Some(c) = &opts.checks {
        cfg.checks = Some(c.clone());
        overrides.insert("checks".into(), c.join(","));
    }
    if let Some(d) = &opts.out {
        cfg.output.directory = Some(d.clone());
        overrides.insert("output.directory".into(), d.display().to_string());
    }
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be >= 1".into()));
        }
        overrides.insert("threads".into(), n.to_string());
    }
    cfg.validate()?;
    Ok((cfg, overrides))
}

/// Fails early when `dir` cannot be created or written.
fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(format!(".bohm-probe{}", std::process::id()));
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Runs one configured experiment and writes its outputs.
///
/// Returns `Err` for anything that prevents a complete run (exit code 1);
/// otherwise the outcome carries exit code 0 or 2.
pub fn execute(opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let (cfg, overrides) = resolve(opts)?;
    let out_dir = cfg
        .output
        .directory
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    prepare_dir(&out_dir)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();

    let (report, files) = pool.install(|| -> Result<_> {
        let report = run_experiment(&cfg.experiment)?;
        let mut files = vec![
            (
                TRAJECTORY_FILE,
                trajectory_csv(&report.ensemble, cfg.output.trajectories),
            ),
            (
                FIELD_FILE,
                field_csv(&report.final_state, &report.masses, cfg.output.field_stride)?,
            ),
        ];
        if !report.histograms.is_empty() {
            files.push((HISTOGRAM_FILE, histogram_csv(&report.histograms)));
        }
        if !report.h_series.values.is_empty() {
            files.push((H_SERIES_FILE, h_series_csv(&report.h_series)));
        }
        Ok((report, files))
    })?;

    let enabled = |name: &str| {
        cfg.checks
            .as_ref()
            .is_none_or(|c| c.iter().any(|x| x == name))
    };
    if let Some(wanted) = &cfg.checks {
        for w in wanted {
            if report.check(w).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "check {w:?} is not evaluated for this {} configuration",
                    report.preset
                )));
            }
        }
    }
    let checks: Vec<CheckEntry> = report
        .checks
        .iter()
        .map(|c| CheckEntry::new(c, enabled(&c.name)))
        .collect();
    let passed = checks.iter().filter(|c| c.enabled).all(|c| c.passed);
    let exit_code = if passed { EXIT_PASS } else { EXIT_CHECK_FAILED };

    for (name, body) in &files {
        write_atomic(&out_dir.join(name), body.as_bytes())?;
    }
    let (ks, h_series, mean_dwell_time) = RunManifest::summarize(&report);
    let manifest = RunManifest {
        tool: "bohm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        preset: report.preset.clone(),
        seed: cfg.experiment.seed,
        samples: cfg.experiment.samples,
        threads,
        runtime_seconds: start.elapsed().as_secs_f64(),
        status: if passed { "pass" } else { "fail" }.into(),
        exit_code,
        overrides,
        config: cfg.to_toml(),
        checks,
        metrics: report.metrics.clone(),
        ks,
        channel_fractions: report.channel_fractions.clone(),
        dwell_times: report.dwell_times.len(),
        mean_dwell_time,
        h_series,
        outputs: files.iter().map(|(n, _)| n.to_string()).collect(),
    };
    write_atomic(&out_dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(RunOutcome {
        exit_code,
        out_dir,
        manifest,
    })
}
