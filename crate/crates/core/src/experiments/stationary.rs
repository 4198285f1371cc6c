//! Harmonic-oscillator eigenstates and their superpositions.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{
    equilibrium_ensemble, max_displacement, rank_violations, violation, CheckResult, EvolutionSpec,
    ExperimentConfig, ExperimentReport, Histogram, Monitor, Preset,
};
use crate::error::{Result, Violation};
use crate::grid::Axis;
use crate::potential::PotentialSpec;
use crate::trajectories::co_evolve;
use crate::wavefunction::{harmonic_eigenstate, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryParams {
    /// One level gives an eigenstate; several give their equal-weight sum.
    pub levels: Vec<usize>,
    pub omega: f64,
    /// Displacement bound for a single eigenstate.
    pub rest_tolerance: f64,
    /// Displacement that a superposition must exceed.
    pub motion_threshold: f64,
}

impl Default for StationaryParams {
    fn default() -> Self {
        StationaryParams {
            levels: vec![0],
            omega: 1.0,
            rest_tolerance: 1e-6,
            motion_threshold: 0.1,
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::Stationary(StationaryParams::default()),
        samples: 1000,
        seed: 1,
        units: Default::default(),
        axes: vec![Axis::new(-10.0, 10.0, 256)],
        masses: vec![1.0],
        evolution: EvolutionSpec {
            dt: 0.001,
            steps: 10_000,
            snapshot_stride: 10,
        },
        potential: PotentialSpec::free(),
        check_times: vec![0.0, 5.0, 10.0],
        record_stride: 10,
    }
}

impl StationaryParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        cfg.require_axes(1, &mut out);
        if self.levels.is_empty() {
            out.push(violation(
                "stationary.levels",
                "at least one level is required",
            ));
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            out.push(violation("stationary.levels", "levels must be distinct"));
        }
        if self.levels.iter().any(|&n| n > 40) {
            out.push(violation(
                "stationary.levels",
                "levels above 40 are not supported",
            ));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            out.push(violation("stationary.omega", "must be positive"));
        }
        out
    }

    pub fn initial_state(&self, cfg: &ExperimentConfig) -> Result<WaveFunction> {
        let grid = cfg.grid()?;
        let mut amps = vec![Complex64::default(); grid.len()];
        for &n in &self.levels {
            let e = harmonic_eigenstate(&grid, n, self.omega, cfg.masses[0], cfg.units)?;
            for (a, b) in amps.iter_mut().zip(e.amplitudes()) {
                *a += b;
            }
        }
        WaveFunction::from_amplitudes(grid, amps, cfg.units)
    }
}

pub(super) fn run(cfg: &ExperimentConfig, p: &StationaryParams) -> Result<ExperimentReport> {
    let psi = p.initial_state(cfg)?;
    let grid = psi.grid().clone();
    let plan = cfg.plan(PotentialSpec::harmonic(vec![p.omega]))?;
    let initial = equilibrium_ensemble(&psi, cfg.samples, cfg.seed)?;
    let mut monitor = Monitor::new(cfg);
    let (ensemble, last) = co_evolve(&psi, &plan, &initial, cfg.record_stride, |s, q| {
        monitor.observe(s, q)
    })?;
    let displacement = max_displacement(&grid, &ensemble);
    let crossings = rank_violations(&grid, &ensemble, 0);
    let mut metrics = BTreeMap::new();
    metrics.insert("max_displacement".into(), displacement);
    metrics.insert("rank_violations".into(), crossings as f64);
    let mut checks = Vec::new();
    if p.levels.len() == 1 {
        checks.push(CheckResult::below(
            "at_rest",
            displacement,
            p.rest_tolerance,
        ));
    } else {
        checks.push(CheckResult::above(
            "motion",
            displacement,
            p.motion_threshold,
        ));
    }
    checks.push(CheckResult::exactly("no_crossing", crossings as f64, 0.0));
    checks.push(monitor.equivariance_check());
    let finals = ensemble.final_positions();
    let histograms = vec![Histogram::build(
        "final_position",
        &grid,
        0,
        last.time(),
        &finals,
        &last.density(),
        4,
    )];
    Ok(ExperimentReport {
        preset: "stationary".into(),
        checks,
        metrics,
        histograms,
        channel_fractions: vec![],
        dwell_times: vec![],
        ks: monitor.ks,
        h_series: monitor.h,
        ensemble,
        final_state: last,
        masses: plan.masses.clone(),
    })
}
