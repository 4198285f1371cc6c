//! User-described superposition of Gaussian packets in an arbitrary
//! potential, with the generic checks.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{
    equilibrium_ensemble, rank_violations, violation, CheckResult, EvolutionSpec, ExperimentConfig,
    ExperimentReport, Histogram, Monitor, Preset,
};
use crate::error::{Result, Violation};
use crate::grid::Axis;
use crate::potential::PotentialSpec;
use crate::trajectories::co_evolve;
use crate::wavefunction::{make_gaussian, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    pub center: Vec<f64>,
    pub width: Vec<f64>,
    pub boost: Vec<f64>,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomParams {
    pub packets: Vec<PacketSpec>,
}

impl Default for CustomParams {
    fn default() -> Self {
        CustomParams {
            packets: vec![PacketSpec {
                center: vec![0.0],
                width: vec![1.0],
                boost: vec![0.0],
                amplitude: Complex64::new(1.0, 0.0),
            }],
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::Custom(CustomParams::default()),
        samples: 10_000,
        seed: 1,
        units: Default::default(),
        axes: vec![Axis::new(-20.0, 20.0, 512)],
        masses: vec![1.0],
        evolution: EvolutionSpec {
            dt: 0.002,
            steps: 1000,
            snapshot_stride: 5,
        },
        potential: PotentialSpec::free(),
        check_times: vec![0.0, 1.0, 2.0],
        record_stride: 10,
    }
}

impl CustomParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.packets.is_empty() {
            out.push(violation(
                "custom.packets",
                "at least one packet is required",
            ));
        }
        let d = cfg.axes.len();
        for (i, p) in self.packets.iter().enumerate() {
            for (name, v) in [
                ("center", &p.center),
                ("width", &p.width),
                ("boost", &p.boost),
            ] {
                if v.len() != d {
                    out.push(violation(
                        &format!("custom.packets[{i}].{name}"),
                        format!("expected {d} values, found {}", v.len()),
                    ));
                }
            }
            if p.width.iter().any(|w| !(*w > 0.0)) {
                out.push(violation(
                    &format!("custom.packets[{i}].width"),
                    "must be positive",
                ));
            }
        }
        out
    }

    pub fn initial_state(&self, cfg: &ExperimentConfig) -> Result<WaveFunction> {
        let grid = cfg.grid()?;
        let mut amps = vec![Complex64::default(); grid.len()];
        for p in &self.packets {
            let g = make_gaussian(&grid, &p.center, &p.width, &p.boost, cfg.units)?;
            for (a, b) in amps.iter_mut().zip(g.amplitudes()) {
                *a += p.amplitude * b;
            }
        }
        WaveFunction::from_amplitudes(grid, amps, cfg.units)
    }
}

pub(super) fn run(cfg: &ExperimentConfig, p: &CustomParams) -> Result<ExperimentReport> {
    let psi = p.initial_state(cfg)?;
    let grid = psi.grid().clone();
    let plan = cfg.plan(PotentialSpec::free())?;
    let initial = equilibrium_ensemble(&psi, cfg.samples, cfg.seed)?;
    let mut monitor = Monitor::new(cfg);
    let (ensemble, last) = co_evolve(&psi, &plan, &initial, cfg.record_stride, |s, q| {
        monitor.observe(s, q)
    })?;
    let mut metrics = BTreeMap::new();
    let drift = (last.norm() - 1.0).abs();
    metrics.insert("norm_drift".into(), drift);
    let mut checks = vec![monitor.equivariance_check()];
    if grid.ndim() == 1 {
        let crossings = rank_violations(&grid, &ensemble, 0);
        metrics.insert("rank_violations".into(), crossings as f64);
        checks.push(CheckResult::exactly("no_crossing", crossings as f64, 0.0));
    }
    if !plan.potential.has_absorber() {
        checks.push(CheckResult::below("unitarity", drift, 1e-9));
    }
    let finals = ensemble.final_positions();
    let dens = last.density();
    let histograms = (0..grid.ndim())
        .map(|a| {
            Histogram::build(
                &format!("final_axis{a}"),
                &grid,
                a,
                last.time(),
                &finals,
                &dens,
                4,
            )
        })
        .collect();
    Ok(ExperimentReport {
        preset: "custom".into(),
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
