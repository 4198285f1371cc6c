//! Dwell time of trajectories inside a square barrier.
//!
//! The oracle is the density integral `int dt int_[a,b] P dx`, evaluated
//! on the same time lattice and with the same end-point weights as the
//! trajectory dwell times.

use std::collections::BTreeMap;

use super::{
    equilibrium_ensemble, interval_mass, violation, CheckResult, EvolutionSpec, ExperimentConfig,
    ExperimentReport, Histogram, Monitor, Preset,
};
use crate::error::{Result, Violation};
use crate::grid::Axis;
use crate::potential::PotentialSpec;
use crate::propagator::energy;
use crate::trajectories::{co_evolve, dwell_time};
use crate::wavefunction::make_gaussian;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierParams {
    /// Barrier height; `None` uses half the packet's mean energy.
    pub height: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub start: f64,
    pub width: f64,
    pub boost: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        BarrierParams {
            height: None,
            lower: 0.0,
            upper: 2.0,
            start: -20.0,
            width: 2.0,
            boost: 4.0,
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::BarrierDwell(BarrierParams::default()),
        samples: 10_000,
        seed: 1,
        units: Default::default(),
        axes: vec![Axis::new(-64.0, 64.0, 1024)],
        masses: vec![1.0],
        evolution: EvolutionSpec {
            dt: 0.005,
            steps: 2400,
            snapshot_stride: 4,
        },
        potential: PotentialSpec::free(),
        check_times: vec![0.0, 6.0, 12.0],
        record_stride: 1,
    }
}

impl BarrierParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        cfg.require_axes(1, &mut out);
        if !(self.lower < self.upper) {
            out.push(violation(
                "barrier_dwell.upper",
                "barrier_dwell.upper must exceed barrier_dwell.lower",
            ));
        }
        if let Some(h) = self.height {
            if !h.is_finite() {
                out.push(violation("barrier_dwell.height", "must be finite"));
            }
        }
        if !(self.width > 0.0) {
            out.push(violation("barrier_dwell.width", "must be positive"));
        }
        if let Some(a) = cfg.axes.first() {
            if !(self.lower >= a.min && self.upper < a.max) {
                out.push(violation(
                    "barrier_dwell.lower",
                    "barrier must lie inside the grid",
                ));
            }
        }
        out
    }
}

pub(super) fn run(cfg: &ExperimentConfig, p: &BarrierParams) -> Result<ExperimentReport> {
    let grid = cfg.grid()?;
    let psi = make_gaussian(&grid, &[p.start], &[p.width], &[p.boost], cfg.units)?;
    let masses = cfg.mass_vector()?;
    let mean_energy = energy(&psi, &PotentialSpec::free(), &masses)?;
    let height = p.height.unwrap_or(0.5 * mean_energy);
    let plan = cfg.plan(PotentialSpec::barrier(height, p.lower, p.upper))?;
    let initial = equilibrium_ensemble(&psi, cfg.samples, cfg.seed)?;
    let axis = *grid.axis(0);
    let mut monitor = Monitor::new(cfg);
    let mut inside = Vec::new();
    let (ensemble, last) = co_evolve(&psi, &plan, &initial, 1, |s, q| {
        inside.push(interval_mass(&axis, &s.density(), p.lower, p.upper));
        monitor.observe(s, q)
    })?;

    let h = cfg.evolution.interval();
    let m = inside.len();
    let oracle: f64 = inside
        .iter()
        .enumerate()
        .map(|(k, v)| {
            if k == 0 || k + 1 == m {
                0.5 * h * v
            } else {
                h * v
            }
        })
        .sum();
    let dwell: Vec<f64> = ensemble
        .trajectories
        .iter()
        .map(|t| dwell_time(t, &[p.lower], &[p.upper]))
        .collect();
    let n = dwell.len() as f64;
    let mean = dwell.iter().sum::<f64>() / n;
    let std = (dwell.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();

    let finals = ensemble.final_positions();
    let transmitted = finals.iter().filter(|&&x| x > p.upper).count() as f64 / n;
    let expected = interval_mass(&axis, &last.density(), p.upper, axis.max);
    let sigma = (expected * (1.0 - expected) / n).sqrt();
    let relative = if oracle > 0.0 {
        (mean - oracle).abs() / oracle
    } else {
        mean.abs()
    };

    let mut metrics = BTreeMap::new();
    metrics.insert("barrier_height".into(), height);
    metrics.insert("mean_energy".into(), mean_energy);
    metrics.insert("dwell_mean".into(), mean);
    metrics.insert("dwell_std".into(), std);
    metrics.insert("dwell_oracle".into(), oracle);
    metrics.insert("transmission".into(), transmitted);
    metrics.insert("transmission_oracle".into(), expected);
    let transmission = if sigma > 0.0 {
        CheckResult::at_most("transmission", (transmitted - expected).abs() / sigma, 3.0)
    } else {
        CheckResult::below("transmission", (transmitted - expected).abs(), 1.0 / n)
    };
    let checks = vec![
        CheckResult::below("dwell", relative, 0.02),
        transmission,
        monitor.equivariance_check(),
    ];
    let histograms = vec![Histogram::build(
        "final_position",
        &grid,
        0,
        last.time(),
        &finals,
        &last.density(),
        8,
    )];
    Ok(ExperimentReport {
        preset: "barrier_dwell".into(),
        checks,
        metrics,
        histograms,
        channel_fractions: vec![1.0 - transmitted, transmitted],
        dwell_times: dwell,
        ks: monitor.ks,
        h_series: monitor.h,
        ensemble,
        final_state: last,
        masses: plan.masses.clone(),
    })
}
