//! Two-slit interference from the post-slit two-packet state.
//!
//! Axis 0 is longitudinal (the packet moves along it with wavenumber
//! `boost`), axis 1 is transverse with the slits at `+-separation/2`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{
    equilibrium_ensemble, fringe_visibility, one_axis_grid, sign_violations, violation,
    CheckResult, EvolutionSpec, ExperimentConfig, ExperimentReport, Histogram, Monitor, Preset,
};
use crate::error::{Result, Violation};
use crate::grid::Axis;
use crate::potential::PotentialSpec;
use crate::trajectories::co_evolve;
use crate::wavefunction::{make_gaussian, superpose, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitParams {
    /// Distance `d` between slit centres.
    pub separation: f64,
    /// Transverse packet width `w` at each slit.
    pub slit_width: f64,
    /// Longitudinal wavenumber.
    pub boost: f64,
    pub longitudinal_width: f64,
    /// Longitudinal starting position.
    pub source: f64,
    /// Histogram bin size in grid cells.
    pub bin_points: usize,
}

impl Default for DoubleSlitParams {
    fn default() -> Self {
        DoubleSlitParams {
            separation: 4.0,
            slit_width: 0.5,
            boost: 2.0,
            longitudinal_width: 2.0,
            source: -16.0,
            bin_points: 8,
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::DoubleSlit(DoubleSlitParams::default()),
        samples: 10_000,
        seed: 1,
        units: Default::default(),
        axes: vec![Axis::new(-32.0, 32.0, 256), Axis::new(-32.0, 32.0, 512)],
        masses: vec![1.0, 1.0],
        evolution: EvolutionSpec {
            dt: 0.005,
            steps: 1600,
            snapshot_stride: 4,
        },
        potential: PotentialSpec::free(),
        check_times: vec![0.0, 4.0, 8.0],
        record_stride: 10,
    }
}

impl DoubleSlitParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        cfg.require_axes(2, &mut out);
        if !(self.separation > 0.0) {
            out.push(violation("double_slit.separation", "must be positive"));
        }
        if !(self.slit_width > 0.0) {
            out.push(violation("double_slit.slit_width", "must be positive"));
        }
        if !(self.longitudinal_width > 0.0) {
            out.push(violation(
                "double_slit.longitudinal_width",
                "must be positive",
            ));
        }
        if self.bin_points == 0 {
            out.push(violation("double_slit.bin_points", "must be >= 1"));
        }
        out
    }

    pub fn initial_state(&self, cfg: &ExperimentConfig) -> Result<WaveFunction> {
        let gx = one_axis_grid(cfg.axes[0])?;
        let gy = one_axis_grid(cfg.axes[1])?;
        let long = make_gaussian(
            &gx,
            &[self.source],
            &[self.longitudinal_width],
            &[self.boost],
            cfg.units,
        )?;
        let half = 0.5 * self.separation;
        let w = self.slit_width;
        let upper = make_gaussian(&gy, &[half], &[w], &[0.0], cfg.units)?;
        let lower = make_gaussian(&gy, &[-half], &[w], &[0.0], cfg.units)?;
        let one = Complex64::new(1.0, 0.0);
        let trans = superpose(&upper, &lower, one, one)?;
        WaveFunction::outer(&long, &trans)
    }
}

pub(super) fn run(cfg: &ExperimentConfig, p: &DoubleSlitParams) -> Result<ExperimentReport> {
    let psi = p.initial_state(cfg)?;
    let grid = psi.grid().clone();
    let plan = cfg.plan(PotentialSpec::free())?;
    let initial = equilibrium_ensemble(&psi, cfg.samples, cfg.seed)?;
    let mut monitor = Monitor::new(cfg);
    let (ensemble, last) = co_evolve(&psi, &plan, &initial, cfg.record_stride, |s, q| {
        monitor.observe(s, q)
    })?;
    let p_final = last.density();
    let marginal = grid.marginal(&p_final, 1);
    let visibility = fringe_visibility(grid.axis(1), &marginal, 0.0);
    let crossings = sign_violations(&grid, &ensemble, 1);
    let finals = ensemble.final_positions();
    let histogram = Histogram::build(
        "transverse_arrival",
        &grid,
        1,
        last.time(),
        &finals,
        &p_final,
        p.bin_points,
    );
    let mut metrics = BTreeMap::new();
    metrics.insert("visibility".into(), visibility);
    metrics.insert("sign_changes".into(), crossings as f64);
    metrics.insert("detection_time".into(), last.time());
    let checks = vec![
        CheckResult::exactly("symmetry", crossings as f64, 0.0),
        monitor.equivariance_check(),
        CheckResult::above("visibility", visibility, 0.5),
    ];
    Ok(ExperimentReport {
        preset: "double_slit".into(),
        checks,
        metrics,
        histograms: vec![histogram],
        channel_fractions: vec![],
        dwell_times: vec![],
        ks: monitor.ks,
        h_series: monitor.h,
        ensemble,
        final_state: last,
        masses: plan.masses.clone(),
    })
}
