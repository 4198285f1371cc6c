//! Relaxation of a nonequilibrium ensemble in a box (see
//! [`crate::equilibrium::relaxation_run`]).

use std::collections::BTreeMap;

use super::{
    violation, CheckResult, EvolutionSpec, ExperimentConfig, ExperimentReport, Histogram, Preset,
};
use crate::equilibrium::{
    random_phase_modes, relaxation_run, CoarseGraining, InitialDensity, RelaxationSpec,
};
use crate::error::{Result, Violation};
use crate::grid::{Axis, MassVector};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationParams {
    pub phase_seed: u64,
    /// Modes `1..=modes_per_axis` on each axis.
    pub modes_per_axis: u32,
    pub initial: InitialDensity,
    /// Coarse cell edge in grid points.
    pub cell: usize,
    /// Snapshot intervals between H-bar evaluations.
    pub h_every: usize,
    /// Required `H(T) / H(0)` for a nonequilibrium start.
    pub decay_ratio: f64,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        RelaxationParams {
            phase_seed: 1,
            modes_per_axis: 4,
            initial: InitialDensity::Mode { nx: 1, ny: 1 },
            cell: 8,
            h_every: 32,
            decay_ratio: 0.5,
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    let base = RelaxationSpec::sixteen_modes(10_000, 1, 1);
    let axis = Axis::new(-base.side, base.side, base.points);
    ExperimentConfig {
        preset: Preset::Relaxation(RelaxationParams::default()),
        samples: base.samples,
        seed: base.seed,
        units: Default::default(),
        axes: vec![axis, axis],
        masses: vec![1.0, 1.0],
        evolution: EvolutionSpec {
            dt: base.dt,
            steps: base.steps,
            snapshot_stride: base.snapshot_stride,
        },
        potential: PotentialSpec::free(),
        check_times: vec![],
        record_stride: 32,
    }
}

impl RelaxationParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        cfg.require_axes(2, &mut out);
        if cfg.axes.len() == 2 {
            let (a, b) = (cfg.axes[0], cfg.axes[1]);
            if a != b || (a.min + a.max).abs() > 1e-12 * a.max.abs() {
                out.push(violation(
                    "grid.axes",
                    "relaxation needs two identical axes symmetric about 0",
                ));
            }
        }
        if cfg.masses.iter().any(|&m| m != 1.0) {
            out.push(violation("masses", "relaxation runs with unit masses"));
        }
        if cfg.units.hbar != 1.0 {
            out.push(violation("units.hbar", "relaxation runs with hbar = 1"));
        }
        if !cfg.potential.terms.is_empty() {
            out.push(violation("potential", "relaxation runs in a free box"));
        }
        if !cfg.check_times.is_empty() {
            out.push(violation(
                "check_times",
                "relaxation reports H-bar every h_every intervals; check_times must be empty",
            ));
        }
        if self.modes_per_axis == 0 {
            out.push(violation("relaxation.modes_per_axis", "must be >= 1"));
        }
        if self.h_every == 0 {
            out.push(violation("relaxation.h_every", "must be >= 1"));
        }
        if !(self.decay_ratio > 0.0) {
            out.push(violation("relaxation.decay_ratio", "must be positive"));
        }
        if let Ok(g) = cfg.grid() {
            if let Err(e) = CoarseGraining::new(self.cell).validate(&g) {
                out.push(violation("relaxation.cell", e.to_string()));
            }
            let nyquist = (g.axis(0).points / 2) as u32;
            if self.modes_per_axis >= nyquist {
                out.push(violation(
                    "relaxation.modes_per_axis",
                    "exceeds the grid resolution",
                ));
            }
            if let InitialDensity::Mode { nx, ny } = self.initial {
                if nx == 0 || ny == 0 || nx >= nyquist || ny >= nyquist {
                    out.push(violation("relaxation.initial", "mode out of range"));
                }
            }
        }
        out
    }

    pub fn spec(&self, cfg: &ExperimentConfig) -> RelaxationSpec {
        let mut spec = RelaxationSpec::sixteen_modes(cfg.samples, cfg.seed, self.phase_seed);
        spec.modes = random_phase_modes(self.modes_per_axis, self.phase_seed);
        spec.side = cfg.axes[0].max;
        spec.points = cfg.axes[0].points;
        spec.initial = self.initial;
        spec.graining = CoarseGraining::new(self.cell);
        spec.dt = cfg.evolution.dt;
        spec.steps = cfg.evolution.steps;
        spec.snapshot_stride = cfg.evolution.snapshot_stride;
        spec.h_every = self.h_every;
        spec
    }
}

pub(super) fn run(cfg: &ExperimentConfig, p: &RelaxationParams) -> Result<ExperimentReport> {
    let spec = p.spec(cfg);
    let out = relaxation_run(&spec)?;
    let series = out.series;
    let h0 = series.first().unwrap_or(0.0);
    let h1 = series.last().unwrap_or(0.0);
    let min = series.values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut metrics = BTreeMap::new();
    metrics.insert("h_initial".into(), h0);
    metrics.insert("h_final".into(), h1);
    metrics.insert("h_floor".into(), series.floor);
    let mut checks = vec![CheckResult::above("h_nonnegative", min, -1e-10)];
    match p.initial {
        InitialDensity::Equilibrium => {
            let max = series.values.iter().copied().fold(0.0, f64::max);
            checks.push(CheckResult::below("h_floor", max, series.floor));
        }
        InitialDensity::Mode { .. } => {
            let ratio = if h0 > 0.0 { h1 / h0 } else { f64::INFINITY };
            metrics.insert("h_ratio".into(), ratio);
            checks.push(CheckResult::below("h_decay", ratio, p.decay_ratio));
        }
    }
    let grid = cfg.grid()?;
    let finals = out.ensemble.final_positions();
    let dens = out.final_state.density();
    let histograms = vec![
        Histogram::build(
            "final_x",
            &grid,
            0,
            out.final_state.time(),
            &finals,
            &dens,
            p.cell,
        ),
        Histogram::build(
            "final_y",
            &grid,
            1,
            out.final_state.time(),
            &finals,
            &dens,
            p.cell,
        ),
    ];
    Ok(ExperimentReport {
        preset: "relaxation".into(),
        checks,
        metrics,
        histograms,
        channel_fractions: vec![],
        dwell_times: vec![],
        ks: vec![],
        h_series: series,
        ensemble: out.ensemble,
        final_state: out.final_state,
        masses: MassVector::new(cfg.masses.clone())?,
    })
}
