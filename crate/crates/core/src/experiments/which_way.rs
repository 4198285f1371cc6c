//! Which-way marking of a two-packet interference pattern.
//!
//! Axis 0 carries the two packets at `+-separation/2`, axis 1 a pointer
//! that is shifted by `+a` or `-a` depending on the packet. The same
//! packets are also evolved with an unshifted pointer. Fringes are measured
//! as the size of the interference term against the incoherent sum of the
//! two packets evolved separately.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::pointer::channel_states;
use super::{
    equilibrium_ensemble, interference_contrast, one_axis_grid, violation, CheckResult,
    EvolutionSpec, ExperimentConfig, ExperimentReport, Histogram, Monitor, Preset,
};
use crate::error::{Error, Result, Violation};
use crate::grid::{Axis, MassVector};
use crate::potential::PotentialSpec;
use crate::propagator::Propagator;
use crate::trajectories::co_evolve;
use crate::wavefunction::{inner_product, make_gaussian, superpose, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct WhichWayParams {
    pub separation: f64,
    pub slit_width: f64,
    pub pointer_width: f64,
    pub pointer_shift: f64,
    pub overlap_limit: f64,
    /// Half-width of the central region where fringes are measured.
    pub window: f64,
}

impl Default for WhichWayParams {
    fn default() -> Self {
        WhichWayParams {
            separation: 4.0,
            slit_width: 0.5,
            pointer_width: 1.0,
            pointer_shift: 7.0,
            overlap_limit: 1e-8,
            window: 8.0,
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::WhichWay(WhichWayParams::default()),
        samples: 10_000,
        seed: 1,
        units: Default::default(),
        axes: vec![Axis::new(-64.0, 64.0, 1024), Axis::new(-16.0, 16.0, 128)],
        masses: vec![1.0, 100.0],
        evolution: EvolutionSpec {
            dt: 0.005,
            steps: 1600,
            snapshot_stride: 8,
        },
        potential: PotentialSpec::free(),
        check_times: vec![0.0, 8.0],
        record_stride: 10,
    }
}

impl WhichWayParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        cfg.require_axes(2, &mut out);
        if !cfg.potential.terms.is_empty() {
            out.push(violation(
                "potential",
                "which_way evolves free packets; extra potential terms are not supported",
            ));
        }
        for (name, v) in [
            ("separation", self.separation),
            ("slit_width", self.slit_width),
            ("pointer_width", self.pointer_width),
            ("pointer_shift", self.pointer_shift),
            ("window", self.window),
        ] {
            if !(v > 0.0) {
                out.push(violation(&format!("which_way.{name}"), "must be positive"));
            }
        }
        out
    }
}

/// Evolves `psi` by `steps` steps of `prop`.
fn propagate(prop: &Propagator, mut psi: WaveFunction, steps: usize) -> Result<WaveFunction> {
    for _ in 0..steps {
        prop.advance(&mut psi)?;
    }
    Ok(psi)
}

pub(super) fn run(cfg: &ExperimentConfig, p: &WhichWayParams) -> Result<ExperimentReport> {
    let half = 0.5 * p.separation;
    let w = p.slit_width;
    let packets = [(-half, w, 0.0), (half, w, 0.0)];
    let one = Complex64::new(1.0, 0.0);
    let (marked, overlap) = channel_states(cfg, packets, p.pointer_width, p.pointer_shift)?;
    if overlap > p.overlap_limit {
        return Err(Error::OverlapTooLarge {
            overlap,
            limit: p.overlap_limit,
        });
    }
    let (unmarked, _) = channel_states(cfg, packets, p.pointer_width, 0.0)?;
    let coupled = superpose(&marked[0], &marked[1], one, one)?;
    let reference = superpose(&unmarked[0], &unmarked[1], one, one)?;
    let coupled_norm = 2.0 + 2.0 * inner_product(&marked[0], &marked[1])?.re;
    let reference_norm = 2.0 + 2.0 * inner_product(&unmarked[0], &unmarked[1])?.re;

    let grid = coupled.grid().clone();
    let plan = cfg.plan(PotentialSpec::free())?;
    let steps = cfg.evolution.steps;
    let hbar = cfg.units.hbar;

    // Incoherent sum from the packets evolved one at a time.
    let gx = one_axis_grid(cfg.axes[0])?;
    let mx = MassVector::new(vec![cfg.masses[0]])?;
    let prop_x = Propagator::new(&gx, &PotentialSpec::free(), &mx, hbar, cfg.evolution.dt)?;
    let mut separate = Vec::new();
    for &(c, s, k) in &packets {
        let g = make_gaussian(&gx, &[c], &[s], &[k], cfg.units)?;
        separate.push(propagate(&prop_x, g, steps)?.density());
    }
    let incoherent: Vec<f64> = separate[0]
        .iter()
        .zip(&separate[1])
        .map(|(a, b)| a + b)
        .collect();

    let prop = Propagator::from_plan(&grid, &plan, hbar)?;
    let reference_final = propagate(&prop, reference, steps)?;

    let initial = equilibrium_ensemble(&coupled, cfg.samples, cfg.seed)?;
    let mut monitor = Monitor::new(cfg);
    let (ensemble, last) = co_evolve(&coupled, &plan, &initial, cfg.record_stride, |s, q| {
        monitor.observe(s, q)
    })?;

    let axis = grid.axis(0);
    let scaled = |norm: f64| -> Vec<f64> { incoherent.iter().map(|v| v / norm).collect() };
    let coupled_marginal = grid.marginal(&last.density(), 0);
    let reference_marginal = grid.marginal(&reference_final.density(), 0);
    let v_coupled = interference_contrast(
        axis,
        &coupled_marginal,
        &scaled(coupled_norm),
        0.0,
        p.window,
    );
    let v_reference = interference_contrast(
        axis,
        &reference_marginal,
        &scaled(reference_norm),
        0.0,
        p.window,
    );

    let mut metrics = BTreeMap::new();
    metrics.insert("visibility_marked".into(), v_coupled);
    metrics.insert("visibility_unmarked".into(), v_reference);
    metrics.insert("pointer_overlap".into(), overlap);
    let checks = vec![
        CheckResult::below("which_way", v_coupled, 0.05),
        CheckResult::above("interference", v_reference, 0.5),
        monitor.equivariance_check(),
    ];
    let finals = ensemble.final_positions();
    let histograms = vec![Histogram::build(
        "system_arrival",
        &grid,
        0,
        last.time(),
        &finals,
        &last.density(),
        8,
    )];
    Ok(ExperimentReport {
        preset: "which_way".into(),
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
