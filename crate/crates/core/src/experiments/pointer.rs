//! Position measurement by a pointer coordinate, after the interaction.
//!
//! Axis 0 is the measured system, axis 1 the pointer. The interaction is
//! applied as a map: channel `I` is tagged by translating the pointer
//! packet to `+a` (channel 1) or `-a` (channel 2), giving
//! `c1 psi1(x) phi(y - a) + c2 psi2(x) phi(y + a)`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{
    equilibrium_ensemble, one_axis_grid, violation, CheckResult, EvolutionSpec, ExperimentConfig,
    ExperimentReport, Histogram, Monitor, Preset,
};
use crate::error::{Error, Result, Violation};
use crate::grid::{Axis, SpatialGrid};
use crate::potential::PotentialSpec;
use crate::trajectories::{
    classify_channel, co_evolve, InitialEnsemble, Region, TrajectoryEnsemble,
};
use crate::wavefunction::{inner_product, make_gaussian, superpose, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct PointerParams {
    pub c1: Complex64,
    pub c2: Complex64,
    /// Centres of the two system packets.
    pub system_centers: [f64; 2],
    pub system_width: f64,
    pub system_boost: f64,
    pub pointer_width: f64,
    /// Pointer displacement `a` per channel.
    pub pointer_shift: f64,
    /// Largest allowed `|<phi(y - a)|phi(y + a)>|`.
    pub overlap_limit: f64,
    /// Whether to re-run each channel alone for the empty-wave comparison.
    pub empty_wave: bool,
}

impl Default for PointerParams {
    fn default() -> Self {
        PointerParams {
            c1: Complex64::new(0.6, 0.0),
            c2: Complex64::new(0.8, 0.0),
            system_centers: [-5.0, 5.0],
            system_width: 1.0,
            system_boost: 0.0,
            pointer_width: 1.0,
            pointer_shift: 7.0,
            overlap_limit: 1e-8,
            empty_wave: true,
        }
    }
}

pub(super) fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        preset: Preset::PointerMeasurement(PointerParams::default()),
        samples: 10_000,
        seed: 1,
        units: Default::default(),
        axes: vec![Axis::new(-20.0, 20.0, 256), Axis::new(-16.0, 16.0, 128)],
        masses: vec![1.0, 100.0],
        evolution: EvolutionSpec {
            dt: 0.005,
            steps: 200,
            snapshot_stride: 4,
        },
        potential: PotentialSpec::free(),
        check_times: vec![0.0, 1.0],
        record_stride: 1,
    }
}

impl PointerParams {
    pub(super) fn violations(&self, cfg: &ExperimentConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        cfg.require_axes(2, &mut out);
        if self.c1.norm_sqr() + self.c2.norm_sqr() == 0.0 {
            out.push(violation(
                "pointer_measurement.c1",
                "c1 and c2 cannot both vanish",
            ));
        }
        if !(self.system_width > 0.0) {
            out.push(violation(
                "pointer_measurement.system_width",
                "must be positive",
            ));
        }
        if !(self.pointer_width > 0.0) {
            out.push(violation(
                "pointer_measurement.pointer_width",
                "must be positive",
            ));
        }
        if !(self.pointer_shift > 0.0) {
            out.push(violation(
                "pointer_measurement.pointer_shift",
                "must be positive",
            ));
        }
        out
    }

    /// Expected fraction of channel 1, `|c1|^2 / (|c1|^2 + |c2|^2)`.
    pub fn expected_fraction(&self) -> f64 {
        self.c1.norm_sqr() / (self.c1.norm_sqr() + self.c2.norm_sqr())
    }
}

/// Channel product states `psi_I(x) phi(y -+ a)` and the pointer overlap.
pub(super) fn channel_states(
    cfg: &ExperimentConfig,
    system: [(f64, f64, f64); 2],
    pointer_width: f64,
    shift: f64,
) -> Result<([WaveFunction; 2], f64)> {
    let gx = one_axis_grid(cfg.axes[0])?;
    let gy = one_axis_grid(cfg.axes[1])?;
    let up = make_gaussian(&gy, &[shift], &[pointer_width], &[0.0], cfg.units)?;
    let down = make_gaussian(&gy, &[-shift], &[pointer_width], &[0.0], cfg.units)?;
    let overlap = inner_product(&up, &down)?.norm();
    let s1 = make_gaussian(
        &gx,
        &[system[0].0],
        &[system[0].1],
        &[system[0].2],
        cfg.units,
    )?;
    let s2 = make_gaussian(
        &gx,
        &[system[1].0],
        &[system[1].1],
        &[system[1].2],
        cfg.units,
    )?;
    Ok((
        [
            WaveFunction::outer(&s1, &up)?,
            WaveFunction::outer(&s2, &down)?,
        ],
        overlap,
    ))
}

/// Pointer-sign channel supports: channel 1 `y >= 0`, channel 2 `y < 0`.
pub(super) fn pointer_supports(grid: &SpatialGrid) -> [Region; 2] {
    let (x, y) = (grid.axis(0), grid.axis(1));
    [
        Region::new(vec![x.min, 0.0], vec![x.max, y.max]),
        Region::new(vec![x.min, y.min], vec![x.max, 0.0]),
    ]
}

fn minimal_image(grid: &SpatialGrid, a: &[f64], b: &[f64]) -> f64 {
    (0..grid.ndim())
        .map(|k| {
            let l = grid.axis(k).length();
            let d = a[k] - b[k];
            (d - l * (d / l).round()).abs()
        })
        .fold(0.0, f64::max)
}

pub(super) fn run(cfg: &ExperimentConfig, p: &PointerParams) -> Result<ExperimentReport> {
    let system = [
        (p.system_centers[0], p.system_width, p.system_boost),
        (p.system_centers[1], p.system_width, -p.system_boost),
    ];
    let (channels, overlap) = channel_states(cfg, system, p.pointer_width, p.pointer_shift)?;
    if overlap > p.overlap_limit {
        return Err(Error::OverlapTooLarge {
            overlap,
            limit: p.overlap_limit,
        });
    }
    let psi = superpose(&channels[0], &channels[1], p.c1, p.c2)?;
    let grid = psi.grid().clone();
    let plan = cfg.plan(PotentialSpec::free())?;
    let initial = equilibrium_ensemble(&psi, cfg.samples, cfg.seed)?;
    let mut monitor = Monitor::new(cfg);
    let (ensemble, last) = co_evolve(&psi, &plan, &initial, 1, |s, q| monitor.observe(s, q))?;

    let supports = pointer_supports(&grid);
    let mut counts = [0usize; 2];
    for t in &ensemble.trajectories {
        if let Some(c) = classify_channel(t, &supports)? {
            counts[c] += 1;
        }
    }
    let n = ensemble.len() as f64;
    let fractions = vec![counts[0] as f64 / n, counts[1] as f64 / n];
    let expected = p.expected_fraction();
    let sigma = (expected * (1.0 - expected) / n).sqrt();
    let born = if sigma > 0.0 {
        CheckResult::at_most("born_rule", (fractions[0] - expected).abs() / sigma, 3.0)
    } else {
        CheckResult::exactly("born_rule", fractions[0], expected)
    };

    let mut metrics = BTreeMap::new();
    metrics.insert("pointer_overlap".into(), overlap);
    metrics.insert("expected_fraction_1".into(), expected);
    metrics.insert("fraction_1".into(), fractions[0]);
    metrics.insert("fraction_2".into(), fractions[1]);
    metrics.insert("binomial_sigma".into(), sigma);

    let mut checks = vec![born];
    if p.empty_wave {
        let deviation = empty_wave_deviation(&grid, &plan, &channels, &initial, &ensemble)?;
        metrics.insert("empty_wave_deviation".into(), deviation);
        checks.push(CheckResult::below("empty_wave", deviation, 1e-4));
    }
    checks.push(monitor.equivariance_check());

    let finals = ensemble.final_positions();
    let dens = last.density();
    let histograms = vec![
        Histogram::build("pointer", &grid, 1, last.time(), &finals, &dens, 2),
        Histogram::build("system", &grid, 0, last.time(), &finals, &dens, 4),
    ];
    Ok(ExperimentReport {
        preset: "pointer_measurement".into(),
        checks,
        metrics,
        histograms,
        channel_fractions: fractions,
        dwell_times: vec![],
        ks: monitor.ks,
        h_series: monitor.h,
        ensemble,
        final_state: last,
        masses: plan.masses.clone(),
    })
}

/// Re-integrates each trajectory against its own channel alone and returns
/// the largest position difference from the full-state trajectory.
fn empty_wave_deviation(
    grid: &SpatialGrid,
    plan: &crate::propagator::EvolutionPlan,
    channels: &[WaveFunction; 2],
    initial: &InitialEnsemble,
    full: &TrajectoryEnsemble,
) -> Result<f64> {
    let supports = pointer_supports(grid);
    let d = grid.ndim();
    let mut worst: f64 = 0.0;
    for (c, state) in channels.iter().enumerate() {
        let members: Vec<usize> = initial
            .positions
            .chunks_exact(d)
            .enumerate()
            .filter(|(_, q)| supports[c].contains(q))
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        let subset = InitialEnsemble {
            positions: members
                .iter()
                .flat_map(|&i| initial.positions[i * d..(i + 1) * d].iter().copied())
                .collect(),
            ..initial.clone()
        };
        let (alone, _) = co_evolve(state, plan, &subset, 1, |_, _| Ok(()))?;
        for (j, &i) in members.iter().enumerate() {
            let a = &full.trajectories[i];
            let b = &alone.trajectories[j];
            for k in 0..a.len() {
                worst = worst.max(minimal_image(grid, a.position(k), b.position(k)));
            }
        }
    }
    Ok(worst)
}
