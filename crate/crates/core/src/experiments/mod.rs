//! Preset end-to-end scenarios.
//!
//! Every preset builds an initial state, samples an ensemble from `|psi|^2`
//! (or a chosen nonequilibrium density), co-evolves both and reports
//! pass/fail checks together with histograms and diagnostic series.

mod analysis;
mod barrier;
mod custom;
mod double_slit;
mod pointer;
mod relaxation;
mod stationary;
mod which_way;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use analysis::{
    fringe_visibility, interference_contrast, interval_mass, max_displacement, rank_violations,
    sign_violations, Histogram,
};
pub use barrier::BarrierParams;
pub use custom::{CustomParams, PacketSpec};
pub use double_slit::DoubleSlitParams;
pub use pointer::PointerParams;
pub use relaxation::RelaxationParams;
pub use stationary::StationaryParams;
pub use which_way::WhichWayParams;

use crate::equilibrium::{
    cell_masses, h_bar_from_samples, sample_density, statistical_floor, CoarseGraining, HSeries,
    KsCheck,
};
use crate::error::{Error, Result, Violation};
use crate::grid::{Axis, MassVector, SpatialGrid};
use crate::potential::PotentialSpec;
use crate::propagator::{max_kinetic_phase, EvolutionPlan};
use crate::trajectories::{InitialEnsemble, SamplingMode, TrajectoryEnsemble};
use crate::wavefunction::{Units, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
}

impl EvolutionSpec {
    pub fn interval(&self) -> f64 {
        self.dt * self.snapshot_stride as f64
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    DoubleSlit(DoubleSlitParams),
    PointerMeasurement(PointerParams),
    WhichWay(WhichWayParams),
    BarrierDwell(BarrierParams),
    Stationary(StationaryParams),
    Relaxation(RelaxationParams),
    Custom(CustomParams),
}

pub const PRESET_NAMES: [&str; 7] = [
    "double_slit",
    "pointer_measurement",
    "which_way",
    "barrier_dwell",
    "stationary",
    "relaxation",
    "custom",
];

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::DoubleSlit(_) => "double_slit",
            Preset::PointerMeasurement(_) => "pointer_measurement",
            Preset::WhichWay(_) => "which_way",
            Preset::BarrierDwell(_) => "barrier_dwell",
            Preset::Stationary(_) => "stationary",
            Preset::Relaxation(_) => "relaxation",
            Preset::Custom(_) => "custom",
        }
    }

    /// Names of the checks this preset can report.
    pub fn check_names(&self) -> &'static [&'static str] {
        match self {
            Preset::DoubleSlit(_) => &["symmetry", "equivariance", "visibility"],
            Preset::PointerMeasurement(_) => &["born_rule", "empty_wave", "equivariance"],
            Preset::WhichWay(_) => &["which_way", "interference", "equivariance"],
            Preset::BarrierDwell(_) => &["dwell", "transmission", "equivariance"],
            Preset::Stationary(_) => &["at_rest", "motion", "no_crossing", "equivariance"],
            Preset::Relaxation(_) => &["h_nonnegative", "h_decay", "h_floor"],
            Preset::Custom(_) => &["equivariance", "no_crossing", "unitarity"],
        }
    }
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub samples: usize,
    pub seed: u64,
    pub units: Units,
    pub axes: Vec<Axis>,
    pub masses: Vec<f64>,
    pub evolution: EvolutionSpec,
    /// Terms added to the preset's own potential.
    pub potential: PotentialSpec,
    /// Times at which the ensemble is compared with `|psi|^2`.
    pub check_times: Vec<f64>,
    /// Snapshot intervals between recorded trajectory points.
    pub record_stride: usize,
}

impl ExperimentConfig {
    /// Documented defaults for a preset, or `None` for an unknown name.
    pub fn preset_defaults(name: &str) -> Option<Self> {
        Some(match name {
            "double_slit" => double_slit::defaults(),
            "pointer_measurement" => pointer::defaults(),
            "which_way" => which_way::defaults(),
            "barrier_dwell" => barrier::defaults(),
            "stationary" => stationary::defaults(),
            "relaxation" => relaxation::defaults(),
            "custom" => custom::defaults(),
            _ => return None,
        })
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.axes.clone())
    }

    pub fn mass_vector(&self) -> Result<MassVector> {
        MassVector::new(self.masses.clone())
    }

    /// Evolution plan with the preset potential `base` plus the extra terms.
    pub(crate) fn plan(&self, base: PotentialSpec) -> Result<EvolutionPlan> {
        let mut potential = base;
        potential.terms.extend(self.potential.terms.iter().cloned());
        Ok(EvolutionPlan::new(
            self.evolution.dt,
            self.evolution.steps,
            potential,
            self.mass_vector()?,
        )
        .with_stride(self.evolution.snapshot_stride))
    }

    /// Cross-field validation; returns every problem found.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |path: &str, message: String| {
            out.push(Violation {
                path: path.to_string(),
                message,
            })
        };
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(e) => {
                bad("grid.axes", e.to_string());
                None
            }
        };
        if self.masses.len() != self.axes.len() {
            bad(
                "masses",
                format!(
                    "expected {} masses, found {}",
                    self.axes.len(),
                    self.masses.len()
                ),
            );
        }
        for (i, m) in self.masses.iter().enumerate() {
            if !(m.is_finite() && *m > 0.0) {
                bad(
                    &format!("masses[{i}]"),
                    format!("mass must be positive, got {m}"),
                );
            }
        }
        if !(self.units.hbar.is_finite() && self.units.hbar > 0.0) {
            bad("units.hbar", "hbar must be positive".into());
        }
        if self.samples == 0 {
            bad("samples", "ensemble size must be >= 1".into());
        }
        if self.record_stride == 0 {
            bad("output.record_stride", "must be >= 1".into());
        }
        let ev = self.evolution;
        if !(ev.dt.is_finite() && ev.dt > 0.0) {
            bad(
                "evolution.dt",
                format!("time step must be positive, got {}", ev.dt),
            );
        }
        if ev.steps == 0 {
            bad("evolution.steps", "must be >= 1".into());
        }
        if ev.snapshot_stride == 0 {
            bad("evolution.snapshot_stride", "must be >= 1".into());
        } else if ev.steps % ev.snapshot_stride != 0 {
            bad(
                "evolution.steps",
                format!(
                    "evolution.steps ({}) is not divisible by evolution.snapshot_stride ({})",
                    ev.steps, ev.snapshot_stride
                ),
            );
        }
        if let Some(g) = &grid {
            if let Err(e) = self.potential.validate(g) {
                bad("potential", e.to_string());
            }
            if self.masses.len() == g.ndim() && self.masses.iter().all(|m| *m > 0.0) && ev.dt > 0.0
            {
                let masses = MassVector::new(self.masses.clone()).expect("checked above");
                let phase = max_kinetic_phase(g, &masses, self.units.hbar, ev.dt);
                if phase >= std::f64::consts::PI {
                    bad(
                        "evolution.dt",
                        format!("kinetic phase per step {phase:.4} reaches pi at the Nyquist mode"),
                    );
                }
            }
        }
        if ev.snapshot_stride > 0 && ev.dt > 0.0 {
            let h = ev.interval();
            for (i, t) in self.check_times.iter().enumerate() {
                let j = t / h;
                if !(*t >= 0.0 && *t <= ev.duration() * (1.0 + 1e-12)) {
                    bad(
                        &format!("check_times[{i}]"),
                        format!("{t} lies outside [0, {}]", ev.duration()),
                    );
                } else if (j - j.round()).abs() > 1e-6 {
                    bad(
                        &format!("check_times[{i}]"),
                        format!("{t} is not a multiple of the snapshot interval {h}"),
                    );
                }
            }
        }
        let preset_problems = match &self.preset {
            Preset::DoubleSlit(p) => p.violations(self),
            Preset::PointerMeasurement(p) => p.violations(self),
            Preset::WhichWay(p) => p.violations(self),
            Preset::BarrierDwell(p) => p.violations(self),
            Preset::Stationary(p) => p.violations(self),
            Preset::Relaxation(p) => p.violations(self),
            Preset::Custom(p) => p.violations(self),
        };
        out.extend(preset_problems);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::SchemaViolation(v))
        }
    }

    fn check_time_index(&self, t: f64) -> Option<usize> {
        let h = self.evolution.interval();
        self.check_times
            .iter()
            .position(|c| (c - t).abs() <= 1e-9 * h.max(c.abs()))
    }

    /// Requires the grid to have `ndim` axes.
    pub(crate) fn require_axes(&self, ndim: usize, out: &mut Vec<Violation>) {
        if self.axes.len() != ndim {
            out.push(Violation {
                path: "grid.axes".into(),
                message: format!(
                    "preset {} needs {ndim} axes, found {}",
                    self.preset.name(),
                    self.axes.len()
                ),
            });
        }
    }
}

/// Outcome of a single invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    /// `"<"`, `"<="`, `">"` or `"=="`: how `measured` must relate to `threshold`.
    pub relation: String,
}

impl CheckResult {
    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured < threshold,
            measured,
            threshold,
            relation: "<".into(),
        }
    }

    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            relation: "<=".into(),
        }
    }

    pub fn above(name: &str, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured > threshold,
            measured,
            threshold,
            relation: ">".into(),
        }
    }

    pub fn exactly(name: &str, measured: f64, expected: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured == expected,
            measured,
            threshold: expected,
            relation: "==".into(),
        }
    }
}

/// Everything a preset run produces.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub preset: String,
    pub checks: Vec<CheckResult>,
    /// Named scalar results (visibilities, dwell means, fractions, ...).
    pub metrics: BTreeMap<String, f64>,
    pub histograms: Vec<Histogram>,
    /// Fractions per channel; the unclassified remainder is
    /// `1 - sum(channel_fractions)`.
    pub channel_fractions: Vec<f64>,
    pub dwell_times: Vec<f64>,
    pub ks: Vec<KsCheck>,
    pub h_series: HSeries,
    pub ensemble: TrajectoryEnsemble,
    pub final_state: WaveFunction,
    pub masses: MassVector,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

/// Runs the preset described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match &config.preset {
        Preset::DoubleSlit(p) => double_slit::run(config, p),
        Preset::PointerMeasurement(p) => pointer::run(config, p),
        Preset::WhichWay(p) => which_way::run(config, p),
        Preset::BarrierDwell(p) => barrier::run(config, p),
        Preset::Stationary(p) => stationary::run(config, p),
        Preset::Relaxation(p) => relaxation::run(config, p),
        Preset::Custom(p) => custom::run(config, p),
    }
}

/// Equilibrium ensemble drawn from `|psi|^2`.
pub(crate) fn equilibrium_ensemble(
    psi: &WaveFunction,
    n: usize,
    seed: u64,
) -> Result<InitialEnsemble> {
    Ok(InitialEnsemble {
        positions: sample_density(psi.grid(), &psi.density(), n, seed)?,
        ndim: psi.grid().ndim(),
        seed,
        mode: SamplingMode::QuantumEquilibrium,
    })
}

/// KS distance and H-bar at the configured check times, collected while
/// the ensemble is co-evolved.
pub(crate) struct Monitor<'a> {
    config: &'a ExperimentConfig,
    graining: CoarseGraining,
    pub ks: Vec<KsCheck>,
    pub h: HSeries,
}

impl<'a> Monitor<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        Monitor {
            config,
            graining: CoarseGraining::new(8),
            ks: Vec::new(),
            h: HSeries::default(),
        }
    }

    pub fn observe(&mut self, psi: &WaveFunction, q: &[f64]) -> Result<()> {
        if self.config.check_time_index(psi.time()).is_none() {
            return Ok(());
        }
        self.ks.push(KsCheck::evaluate(psi, q));
        let p = psi.density();
        let grid = psi.grid();
        let n = q.len() / grid.ndim();
        let pm = cell_masses(grid, &p, self.graining)?;
        self.h.floor = self.h.floor.max(statistical_floor(&pm, n));
        self.h
            .push(psi.time(), h_bar_from_samples(grid, q, &p, self.graining)?);
        Ok(())
    }

    pub fn equivariance_check(&self) -> CheckResult {
        let worst = self
            .ks
            .iter()
            .map(|k| k.distance / k.critical)
            .fold(0.0, f64::max);
        let critical = self.ks.first().map_or(0.0, |k| k.critical);
        let distance = self.ks.iter().map(|k| k.distance).fold(0.0, f64::max);
        CheckResult {
            name: "equivariance".into(),
            passed: !self.ks.is_empty() && worst < 1.0,
            measured: distance,
            threshold: critical,
            relation: "<".into(),
        }
    }
}

pub(crate) fn one_axis_grid(axis: Axis) -> Result<SpatialGrid> {
    SpatialGrid::new(vec![axis])
}

pub(crate) fn violation(path: &str, message: impl Into<String>) -> Violation {
    Violation {
        path: path.into(),
        message: message.into(),
    }
}
