//! Relaxation of a nonequilibrium ensemble in a two-dimensional box.
//!
//! The box `[0, L]^2` is embedded in the periodic grid `[-L, L)^2` through
//! odd extension: `sin(n pi x / L)` is then an exact lattice mode, so the
//! split-step propagator evolves box eigenstates without boundary error and
//! particles never cross the nodal lines `x = 0`, `y = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    cell_masses, h_bar_from_samples, sample_density, statistical_floor, CoarseGraining, HSeries,
};
use crate::error::{Error, Result};
use crate::grid::{Axis, MassVector, SpatialGrid};
use crate::potential::PotentialSpec;
use crate::propagator::EvolutionPlan;
use crate::trajectories::{co_evolve, InitialEnsemble, SamplingMode, TrajectoryEnsemble};
use crate::wavefunction::{Units, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxMode {
    pub nx: u32,
    pub ny: u32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDensity {
    /// `rho_0 = |psi_0|^2`.
    Equilibrium,
    /// `rho_0 = |phi_{nx,ny}|^2`.
    Mode { nx: u32, ny: u32 },
}

/// Modes `1..=per_axis` on both axes with unit amplitude and phases drawn
/// from `phase_seed`.
pub fn random_phase_modes(per_axis: u32, phase_seed: u64) -> Vec<BoxMode> {
    let mut rng = ChaCha8Rng::seed_from_u64(phase_seed);
    let mut modes = Vec::with_capacity((per_axis * per_axis) as usize);
    for nx in 1..=per_axis {
        for ny in 1..=per_axis {
            let phase = 2.0 * PI * rng.random::<f64>();
            modes.push(BoxMode {
                nx,
                ny,
                re: phase.cos(),
                im: phase.sin(),
            });
        }
    }
    modes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSpec {
    /// Box side `L`.
    pub side: f64,
    pub points: usize,
    pub modes: Vec<BoxMode>,
    pub initial: InitialDensity,
    pub samples: usize,
    pub seed: u64,
    pub graining: CoarseGraining,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    /// Snapshot intervals between H-bar evaluations.
    pub h_every: usize,
}

impl RelaxationSpec {
    /// Equal-weight superposition of the 16 lowest modes `1 <= nx, ny <= 4`
    /// in the box `[0, pi]^2` with phases drawn from `phase_seed`, started
    /// from the ground-state density and run for one recurrence period
    /// `4 pi` of the wavefunction.
    pub fn sixteen_modes(samples: usize, seed: u64, phase_seed: u64) -> Self {
        RelaxationSpec {
            side: PI,
            points: 128,
            modes: random_phase_modes(4, phase_seed),
            initial: InitialDensity::Mode { nx: 1, ny: 1 },
            samples,
            seed,
            graining: CoarseGraining::new(8),
            dt: 4.0 * PI / 20480.0,
            steps: 20480,
            snapshot_stride: 16,
            h_every: 32,
        }
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        let a = Axis::new(-self.side, self.side, self.points);
        SpatialGrid::plane(a, a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(Error::InvalidArgument("box side must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one box mode is required".into(),
            ));
        }
        let nyquist = (self.points / 2) as u32;
        let bad = |n: u32| n == 0 || n >= nyquist;
        if self.modes.iter().any(|m| bad(m.nx) || bad(m.ny)) {
            return Err(Error::InvalidArgument(format!(
                "mode numbers must lie in 1..{nyquist}"
            )));
        }
        if let InitialDensity::Mode { nx, ny } = self.initial {
            if bad(nx) || bad(ny) {
                return Err(Error::InvalidArgument(
                    "initial density mode out of range".into(),
                ));
            }
        }
        if self.samples == 0 || self.h_every == 0 {
            return Err(Error::InvalidArgument(
                "samples and h_every must be >= 1".into(),
            ));
        }
        self.graining.validate(&self.grid()?)
    }

    fn mode_values(&self, grid: &SpatialGrid, nx: u32, ny: u32) -> Vec<f64> {
        let kx = nx as f64 * PI / self.side;
        let ky = ny as f64 * PI / self.side;
        (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                (kx * p[0]).sin() * (ky * p[1]).sin()
            })
            .collect()
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        let grid = self.grid()?;
        let mut amp = vec![Complex64::default(); grid.len()];
        for m in &self.modes {
            let c = Complex64::new(m.re, m.im);
            for (a, v) in amp.iter_mut().zip(self.mode_values(&grid, m.nx, m.ny)) {
                *a += c * v;
            }
        }
        WaveFunction::from_amplitudes(grid, amp, Units::default())
    }

    fn initial_density(&self, psi: &WaveFunction) -> Vec<f64> {
        match self.initial {
            InitialDensity::Equilibrium => psi.density(),
            InitialDensity::Mode { nx, ny } => self
                .mode_values(psi.grid(), nx, ny)
                .into_iter()
                .map(|v| v * v)
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelaxationOutcome {
    pub series: HSeries,
    pub ensemble: TrajectoryEnsemble,
    pub final_state: WaveFunction,
}

/// Co-evolves `psi` and an ensemble drawn from the nonequilibrium density,
/// recording H-bar every `h_every` intervals.
pub fn relaxation_run(spec: &RelaxationSpec) -> Result<RelaxationOutcome> {
    spec.validate()?;
    let psi = spec.initial_state()?;
    let grid = psi.grid().clone();
    let rho0 = spec.initial_density(&psi);
    let positions = sample_density(&grid, &rho0, spec.samples, spec.seed)?;
    let initial = InitialEnsemble {
        positions,
        ndim: 2,
        seed: spec.seed,
        mode: match spec.initial {
            InitialDensity::Equilibrium => SamplingMode::QuantumEquilibrium,
            InitialDensity::Mode { .. } => SamplingMode::CustomDensity,
        },
    };
    let masses = MassVector::uniform(&grid, 1.0)?;
    let plan = EvolutionPlan::new(spec.dt, spec.steps, PotentialSpec::free(), masses)
        .with_stride(spec.snapshot_stride);
    plan.validate(&grid, psi.hbar())?;
    let mut series = HSeries::default();
    let mut floor: f64 = 0.0;
    let mut count = 0usize;
    let (ensemble, final_state) = co_evolve(&psi, &plan, &initial, spec.h_every, |state, q| {
        if count % spec.h_every == 0 {
            let p = state.density();
            let pm = cell_masses(&grid, &p, spec.graining)?;
            floor = floor.max(statistical_floor(&pm, spec.samples));
            series.push(
                state.time(),
                h_bar_from_samples(&grid, q, &p, spec.graining)?,
            );
        }
        count += 1;
        Ok(())
    })?;
    series.floor = floor;
    Ok(RelaxationOutcome {
        series,
        ensemble,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mut spec: RelaxationSpec) -> RelaxationSpec {
        spec.points = 64;
        spec.dt = 4.0 * PI / 20480.0 * 4.0;
        spec.steps = 160;
        spec.snapshot_stride = 8;
        spec.h_every = 5;
        spec
    }

    #[test]
    fn equilibrium_start_stays_at_floor() {
        let mut spec = short(RelaxationSpec::sixteen_modes(4000, 9, 1));
        spec.initial = InitialDensity::Equilibrium;
        let out = relaxation_run(&spec).unwrap();
        assert!(out.series.is_non_negative());
        for h in &out.series.values {
            assert!(*h < out.series.floor, "{h} vs floor {}", out.series.floor);
        }
    }

    #[test]
    fn single_mode_is_frozen() {
        let mut spec = short(RelaxationSpec::sixteen_modes(2000, 4, 1));
        spec.modes = vec![BoxMode {
            nx: 2,
            ny: 1,
            re: 1.0,
            im: 0.0,
        }];
        let out = relaxation_run(&spec).unwrap();
        let h0 = out.series.values[0];
        assert!(h0 > 0.1);
        for h in &out.series.values {
            assert!((h - h0).abs() < 1e-12 * h0);
        }
    }

    #[test]
    fn rejects_out_of_range_modes() {
        let mut spec = RelaxationSpec::sixteen_modes(10, 0, 1);
        spec.modes[0].nx = 0;
        assert!(spec.validate().is_err());
    }
}
