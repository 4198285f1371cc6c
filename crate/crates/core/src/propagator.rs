//! Strang-split spectral time stepping of the Schrodinger equation.
//!
//! One step applies `exp(-i V dt / 2 hbar)`, then the kinetic factor
//! `exp(-i hbar sum_a k_a^2 dt / 2 m_a)` in the frequency domain, then the
//! potential half-kick again. An absorbing mask enters the half-kicks as a
//! real decay factor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MassVector, SpatialGrid};
use crate::potential::PotentialSpec;
use crate::spectral::Spectral;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionPlan {
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    pub potential: PotentialSpec,
    pub masses: MassVector,
    /// Also record states halfway between consecutive snapshots.
    #[serde(default)]
    pub half_steps: bool,
}

impl EvolutionPlan {
    pub fn new(dt: f64, steps: usize, potential: PotentialSpec, masses: MassVector) -> Self {
        EvolutionPlan {
            dt,
            steps,
            snapshot_stride: 1,
            potential,
            masses,
            half_steps: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_half_steps(mut self, on: bool) -> Self {
        self.half_steps = on;
        self
    }

    /// Time between recorded snapshots.
    pub fn snapshot_interval(&self) -> f64 {
        self.dt * self.snapshot_stride as f64
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn validate(&self, grid: &SpatialGrid, hbar: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.snapshot_stride == 0 || self.steps % self.snapshot_stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "snapshot_stride {} must divide steps {}",
                self.snapshot_stride, self.steps
            )));
        }
        self.masses.check(grid)?;
        self.potential.validate(grid)?;
        check_nyquist(grid, &self.masses, hbar, self.dt)
    }
}

/// Largest kinetic phase `hbar sum_a k_a^2 |dt| / 2 m_a` over the grid's modes.
pub fn max_kinetic_phase(grid: &SpatialGrid, masses: &MassVector, hbar: f64, dt: f64) -> f64 {
    grid.axes()
        .iter()
        .enumerate()
        .map(|(a, axis)| {
            let k = std::f64::consts::PI / axis.spacing();
            hbar * k * k / (2.0 * masses.get(a))
        })
        .sum::<f64>()
        * dt.abs()
}

fn check_nyquist(grid: &SpatialGrid, masses: &MassVector, hbar: f64, dt: f64) -> Result<()> {
    let phase = max_kinetic_phase(grid, masses, hbar, dt);
    if phase >= std::f64::consts::PI {
        return Err(Error::NyquistViolation { phase });
    }
    Ok(())
}

/// Precomputed split-step factors for one grid, potential and time step.
#[derive(Debug, Clone)]
pub struct Propagator {
    spectral: Spectral,
    dt: f64,
    hbar: f64,
    half_kick: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    absorbing: bool,
}

impl Propagator {
    /// `dt` may be negative for backward stepping.
    pub fn new(
        grid: &SpatialGrid,
        potential: &PotentialSpec,
        masses: &MassVector,
        hbar: f64,
        dt: f64,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt must be non-zero, got {dt}"
            )));
        }
        masses.check(grid)?;
        check_nyquist(grid, masses, hbar, dt)?;
        let v = potential.evaluate(grid, masses)?;
        let half_kick = v
            .iter()
            .map(|&z| (Complex64::new(0.0, -0.5 * dt / hbar) * z).exp())
            .collect();
        let spectral = Spectral::new(grid);
        let mut kinetic = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let ij = grid.unravel(idx);
            let mut e = 0.0;
            for a in 0..grid.ndim() {
                let k = spectral.wavenumbers(a)[ij[a]];
                e += hbar * hbar * k * k / (2.0 * masses.get(a));
            }
            kinetic.push(Complex64::from_polar(1.0, -e * dt / hbar));
        }
        Ok(Propagator {
            spectral,
            dt,
            hbar,
            half_kick,
            kinetic,
            absorbing: potential.has_absorber(),
        })
    }

    pub fn from_plan(grid: &SpatialGrid, plan: &EvolutionPlan, hbar: f64) -> Result<Self> {
        plan.validate(grid, hbar)?;
        Self::new(grid, &plan.potential, &plan.masses, hbar, plan.dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.spectral.grid()
    }

    /// Advances `psi` by one step in place.
    pub fn advance(&self, psi: &mut WaveFunction) -> Result<()> {
        if psi.grid() != self.spectral.grid() {
            return Err(Error::GridMismatch);
        }
        if (psi.hbar() - self.hbar).abs() > 0.0 {
            return Err(Error::InvalidArgument(
                "state and propagator disagree on hbar".into(),
            ));
        }
        let t = psi.time() + self.dt;
        let amps = psi.amplitudes_mut();
        kick(amps, &self.half_kick);
        self.spectral.forward(amps);
        kick(amps, &self.kinetic);
        self.spectral.inverse(amps);
        kick(amps, &self.half_kick);
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFiniteAmplitude { time: t });
        }
        psi.set_time(t);
        if self.absorbing {
            psi.mark_unnormalized();
        }
        Ok(())
    }
}

fn kick(amps: &mut [Complex64], factor: &[Complex64]) {
    for (z, f) in amps.iter_mut().zip(factor) {
        *z *= f;
    }
}

/// One split step under `plan`.
pub fn step(psi: &WaveFunction, plan: &EvolutionPlan) -> Result<WaveFunction> {
    let prop = Propagator::from_plan(psi.grid(), plan, psi.hbar())?;
    let mut out = psi.clone();
    prop.advance(&mut out)?;
    Ok(out)
}

/// States recorded at uniformly spaced times, optionally with the midpoints
/// of each interval.
#[derive(Debug, Clone)]
pub struct SnapshotTimeline {
    pub snapshots: Vec<WaveFunction>,
    /// Empty, or one state per interval at its midpoint.
    pub half_snapshots: Vec<WaveFunction>,
    pub interval: f64,
}

impl SnapshotTimeline {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn has_half_steps(&self) -> bool {
        !self.snapshots.is_empty() && self.half_snapshots.len() + 1 == self.snapshots.len()
    }

    pub fn start(&self) -> f64 {
        self.snapshots.first().map_or(0.0, |s| s.time())
    }

    pub fn end(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.time())
    }

    pub fn grid(&self) -> Option<&SpatialGrid> {
        self.snapshots.first().map(|s| s.grid())
    }

    /// Index of the snapshot nearest to time `t`.
    pub fn nearest(&self, t: f64) -> usize {
        if self.snapshots.len() <= 1 || self.interval <= 0.0 {
            return 0;
        }
        let j = ((t - self.start()) / self.interval).round();
        j.clamp(0.0, (self.snapshots.len() - 1) as f64) as usize
    }
}

/// Repeats `step`, recording every `snapshot_stride`-th state.
pub fn evolve(psi: &WaveFunction, plan: &EvolutionPlan) -> Result<SnapshotTimeline> {
    let mut timeline = SnapshotTimeline {
        snapshots: vec![psi.clone()],
        half_snapshots: vec![],
        interval: plan.snapshot_interval(),
    };
    let mut driver = Evolution::new(psi.clone(), plan)?;
    while let Some(item) = driver.next_interval()? {
        if let Some(h) = item.half {
            timeline.half_snapshots.push(h);
        }
        timeline.snapshots.push(item.end);
    }
    Ok(timeline)
}

/// One snapshot interval produced by [`Evolution`].
pub struct IntervalStates {
    pub half: Option<WaveFunction>,
    pub end: WaveFunction,
}

/// Streaming evolution: yields one snapshot interval at a time without
/// retaining earlier states.
pub struct Evolution {
    psi: WaveFunction,
    full: Propagator,
    half: Option<Propagator>,
    stride: usize,
    remaining: usize,
    done: usize,
    t_start: f64,
    want_half: bool,
}

impl Evolution {
    pub fn new(psi: WaveFunction, plan: &EvolutionPlan) -> Result<Self> {
        let full = Propagator::from_plan(psi.grid(), plan, psi.hbar())?;
        let half = if plan.half_steps && plan.snapshot_stride % 2 == 1 {
            Some(Propagator::new(
                psi.grid(),
                &plan.potential,
                &plan.masses,
                psi.hbar(),
                0.5 * plan.dt,
            )?)
        } else {
            None
        };
        let t_start = psi.time();
        Ok(Evolution {
            psi,
            done: 0,
            t_start,
            full,
            half,
            stride: plan.snapshot_stride,
            remaining: plan.steps / plan.snapshot_stride,
            want_half: plan.half_steps,
        })
    }

    pub fn current(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn intervals_remaining(&self) -> usize {
        self.remaining
    }

    pub fn next_interval(&mut self) -> Result<Option<IntervalStates>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        self.remaining -= 1;
        let mut half = None;
        for s in 0..self.stride {
            if self.want_half && self.stride % 2 == 0 && s == self.stride / 2 {
                half = Some(self.psi.clone());
            }
            if self.want_half && self.stride % 2 == 1 && s == self.stride / 2 {
                let mut h = self.psi.clone();
                self.half
                    .as_ref()
                    .expect("half propagator")
                    .advance(&mut h)?;
                half = Some(h);
            }
            self.full.advance(&mut self.psi)?;
        }
        // Pin times to the uniform lattice rather than the accumulated sum.
        let interval = self.full.dt() * self.stride as f64;
        self.done += 1;
        if let Some(h) = half.as_mut() {
            h.set_time(self.t_start + (self.done as f64 - 0.5) * interval);
        }
        self.psi
            .set_time(self.t_start + self.done as f64 * interval);
        Ok(Some(IntervalStates {
            half,
            end: self.psi.clone(),
        }))
    }
}

/// `<psi|H|psi> / <psi|psi>` with a spectral kinetic term and the real part
/// of the potential.
pub fn energy(psi: &WaveFunction, potential: &PotentialSpec, masses: &MassVector) -> Result<f64> {
    let grid = psi.grid();
    masses.check(grid)?;
    let v = potential.evaluate_real(grid, masses)?;
    let spectral = Spectral::new(grid);
    let mut hat = psi.amplitudes().to_vec();
    spectral.forward(&mut hat);
    let hbar = psi.hbar();
    let mut kin = 0.0;
    for (idx, z) in hat.iter().enumerate() {
        let ij = grid.unravel(idx);
        let mut e = 0.0;
        for a in 0..grid.ndim() {
            let k = spectral.wavenumbers(a)[ij[a]];
            e += hbar * hbar * k * k / (2.0 * masses.get(a));
        }
        kin += e * z.norm_sqr();
    }
    let n = grid.len() as f64;
    let dv = grid.cell_volume();
    kin *= dv / n;
    let pot: f64 = psi
        .amplitudes()
        .iter()
        .zip(&v)
        .map(|(z, v)| v * z.norm_sqr())
        .sum::<f64>()
        * dv;
    Ok((kin + pot) / psi.norm_sqr())
}
