//! Particle trajectories under the guidance equation.
//!
//! Each snapshot interval `[t, t + h]` is crossed with classical RK4 whose
//! stage velocities come from the fields at `t`, `t + h/2` and `t + h`,
//! interpolated in space with separable Catmull-Rom cubics. Between those
//! times the velocity is quadratic in time through the three fields.
//!
//! A step is split in two, down to `h / 2^8`, when it differs from the
//! embedded midpoint step by more than a small fraction of the grid
//! spacing or when a stage touches a node-masked cell.
//! Steps still touching the mask at the finest level are flagged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MassVector, SpatialGrid};
use crate::pilot_wave::{FieldOps, VelocityField};
use crate::propagator::{Evolution, EvolutionPlan, SnapshotTimeline};
use crate::wavefunction::WaveFunction;

const MAX_HALVINGS: u32 = 8;

/// Step error tolerance as a fraction of the smallest grid spacing.
const STEP_TOLERANCE: f64 = 1e-3;

/// Per-step annotations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepFlags(u8);

impl StepFlags {
    pub const NODE_PROXIMITY: StepFlags = StepFlags(1);
    pub const BOUNDARY_WRAP: StepFlags = StepFlags(2);

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, other: StepFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: StepFlags) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    ndim: usize,
    positions: Vec<f64>,
    /// `flags[k]` describes the step that produced position `k`; entry 0 is
    /// always empty.
    pub flags: Vec<StepFlags>,
}

impl Trajectory {
    pub fn new(ndim: usize) -> Self {
        Trajectory {
            times: vec![],
            ndim,
            positions: vec![],
            flags: vec![],
        }
    }

    pub fn push(&mut self, t: f64, q: &[f64], flags: StepFlags) {
        self.times.push(t);
        self.positions.extend_from_slice(&q[..self.ndim]);
        self.flags.push(flags);
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.ndim..(k + 1) * self.ndim]
    }

    pub fn initial_position(&self) -> &[f64] {
        self.position(0)
    }

    pub fn final_position(&self) -> &[f64] {
        self.position(self.len() - 1)
    }

    /// Coordinate `axis` at every recorded time.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.positions
            .iter()
            .skip(axis)
            .step_by(self.ndim)
            .copied()
            .collect()
    }

    /// Coordinate `axis` with periodic jumps removed (minimal-image steps).
    pub fn unwrapped(&self, grid: &SpatialGrid, axis: usize) -> Vec<f64> {
        let l = grid.axis(axis).length();
        let raw = self.coordinate(axis);
        let mut out = Vec::with_capacity(raw.len());
        let mut shift = 0.0;
        for (k, &x) in raw.iter().enumerate() {
            if k > 0 {
                let d = x - raw[k - 1];
                shift -= l * (d / l).round();
            }
            out.push(x + shift);
        }
        out
    }

    pub fn any_flag(&self, f: StepFlags) -> bool {
        self.flags.iter().any(|x| x.contains(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    QuantumEquilibrium,
    CustomDensity,
    ExplicitList,
}

/// Starting configurations for an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialEnsemble {
    /// Flat `[q0_axis0, q0_axis1, q1_axis0, ...]`.
    pub positions: Vec<f64>,
    pub ndim: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl InitialEnsemble {
    pub fn explicit(positions: Vec<f64>, ndim: usize) -> Self {
        InitialEnsemble {
            positions,
            ndim,
            seed: 0,
            mode: SamplingMode::ExplicitList,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.ndim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        if self.ndim != grid.ndim() || self.positions.len() % self.ndim != 0 || self.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "initial ensemble must hold at least one {}-axis position",
                grid.ndim()
            )));
        }
        for (i, q) in self.positions.chunks_exact(self.ndim).enumerate() {
            if !grid.contains(q) {
                return Err(Error::InvalidArgument(format!(
                    "initial position {i} {q:?} lies outside the grid"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub trajectories: Vec<Trajectory>,
    pub seed: u64,
    pub sampling_mode: SamplingMode,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        self.trajectories.first().map_or(&[], |t| &t.times)
    }

    pub fn ndim(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.ndim)
    }

    /// Flat positions of every trajectory at recorded time index `k`.
    pub fn positions_at(&self, k: usize) -> Vec<f64> {
        self.trajectories
            .iter()
            .flat_map(|t| t.position(k).iter().copied())
            .collect()
    }

    pub fn final_positions(&self) -> Vec<f64> {
        self.trajectories
            .iter()
            .flat_map(|t| t.final_position().iter().copied())
            .collect()
    }
}

/// Velocity fields at the start, midpoint and end of one interval.
#[derive(Clone, Copy)]
pub struct IntervalFields<'a> {
    pub t0: f64,
    pub h: f64,
    pub start: &'a VelocityField,
    pub mid: &'a VelocityField,
    pub end: &'a VelocityField,
}

impl<'a> IntervalFields<'a> {
    /// Velocity at fraction `s` of the interval: quadratic in time through
    /// the three fields, so exactly the stored field at `s = 0, 1/2, 1`.
    /// Also reports whether `q` lies in a masked cell of a contributing field.
    #[inline]
    fn velocity(&self, s: f64, q: &[f64]) -> ([f64; 2], bool) {
        let w = [
            2.0 * (s - 0.5) * (s - 1.0),
            -4.0 * s * (s - 1.0),
            2.0 * s * (s - 0.5),
        ];
        let mut v = [0.0; 2];
        let mut masked = false;
        for (f, w) in [self.start, self.mid, self.end].into_iter().zip(w) {
            if w == 0.0 {
                continue;
            }
            masked |= f.in_masked_cell(q);
            let u = f.at(q);
            if w == 1.0 {
                return (u, masked);
            }
            v[0] += w * u[0];
            v[1] += w * u[1];
        }
        (v, masked)
    }
}

/// One RK4 step from fraction `s` over `ds` of the interval. Returns the
/// new position, whether a stage hit the mask, and the distance to the
/// embedded midpoint step (a conservative error estimate).
#[inline]
fn rk4(
    fields: &IntervalFields<'_>,
    ndim: usize,
    q: [f64; 2],
    s: f64,
    ds: f64,
) -> ([f64; 2], bool, f64) {
    let dt = ds * fields.h;
    let mut hit = false;
    let mut eval = |s: f64, p: &[f64; 2]| {
        let (v, m) = fields.velocity(s, &p[..ndim]);
        hit |= m;
        v
    };
    let k1 = eval(s, &q);
    let q2 = [q[0] + 0.5 * dt * k1[0], q[1] + 0.5 * dt * k1[1]];
    let k2 = eval(s + 0.5 * ds, &q2);
    let q3 = [q[0] + 0.5 * dt * k2[0], q[1] + 0.5 * dt * k2[1]];
    let k3 = eval(s + 0.5 * ds, &q3);
    let q4 = [q[0] + dt * k3[0], q[1] + dt * k3[1]];
    let k4 = eval(s + ds, &q4);
    let mut out = q;
    let mut err: f64 = 0.0;
    for a in 0..ndim {
        let v = (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]) / 6.0;
        out[a] = q[a] + dt * v;
        err = err.max(dt * (v - k2[a]).abs());
    }
    (out, hit, err)
}

/// Accepts the step when it avoids the mask and its error estimate is
/// within `tol`; otherwise recurses on each half.
#[allow(clippy::too_many_arguments)]
fn segment(
    fields: &IntervalFields<'_>,
    ndim: usize,
    q: [f64; 2],
    s: f64,
    ds: f64,
    depth: u32,
    tol: f64,
    unresolved: &mut bool,
) -> [f64; 2] {
    let (next, hit, err) = rk4(fields, ndim, q, s, ds);
    if !hit && err <= tol {
        return next;
    }
    if depth == MAX_HALVINGS {
        *unresolved |= hit;
        return next;
    }
    let m = segment(fields, ndim, q, s, 0.5 * ds, depth + 1, tol, unresolved);
    segment(
        fields,
        ndim,
        m,
        s + 0.5 * ds,
        0.5 * ds,
        depth + 1,
        tol,
        unresolved,
    )
}

/// Advances one particle across an interval; returns flags for the step.
pub fn advance_particle(
    fields: &IntervalFields<'_>,
    grid: &SpatialGrid,
    q: &mut [f64],
) -> StepFlags {
    let ndim = grid.ndim();
    let mut start = [0.0; 2];
    start[..ndim].copy_from_slice(&q[..ndim]);
    let tol = STEP_TOLERANCE
        * (0..ndim)
            .map(|a| grid.spacing(a))
            .fold(f64::INFINITY, f64::min);
    let mut unresolved = false;
    let result = segment(fields, ndim, start, 0.0, 1.0, 0, tol, &mut unresolved);
    let mut flags = StepFlags::default();
    if unresolved {
        flags.insert(StepFlags::NODE_PROXIMITY);
    }
    q[..ndim].copy_from_slice(&result[..ndim]);
    if grid.wrap(&mut q[..ndim]) {
        flags.insert(StepFlags::BOUNDARY_WRAP);
    }
    flags
}

/// Ensemble state advanced interval by interval; used both for stored
/// timelines and for streaming co-evolution.
#[derive(Debug, Clone)]
pub struct EnsembleStepper {
    grid: SpatialGrid,
    positions: Vec<f64>,
    trajectories: Vec<Trajectory>,
    seed: u64,
    mode: SamplingMode,
    record_every: usize,
    intervals: usize,
    pending: Vec<StepFlags>,
}

impl EnsembleStepper {
    pub fn new(grid: &SpatialGrid, initial: &InitialEnsemble, t0: f64) -> Result<Self> {
        Self::with_record_stride(grid, initial, t0, 1)
    }

    /// Records positions only every `record_every` intervals (and always at
    /// the start).
    pub fn with_record_stride(
        grid: &SpatialGrid,
        initial: &InitialEnsemble,
        t0: f64,
        record_every: usize,
    ) -> Result<Self> {
        initial.validate(grid)?;
        let ndim = grid.ndim();
        let trajectories = initial
            .positions
            .chunks_exact(ndim)
            .map(|q| {
                let mut t = Trajectory::new(ndim);
                t.push(t0, q, StepFlags::default());
                t
            })
            .collect();
        Ok(EnsembleStepper {
            grid: grid.clone(),
            positions: initial.positions.clone(),
            trajectories,
            seed: initial.seed,
            mode: initial.mode,
            record_every: record_every.max(1),
            intervals: 0,
            pending: vec![StepFlags::default(); initial.len()],
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Current (wrapped) positions, flat.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Advances every particle across one interval.
    pub fn advance(&mut self, fields: &IntervalFields<'_>) -> Result<()> {
        let ndim = self.grid.ndim();
        let grid = &self.grid;
        let flags: Vec<StepFlags> = self
            .positions
            .par_chunks_mut(ndim)
            .map(|q| advance_particle(fields, grid, q))
            .collect();
        let t1 = fields.t0 + fields.h;
        for (i, q) in self.positions.chunks_exact(ndim).enumerate() {
            if q.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinitePosition {
                    trajectory: i,
                    time: t1,
                });
            }
        }
        for (p, f) in self.pending.iter_mut().zip(&flags) {
            p.insert(*f);
        }
        self.intervals += 1;
        if self.intervals % self.record_every == 0 {
            for ((tr, q), p) in self
                .trajectories
                .iter_mut()
                .zip(self.positions.chunks_exact(ndim))
                .zip(self.pending.iter_mut())
            {
                tr.push(t1, q, *p);
                *p = StepFlags::default();
            }
        }
        Ok(())
    }

    pub fn finish(self) -> TrajectoryEnsemble {
        TrajectoryEnsemble {
            trajectories: self.trajectories,
            seed: self.seed,
            sampling_mode: self.mode,
        }
    }
}

/// Integrates an ensemble through a stored timeline.
///
/// The timeline must provide half-step snapshots, which makes
/// `substeps_per_snapshot = 1` the only stage layout whose stage times all
/// coincide with stored fields.
pub fn integrate(
    timeline: &SnapshotTimeline,
    initial: &InitialEnsemble,
    masses: &MassVector,
    substeps_per_snapshot: usize,
) -> Result<TrajectoryEnsemble> {
    let grid = timeline
        .grid()
        .ok_or_else(|| Error::InvalidArgument("empty timeline".into()))?
        .clone();
    let t0 = timeline.start();
    let mut stepper = EnsembleStepper::new(&grid, initial, t0)?;
    if timeline.snapshots.len() < 2 {
        return Ok(stepper.finish());
    }
    if substeps_per_snapshot == 0 {
        return Err(Error::InvalidArgument(
            "substeps_per_snapshot must be >= 1".into(),
        ));
    }
    let h = timeline.interval;
    if !timeline.has_half_steps() || substeps_per_snapshot != 1 {
        let first_stage = t0 + 0.5 * h / substeps_per_snapshot as f64;
        return Err(Error::StageTimeUnavailable { time: first_stage });
    }
    let ops = FieldOps::new(&grid, masses)?;
    let mut start = ops.velocity(&timeline.snapshots[0])?;
    for (j, (half, end_psi)) in timeline
        .half_snapshots
        .iter()
        .zip(&timeline.snapshots[1..])
        .enumerate()
    {
        let (mid, end) = rayon::join(|| ops.velocity(half), || ops.velocity(end_psi));
        let (mid, end) = (mid?, end?);
        let fields = IntervalFields {
            t0: timeline.snapshots[j].time(),
            h,
            start: &start,
            mid: &mid,
            end: &end,
        };
        stepper.advance(&fields)?;
        start = end;
    }
    Ok(stepper.finish())
}

/// Advances the wavefunction and an ensemble together without storing the
/// timeline. `observe` sees the state and the current positions after every
/// interval (and once before the first). Returns the ensemble and the
/// final state.
pub fn co_evolve<F>(
    psi: &WaveFunction,
    plan: &EvolutionPlan,
    initial: &InitialEnsemble,
    record_every: usize,
    mut observe: F,
) -> Result<(TrajectoryEnsemble, WaveFunction)>
where
    F: FnMut(&WaveFunction, &[f64]) -> Result<()>,
{
    let plan = plan.clone().with_half_steps(true);
    let grid = psi.grid().clone();
    let ops = FieldOps::new(&grid, &plan.masses)?;
    let mut stepper =
        EnsembleStepper::with_record_stride(&grid, initial, psi.time(), record_every)?;
    observe(psi, stepper.positions())?;
    let h = plan.snapshot_interval();
    let mut driver = Evolution::new(psi.clone(), &plan)?;
    let mut start = ops.velocity(psi)?;
    let mut t0 = psi.time();
    while let Some(item) = driver.next_interval()? {
        let half = item.half.expect("half steps requested");
        let (mid, end) = rayon::join(|| ops.velocity(&half), || ops.velocity(&item.end));
        let (mid, end) = (mid?, end?);
        stepper.advance(&IntervalFields {
            t0,
            h,
            start: &start,
            mid: &mid,
            end: &end,
        })?;
        observe(&item.end, stepper.positions())?;
        t0 = item.end.time();
        start = end;
    }
    Ok((stepper.finish(), driver.current().clone()))
}

/// Axis-aligned half-open box `lower <= q < upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Region { lower, upper }
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&lo, &hi))| x >= lo && x < hi)
    }

    fn overlaps(&self, other: &Region) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .all(|((&a0, &a1), (&b0, &b1))| a0.max(b0) < a1.min(b1))
    }
}

/// Index of the support containing the final position.
pub fn classify_channel(trajectory: &Trajectory, supports: &[Region]) -> Result<Option<usize>> {
    for i in 0..supports.len() {
        for j in i + 1..supports.len() {
            if supports[i].overlaps(&supports[j]) {
                return Err(Error::OverlappingSupports(i, j));
            }
        }
    }
    let q = trajectory.final_position();
    Ok(supports.iter().position(|s| s.contains(q)))
}

/// Time spent in the closed box `[lower, upper]`, by the trapezoid rule over
/// the recorded times.
pub fn dwell_time(trajectory: &Trajectory, lower: &[f64], upper: &[f64]) -> f64 {
    let inside = |k: usize| {
        let q = trajectory.position(k);
        q.iter()
            .zip(lower.iter().zip(upper))
            .all(|(&x, (&lo, &hi))| x >= lo && x <= hi)
    };
    let mut total = 0.0;
    let mut prev = trajectory.times.first().map(|_| inside(0));
    for k in 1..trajectory.len() {
        let cur = inside(k);
        let dt = trajectory.times[k] - trajectory.times[k - 1];
        let w = prev.unwrap_or(false) as u8 + cur as u8;
        total += 0.5 * dt * w as f64;
        prev = Some(cur);
    }
    total
}
