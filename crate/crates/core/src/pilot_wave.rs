//! Bohmian fields derived from a wavefunction: density, guidance velocity,
//! quantum potential, and residual diagnostics for the continuity and
//! quantum-Newton equations.
//!
//! The velocity uses the logarithmic-derivative form
//! `v_a = (hbar / m_a) Im(d_a psi / psi)`, so the phase is never unwrapped.
//! The quantum potential is evaluated as
//! `Q = -sum_a (hbar^2 / 2 m_a) [Re(d_a^2 psi / psi) + Im(d_a psi / psi)^2]`,
//! which equals `-(hbar^2/2m) lap R / R` for `R = |psi|` but differentiates
//! the smooth `psi` instead of `R` (which has kinks at nodes).
//!
//! Points with `P < eps * max P` form the node mask. Masked values are
//! replaced by the value at the nearest unmasked point.

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{MassVector, SpatialGrid};
use crate::interp;
use crate::potential::PotentialSpec;
use crate::propagator::SnapshotTimeline;
use crate::spectral::Spectral;
use crate::trajectories::TrajectoryEnsemble;
use crate::wavefunction::WaveFunction;

/// Default relative node threshold.
pub const DEFAULT_NODE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePolicy {
    /// Mask points with `P < epsilon * max(P)`.
    pub epsilon: f64,
    /// Raise `AllNodes` when masked points hold more than this fraction of
    /// the probability.
    pub max_masked_mass: f64,
}

impl Default for NodePolicy {
    fn default() -> Self {
        NodePolicy {
            epsilon: DEFAULT_NODE_EPSILON,
            max_masked_mass: 0.5,
        }
    }
}

/// `|psi|^2` pointwise.
pub fn density(psi: &WaveFunction) -> Vec<f64> {
    psi.density()
}

/// Guidance velocity on the grid at one instant.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub time: f64,
    grid: SpatialGrid,
    /// One component per axis.
    pub components: Vec<Vec<f64>>,
    pub node_mask: Vec<bool>,
}

impl VelocityField {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Interpolated velocity at `q`.
    #[inline]
    pub fn at(&self, q: &[f64]) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = interp::value(&self.grid, c, q);
        }
        v
    }

    /// Whether the grid point nearest to `q` is masked.
    #[inline]
    pub fn in_masked_cell(&self, q: &[f64]) -> bool {
        self.node_mask[self.grid.nearest_index(q)]
    }

    pub fn masked_count(&self) -> usize {
        self.node_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone)]
pub struct QuantumPotential {
    pub values: Vec<f64>,
    pub node_mask: Vec<bool>,
    /// Points where `|Q|` exceeds ten times its `|psi|^2`-weighted median.
    pub spikes: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct PolarFields {
    pub density: Vec<f64>,
    pub velocity: Vec<Vec<f64>>,
    pub quantum_potential: Vec<f64>,
    pub node_mask: Vec<bool>,
    /// Unwrapped `S = hbar * arg(psi)` along the single axis; 1D only.
    pub phase_1d: Option<Vec<f64>>,
}

/// Spectral derivative machinery bound to one grid and mass vector.
#[derive(Debug, Clone)]
pub struct FieldOps {
    spectral: Spectral,
    masses: MassVector,
    policy: NodePolicy,
}

struct Derivs {
    first: Vec<Vec<Complex64>>,
    second: Vec<Vec<Complex64>>,
}

impl FieldOps {
    pub fn new(grid: &SpatialGrid, masses: &MassVector) -> Result<Self> {
        Self::with_policy(grid, masses, NodePolicy::default())
    }

    pub fn with_policy(
        grid: &SpatialGrid,
        masses: &MassVector,
        policy: NodePolicy,
    ) -> Result<Self> {
        masses.check(grid)?;
        Ok(FieldOps {
            spectral: Spectral::new(grid),
            masses: masses.clone(),
            policy,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.spectral.grid()
    }

    pub fn masses(&self) -> &MassVector {
        &self.masses
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn check(&self, psi: &WaveFunction) -> Result<()> {
        if psi.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn derivs(&self, psi: &WaveFunction, second: bool) -> Derivs {
        let mut hat = psi.amplitudes().to_vec();
        self.spectral.forward(&mut hat);
        let d = self.grid().ndim();
        let first = (0..d)
            .map(|a| self.spectral.derivative_from_hat(&hat, a))
            .collect();
        let second = if second {
            (0..d)
                .map(|a| self.spectral.second_derivative_from_hat(&hat, a))
                .collect()
        } else {
            vec![]
        };
        Derivs { first, second }
    }

    /// Node mask for `P`, failing if the masked region carries too much mass.
    pub fn node_mask(&self, p: &[f64]) -> Result<Vec<bool>> {
        let pmax = p.iter().cloned().fold(0.0, f64::max);
        if !(pmax > 0.0) || !pmax.is_finite() {
            return Err(Error::AllNodes { fraction: 1.0 });
        }
        let cut = self.policy.epsilon * pmax;
        let mask: Vec<bool> = p.iter().map(|&x| x < cut).collect();
        let total: f64 = p.iter().sum();
        let masked: f64 = p
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(x, _)| x)
            .sum();
        let fraction = masked / total;
        if fraction > self.policy.max_masked_mass {
            return Err(Error::AllNodes { fraction });
        }
        Ok(mask)
    }

    /// Guidance velocity `(hbar/m_a) Im(d_a psi / psi)`.
    pub fn velocity(&self, psi: &WaveFunction) -> Result<VelocityField> {
        self.check(psi)?;
        let p = psi.density();
        let mask = self.node_mask(&p)?;
        let d = self.derivs(psi, false);
        let hbar = psi.hbar();
        let components = d
            .first
            .iter()
            .enumerate()
            .map(|(a, dpsi)| {
                let c = hbar / self.masses.get(a);
                let mut v: Vec<f64> = psi
                    .amplitudes()
                    .iter()
                    .zip(dpsi)
                    .zip(&p)
                    .map(|((z, dz), &pp)| {
                        if pp > 0.0 {
                            c * (z.conj() * dz).im / pp
                        } else {
                            0.0
                        }
                    })
                    .collect();
                fill_masked(self.grid(), &mut v, &mask);
                v
            })
            .collect();
        Ok(VelocityField {
            time: psi.time(),
            grid: self.grid().clone(),
            components,
            node_mask: mask,
        })
    }

    /// Probability current `P v = (hbar/m_a) Im(conj(psi) d_a psi)`.
    pub fn current(&self, psi: &WaveFunction) -> Result<Vec<Vec<f64>>> {
        self.check(psi)?;
        let d = self.derivs(psi, false);
        let hbar = psi.hbar();
        Ok(d.first
            .iter()
            .enumerate()
            .map(|(a, dpsi)| {
                let c = hbar / self.masses.get(a);
                psi.amplitudes()
                    .iter()
                    .zip(dpsi)
                    .map(|(z, dz)| c * (z.conj() * dz).im)
                    .collect()
            })
            .collect())
    }

    pub fn quantum_potential(&self, psi: &WaveFunction) -> Result<QuantumPotential> {
        self.check(psi)?;
        let p = psi.density();
        let mask = self.node_mask(&p)?;
        let d = self.derivs(psi, true);
        let values = self.q_from(psi, &p, &mask, &d);
        let spikes = spike_flags(&values, &p, &mask);
        Ok(QuantumPotential {
            values,
            node_mask: mask,
            spikes,
        })
    }

    fn q_from(&self, psi: &WaveFunction, p: &[f64], mask: &[bool], d: &Derivs) -> Vec<f64> {
        let hbar = psi.hbar();
        let mut q = vec![0.0; p.len()];
        for a in 0..self.grid().ndim() {
            let c = -hbar * hbar / (2.0 * self.masses.get(a));
            for (i, qi) in q.iter_mut().enumerate() {
                if p[i] <= 0.0 {
                    continue;
                }
                let z = psi.amplitudes()[i];
                let lap = (z.conj() * d.second[a][i]).re / p[i];
                let grad = (z.conj() * d.first[a][i]).im / p[i];
                *qi += c * (lap + grad * grad);
            }
        }
        fill_masked(self.grid(), &mut q, mask);
        q
    }

    pub fn polar_fields(&self, psi: &WaveFunction) -> Result<PolarFields> {
        self.check(psi)?;
        let p = psi.density();
        let mask = self.node_mask(&p)?;
        let d = self.derivs(psi, true);
        let hbar = psi.hbar();
        let velocity = d
            .first
            .iter()
            .enumerate()
            .map(|(a, dpsi)| {
                let c = hbar / self.masses.get(a);
                let mut v: Vec<f64> = psi
                    .amplitudes()
                    .iter()
                    .zip(dpsi)
                    .zip(&p)
                    .map(|((z, dz), &pp)| {
                        if pp > 0.0 {
                            c * (z.conj() * dz).im / pp
                        } else {
                            0.0
                        }
                    })
                    .collect();
                fill_masked(self.grid(), &mut v, &mask);
                v
            })
            .collect();
        let quantum_potential = self.q_from(psi, &p, &mask, &d);
        let phase_1d = if self.grid().ndim() == 1 {
            Some(phase_1d(psi)?)
        } else {
            None
        };
        Ok(PolarFields {
            density: p,
            velocity,
            quantum_potential,
            node_mask: mask,
            phase_1d,
        })
    }
}

/// Replaces masked entries by the value at the nearest unmasked grid point
/// (multi-source breadth-first search over periodic axis neighbours).
fn fill_masked(grid: &SpatialGrid, values: &mut [f64], mask: &[bool]) {
    if !mask.iter().any(|&m| m) {
        return;
    }
    let mut done: Vec<bool> = mask.iter().map(|&m| !m).collect();
    let mut queue: VecDeque<usize> = (0..values.len()).filter(|&i| done[i]).collect();
    let shape = grid.shape();
    while let Some(i) = queue.pop_front() {
        let ij = grid.unravel(i);
        for (a, &n) in shape.iter().enumerate() {
            for step in [1, n - 1] {
                let mut nb = ij;
                nb[a] = (ij[a] + step) % n;
                let k = grid.ravel(nb);
                if !done[k] {
                    done[k] = true;
                    values[k] = values[i];
                    queue.push_back(k);
                }
            }
        }
    }
}

fn spike_flags(values: &[f64], p: &[f64], mask: &[bool]) -> Vec<bool> {
    let median = weighted_median_abs(values, p, mask);
    let cut = 10.0 * median;
    values
        .iter()
        .zip(mask)
        .map(|(v, &m)| !m && v.abs() > cut)
        .collect()
}

/// Median of `|values|` under the weights `p` (unmasked points only).
fn weighted_median_abs(values: &[f64], p: &[f64], mask: &[bool]) -> f64 {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(p)
        .zip(mask)
        .filter(|(_, &m)| !m)
        .map(|((v, w), _)| (v.abs(), *w))
        .collect();
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|x| x.1).sum();
    let mut acc = 0.0;
    for (v, w) in &pairs {
        acc += w;
        if acc >= 0.5 * total {
            return *v;
        }
    }
    pairs.last().map_or(0.0, |x| x.0)
}

pub fn velocity_field(psi: &WaveFunction, masses: &MassVector) -> Result<VelocityField> {
    FieldOps::new(psi.grid(), masses)?.velocity(psi)
}

pub fn quantum_potential(psi: &WaveFunction, masses: &MassVector) -> Result<QuantumPotential> {
    FieldOps::new(psi.grid(), masses)?.quantum_potential(psi)
}

pub fn polar_fields(psi: &WaveFunction, masses: &MassVector) -> Result<PolarFields> {
    FieldOps::new(psi.grid(), masses)?.polar_fields(psi)
}

/// `S = hbar * arg(psi)` unwrapped along a single axis by summing phase
/// differences of neighbouring points, each wrapped to `(-pi, pi]`.
/// Diagnostic only: the result is meaningless across nodes.
pub fn phase_1d(psi: &WaveFunction) -> Result<Vec<f64>> {
    if psi.grid().ndim() != 1 {
        return Err(Error::InvalidArgument("phase unwrapping is 1D only".into()));
    }
    let a = psi.amplitudes();
    let hbar = psi.hbar();
    let mut s = Vec::with_capacity(a.len());
    let mut acc = a[0].arg();
    s.push(hbar * acc);
    for w in a.windows(2) {
        acc += (w[1] * w[0].conj()).arg();
        s.push(hbar * acc);
    }
    Ok(s)
}

/// RMS over grid points and interior snapshots of
/// `dP/dt + div(P v)`, with centred time differences and a spectral
/// divergence of the current.
pub fn continuity_residual(timeline: &SnapshotTimeline, masses: &MassVector) -> Result<f64> {
    let snaps = &timeline.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InvalidArgument(
            "continuity residual needs at least 3 snapshots".into(),
        ));
    }
    let grid = snaps[0].grid();
    let ops = FieldOps::new(grid, masses)?;
    let tau = timeline.interval;
    let sums: Vec<f64> = (1..snaps.len() - 1)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let p_prev = snaps[j - 1].density();
            let p_next = snaps[j + 1].density();
            let div = ops.spectral().divergence(&ops.current(&snaps[j])?);
            Ok(p_prev
                .iter()
                .zip(&p_next)
                .zip(&div)
                .map(|((a, b), d)| {
                    let r = (b - a) / (2.0 * tau) + d;
                    r * r
                })
                .sum())
        })
        .collect::<Result<_>>()?;
    let count = (snaps.len() - 2) * grid.len();
    Ok((sums.iter().sum::<f64>() / count as f64).sqrt())
}

/// RMS relative residual of `d(m v)/dt = -grad(V + Q)` along trajectories.
///
/// Trajectory times must coincide with the timeline's snapshot times. The
/// momentum is sampled from the interpolated velocity field at each recorded
/// position and differenced with centred differences; the force comes from
/// the Catmull-Rom gradient of `V + Q` tabulated on the grid.
pub fn quantum_newton_residual(
    ensemble: &TrajectoryEnsemble,
    timeline: &SnapshotTimeline,
    potential: &PotentialSpec,
    masses: &MassVector,
) -> Result<f64> {
    let snaps = &timeline.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InvalidArgument(
            "quantum-Newton residual needs at least 3 snapshots".into(),
        ));
    }
    let times = ensemble.times();
    if times.len() != snaps.len()
        || times
            .iter()
            .zip(snaps)
            .any(|(t, s)| (t - s.time()).abs() > 1e-9 * timeline.interval.max(1e-300))
    {
        return Err(Error::InvalidArgument(
            "trajectory times do not match the snapshot times".into(),
        ));
    }
    let grid = snaps[0].grid();
    let ops = FieldOps::new(grid, masses)?;
    let v_ext = potential.evaluate_real(grid, masses)?;
    let d = grid.ndim();
    let n_traj = ensemble.trajectories.len();
    // momentum[k][traj][axis], force[k][traj][axis]
    let mut momentum = vec![vec![[0.0f64; 2]; n_traj]; snaps.len()];
    let mut force = vec![vec![[0.0f64; 2]; n_traj]; snaps.len()];
    for (k, psi) in snaps.iter().enumerate() {
        let vel = ops.velocity(psi)?;
        let qp = ops.quantum_potential(psi)?;
        let total: Vec<f64> = v_ext.iter().zip(&qp.values).map(|(a, b)| a + b).collect();
        for (i, tr) in ensemble.trajectories.iter().enumerate() {
            let q = tr.position(k);
            if vel.in_masked_cell(q) {
                return Err(Error::NodeProximity {
                    trajectory: i,
                    time: times[k],
                });
            }
            let v = vel.at(q);
            let g = interp::gradient(grid, &total, q);
            for a in 0..d {
                momentum[k][i][a] = masses.get(a) * v[a];
                force[k][i][a] = -g[a];
            }
        }
    }
    let tau = timeline.interval;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 1..snaps.len() - 1 {
        for i in 0..n_traj {
            for a in 0..d {
                let dp = (momentum[k + 1][i][a] - momentum[k - 1][i][a]) / (2.0 * tau);
                let f = force[k][i][a];
                num += (dp - f) * (dp - f);
                den += f * f;
            }
        }
    }
    if den == 0.0 {
        // Force-free motion: report the absolute residual.
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}
