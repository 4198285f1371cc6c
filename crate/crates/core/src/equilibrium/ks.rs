//! Kolmogorov-Smirnov distance between an ensemble and `|psi|^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, SpatialGrid};
use crate::propagator::SnapshotTimeline;
use crate::trajectories::TrajectoryEnsemble;
use crate::wavefunction::WaveFunction;

/// Asymptotic 99% critical value of the one-sample KS statistic.
pub fn ks_critical_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Sup distance between the empirical CDF of `samples` and the CDF of the
/// piecewise-constant density `p` on `axis` (cells centred on grid points).
///
/// The CDF starts at the left edge of cell 0, half a spacing below `min`;
/// samples are wrapped into that period.
pub fn ks_distance_1d(axis: &Axis, samples: &[f64], p: &[f64]) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let dx = axis.spacing();
    let len = axis.length();
    let origin = axis.min - 0.5 * dx;
    let total: f64 = p.iter().sum();
    let mut cum = Vec::with_capacity(p.len() + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for v in p {
        acc += v / total;
        cum.push(acc);
    }
    let mut u: Vec<f64> = samples
        .iter()
        .map(|x| (x - origin).rem_euclid(len))
        .collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let last = p.len() - 1;
    let mut d: f64 = 0.0;
    for (i, x) in u.iter().enumerate() {
        let s = x / dx;
        let j = (s.floor() as usize).min(last);
        let frac = (s - j as f64).clamp(0.0, 1.0);
        let f = cum[j] + (cum[j + 1] - cum[j]) * frac;
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// KS distance of flat `samples` against `p` on `grid`; for two axes the
/// larger of the two marginal distances.
pub fn ks_distance(grid: &SpatialGrid, samples: &[f64], p: &[f64]) -> f64 {
    let d = grid.ndim();
    (0..d)
        .map(|a| {
            let coords: Vec<f64> = samples.iter().skip(a).step_by(d).copied().collect();
            ks_distance_1d(grid.axis(a), &coords, &grid.marginal(p, a))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsCheck {
    pub time: f64,
    pub distance: f64,
    pub critical: f64,
    pub passed: bool,
}

impl KsCheck {
    pub fn evaluate(psi: &WaveFunction, samples: &[f64]) -> KsCheck {
        let grid = psi.grid();
        let n = samples.len() / grid.ndim();
        let distance = ks_distance(grid, samples, &psi.density());
        let critical = ks_critical_99(n);
        KsCheck {
            time: psi.time(),
            distance,
            critical,
            passed: distance < critical,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub checks: Vec<KsCheck>,
}

impl EquivarianceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_distance(&self) -> f64 {
        self.checks.iter().map(|c| c.distance).fold(0.0, f64::max)
    }
}

/// KS distance between the ensemble and the snapshot density at each of
/// `check_times`. Each check time must coincide with a recorded trajectory
/// time.
pub fn equivariance_report(
    ensemble: &TrajectoryEnsemble,
    timeline: &SnapshotTimeline,
    check_times: &[f64],
) -> Result<EquivarianceReport> {
    let times = ensemble.times();
    let tol = 1e-9 * timeline.interval.abs().max(1.0);
    let mut checks = Vec::with_capacity(check_times.len());
    for &t in check_times {
        let k = times
            .iter()
            .position(|s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::InvalidArgument(format!("no trajectory record at t = {t}")))?;
        let j = timeline.nearest(t);
        let snap = &timeline.snapshots[j];
        if (snap.time() - t).abs() > tol {
            return Err(Error::InvalidArgument(format!("no snapshot at t = {t}")));
        }
        checks.push(KsCheck::evaluate(snap, &ensemble.positions_at(k)));
    }
    Ok(EquivarianceReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::sample_density;

    #[test]
    fn uniform_samples_pass() {
        let g = SpatialGrid::line(0.0, 1.0, 64).unwrap();
        let p = vec![1.0; 64];
        let n = 100_000;
        let s = sample_density(&g, &p, n, 11).unwrap();
        assert!(ks_distance(&g, &s, &p) < ks_critical_99(n));
    }

    #[test]
    fn point_mass_is_far() {
        let g = SpatialGrid::line(0.0, 1.0, 64).unwrap();
        let p = vec![1.0; 64];
        let s = vec![0.5; 200];
        assert!(ks_distance(&g, &s, &p) >= 0.5);
    }

    #[test]
    fn grid_point_samples_within_one_cell_mass() {
        // Empirical CDF that steps at the grid points: error bounded by the
        // largest cell mass.
        let g = SpatialGrid::line(-5.0, 5.0, 64).unwrap();
        let p: Vec<f64> = (0..64)
            .map(|j| (-0.5 * g.axis(0).coord(j).powi(2)).exp())
            .collect();
        let total: f64 = p.iter().sum();
        let mut s = Vec::new();
        for (j, v) in p.iter().enumerate() {
            let k = (v / total * 100_000.0).round() as usize;
            s.extend(std::iter::repeat(g.axis(0).coord(j)).take(k));
        }
        let cell = p.iter().copied().fold(0.0, f64::max) / total;
        assert!(ks_distance(&g, &s, &p) <= cell + 1e-4);
    }
}
