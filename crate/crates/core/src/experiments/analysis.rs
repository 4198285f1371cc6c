//! Histograms, fringe measures and ordering checks shared by the presets.

use serde::{Deserialize, Serialize};

use crate::grid::{Axis, SpatialGrid};
use crate::trajectories::TrajectoryEnsemble;

/// Ensemble histogram on one axis next to the `|psi|^2` marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub name: String,
    pub axis: usize,
    pub time: f64,
    pub centers: Vec<f64>,
    /// Normalized so that `sum(density) * bin_width = 1`.
    pub density: Vec<f64>,
    /// Marginal of `|psi|^2` averaged over the same bins.
    pub reference: Vec<f64>,
}

impl Histogram {
    /// Bins of `bin_points` grid cells along `axis` (cells centred on grid
    /// points, wrapped like the grid).
    pub fn build(
        name: &str,
        grid: &SpatialGrid,
        axis: usize,
        time: f64,
        samples: &[f64],
        p: &[f64],
        bin_points: usize,
    ) -> Histogram {
        let ax = grid.axis(axis);
        let bin_points = bin_points.clamp(1, ax.points);
        let bins = ax.points / bin_points;
        let width = ax.spacing() * bin_points as f64;
        let d = grid.ndim();
        let mut counts = vec![0usize; bins];
        let mut n = 0usize;
        for q in samples.chunks_exact(d) {
            let j = ax.nearest_index(q[axis]);
            counts[(j / bin_points).min(bins - 1)] += 1;
            n += 1;
        }
        let marginal = grid.marginal(p, axis);
        let mut reference = vec![0.0; bins];
        for (j, m) in marginal.iter().enumerate() {
            reference[(j / bin_points).min(bins - 1)] += m / bin_points as f64;
        }
        let centers = (0..bins)
            .map(|b| ax.coord(b * bin_points) + 0.5 * (bin_points as f64 - 1.0) * ax.spacing())
            .collect();
        let density = counts
            .iter()
            .map(|&c| c as f64 / (n.max(1) as f64 * width))
            .collect();
        Histogram {
            name: name.to_string(),
            axis,
            time,
            centers,
            density,
            reference,
        }
    }
}

/// `(I_max - I_min) / (I_max + I_min)` of the fringe centred nearest to
/// `center`: the local maximum reached by climbing from the grid point
/// nearest `center`, against the higher of the first minima on either side.
pub fn fringe_visibility(axis: &Axis, values: &[f64], center: f64) -> f64 {
    let n = values.len();
    let mut i = axis.nearest_index(center);
    loop {
        let left = if i > 0 {
            values[i - 1]
        } else {
            f64::NEG_INFINITY
        };
        let right = if i + 1 < n {
            values[i + 1]
        } else {
            f64::NEG_INFINITY
        };
        if left > values[i] && left >= right {
            i -= 1;
        } else if right > values[i] {
            i += 1;
        } else {
            break;
        }
    }
    let imax = values[i];
    let mut l = i;
    while l > 0 && values[l - 1] <= values[l] {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < n && values[r + 1] <= values[r] {
        r += 1;
    }
    let imin = values[l].max(values[r]);
    if imax + imin <= 0.0 {
        return 0.0;
    }
    (imax - imin) / (imax + imin)
}

/// Largest relative size of the interference term, `|I - I_inc| / I_inc`,
/// within `window` of `center`, over points where the incoherent sum holds
/// at least 1e-3 of its peak.
pub fn interference_contrast(
    axis: &Axis,
    values: &[f64],
    incoherent: &[f64],
    center: f64,
    window: f64,
) -> f64 {
    let peak = incoherent.iter().copied().fold(0.0, f64::max);
    (0..values.len())
        .filter(|&j| (axis.coord(j) - center).abs() <= window && incoherent[j] >= 1e-3 * peak)
        .map(|j| (values[j] - incoherent[j]).abs() / incoherent[j])
        .fold(0.0, f64::max)
}

/// Number of (time, neighbour pair) order inversions relative to the
/// initial ordering along `axis`.
pub fn rank_violations(grid: &SpatialGrid, ensemble: &TrajectoryEnsemble, axis: usize) -> usize {
    let paths: Vec<Vec<f64>> = ensemble
        .trajectories
        .iter()
        .map(|t| t.unwrapped(grid, axis))
        .collect();
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| paths[a][0].total_cmp(&paths[b][0]));
    let steps = ensemble.times().len();
    let mut count = 0;
    for k in 0..steps {
        for w in order.windows(2) {
            if paths[w[1]][k] <= paths[w[0]][k] && paths[w[1]][0] > paths[w[0]][0] {
                count += 1;
            }
        }
    }
    count
}

/// Trajectories whose coordinate on `axis` ever has the opposite sign of
/// its starting value.
pub fn sign_violations(grid: &SpatialGrid, ensemble: &TrajectoryEnsemble, axis: usize) -> usize {
    ensemble
        .trajectories
        .iter()
        .filter(|t| {
            let path = t.unwrapped(grid, axis);
            let s0 = path[0].signum();
            path.iter().any(|x| x.signum() != s0)
        })
        .count()
}

/// Largest displacement from the starting point over all trajectories and
/// recorded times, using unwrapped coordinates.
pub fn max_displacement(grid: &SpatialGrid, ensemble: &TrajectoryEnsemble) -> f64 {
    let mut worst: f64 = 0.0;
    for t in &ensemble.trajectories {
        for a in 0..grid.ndim() {
            let path = t.unwrapped(grid, a);
            for x in &path {
                worst = worst.max((x - path[0]).abs());
            }
        }
    }
    worst
}

/// Probability mass of the cell-wise constant density `p` (1D) inside the
/// closed interval `[lo, hi]`.
pub fn interval_mass(axis: &Axis, p: &[f64], lo: f64, hi: f64) -> f64 {
    let dx = axis.spacing();
    p.iter()
        .enumerate()
        .map(|(j, v)| {
            let c = axis.coord(j);
            let overlap = (hi.min(c + 0.5 * dx) - lo.max(c - 0.5 * dx)).max(0.0);
            v * overlap
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectories::{SamplingMode, StepFlags, Trajectory};

    #[test]
    fn visibility_of_cosine_fringes() {
        let g = SpatialGrid::line(-8.0, 8.0, 256).unwrap();
        let ax = g.axis(0);
        let v: Vec<f64> = (0..256)
            .map(|j| 1.0 + 0.6 * (2.0 * ax.coord(j)).cos())
            .collect();
        assert!((fringe_visibility(ax, &v, 0.1) - 0.6).abs() < 1e-3);
        let inc = vec![1.0; 256];
        assert!((interference_contrast(ax, &v, &inc, 0.0, 4.0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn interval_mass_uses_partial_cells() {
        let g = SpatialGrid::line(-4.0, 4.0, 64).unwrap();
        let p = vec![1.0 / 8.0; 64];
        assert!((interval_mass(g.axis(0), &p, 0.0, 2.0) - 0.25).abs() < 1e-12);
        assert!((interval_mass(g.axis(0), &p, 0.03, 1.01) - 0.98 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn detects_crossings() {
        let g = SpatialGrid::line(-4.0, 4.0, 64).unwrap();
        let mut a = Trajectory::new(1);
        let mut b = Trajectory::new(1);
        for (k, (x, y)) in [(0.0, 1.0), (0.5, 0.7), (0.9, 0.6)].iter().enumerate() {
            a.push(k as f64, &[*x], StepFlags::default());
            b.push(k as f64, &[*y], StepFlags::default());
        }
        let e = TrajectoryEnsemble {
            trajectories: vec![a, b],
            seed: 0,
            sampling_mode: SamplingMode::ExplicitList,
        };
        assert_eq!(rank_violations(&g, &e, 0), 1);
        assert_eq!(sign_violations(&g, &e, 0), 0);
        assert!((max_displacement(&g, &e) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn histogram_is_normalized() {
        let g = SpatialGrid::line(0.0, 1.0, 64).unwrap();
        let p = vec![1.0; 64];
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let h = Histogram::build("x", &g, 0, 0.0, &s, &p, 4);
        let w = 4.0 / 64.0;
        assert!((h.density.iter().sum::<f64>() * w - 1.0).abs() < 1e-12);
        assert!((h.reference.iter().sum::<f64>() * w - 1.0).abs() < 1e-12);
    }
}
