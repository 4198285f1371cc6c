//! Coarse-grained H-function `sum_cells rho ln(rho / P)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Square coarse cells of `cell` grid points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseGraining {
    pub cell: usize,
}

impl CoarseGraining {
    pub fn new(cell: usize) -> Self {
        CoarseGraining { cell }
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        if self.cell < 2 {
            return Err(Error::InvalidArgument(
                "coarse cells need at least 2 grid points per axis".into(),
            ));
        }
        for (a, axis) in grid.axes().iter().enumerate() {
            if axis.points % self.cell != 0 {
                return Err(Error::InvalidArgument(format!(
                    "coarse cell of {} points does not divide axis {a} ({} points)",
                    self.cell, axis.points
                )));
            }
        }
        Ok(())
    }

    pub fn cell_volume(&self, grid: &SpatialGrid) -> f64 {
        (0..grid.ndim())
            .map(|a| self.cell as f64 * grid.spacing(a))
            .product()
    }

    pub fn cell_count(&self, grid: &SpatialGrid) -> usize {
        grid.axes().iter().map(|a| a.points / self.cell).product()
    }

    fn coarse_index(&self, grid: &SpatialGrid, idx: usize) -> usize {
        let ij = grid.unravel(idx);
        match grid.ndim() {
            1 => ij[0] / self.cell,
            _ => (ij[0] / self.cell) * (grid.axis(1).points / self.cell) + ij[1] / self.cell,
        }
    }
}

/// Probability mass of a density field in each coarse cell.
pub fn cell_masses(
    grid: &SpatialGrid,
    density: &[f64],
    graining: CoarseGraining,
) -> Result<Vec<f64>> {
    graining.validate(grid)?;
    let dv = grid.cell_volume();
    let mut out = vec![0.0; graining.cell_count(grid)];
    for (i, v) in density.iter().enumerate() {
        out[graining.coarse_index(grid, i)] += v * dv;
    }
    Ok(out)
}

/// `sum rho ln(rho / p)` over cell masses; empty `rho` cells contribute 0.
pub fn relative_entropy(rho: &[f64], p: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for (cell, (&r, &q)) in rho.iter().zip(p).enumerate() {
        if r <= 0.0 {
            continue;
        }
        if q <= 0.0 {
            return Err(Error::EmptyReferenceCell { cell });
        }
        h += r * (r / q).ln();
    }
    Ok(h)
}

/// H-bar for a density field `rho` against `p`.
pub fn h_bar_from_density(
    grid: &SpatialGrid,
    rho: &[f64],
    p: &[f64],
    graining: CoarseGraining,
) -> Result<f64> {
    relative_entropy(
        &cell_masses(grid, rho, graining)?,
        &cell_masses(grid, p, graining)?,
    )
}

/// H-bar with `rho` estimated by a cell-count histogram of flat `samples`.
pub fn h_bar_from_samples(
    grid: &SpatialGrid,
    samples: &[f64],
    p: &[f64],
    graining: CoarseGraining,
) -> Result<f64> {
    let pm = cell_masses(grid, p, graining)?;
    let d = grid.ndim();
    let n = samples.len() / d;
    if n == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut counts = vec![0usize; pm.len()];
    for q in samples.chunks_exact(d) {
        counts[graining.coarse_index(grid, grid.nearest_index(q))] += 1;
    }
    let rho: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    relative_entropy(&rho, &pm)
}

/// Noise level of H-bar for `n` samples drawn exactly from `p`: the mean
/// histogram bias `(K - 1) / 2n` plus three standard deviations, with `K`
/// the number of coarse cells carrying non-negligible mass.
pub fn statistical_floor(p_masses: &[f64], n: usize) -> f64 {
    let k = p_masses.iter().filter(|&&m| m >= 1e-6).count().max(1) as f64 - 1.0;
    (k + 3.0 * (2.0 * k).sqrt()) / (2.0 * n as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HSeries {
    pub times: Vec<f64>,
    /// H-bar in nats.
    pub values: Vec<f64>,
    pub floor: f64,
}

impl HSeries {
    pub fn push(&mut self, t: f64, h: f64) {
        self.times.push(t);
        self.values.push(h);
    }

    pub fn first(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|&h| h >= -1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::sample_density;

    fn bumps(g: &SpatialGrid, c: f64) -> Vec<f64> {
        (0..g.len())
            .map(|j| (-(g.point(j)[0] - c).powi(2)).exp() + 0.01)
            .collect()
    }

    #[test]
    fn two_cell_oracle() {
        let g = SpatialGrid::line(0.0, 2.0, 32).unwrap();
        let rho: Vec<f64> = (0..32).map(|j| if j < 16 { 0.8 } else { 0.2 }).collect();
        let p = vec![0.5; 32];
        let h = h_bar_from_density(&g, &rho, &p, CoarseGraining::new(16)).unwrap();
        let oracle = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.1927).abs() < 1e-4);
    }

    #[test]
    fn zero_at_equality_and_gibbs() {
        let g = SpatialGrid::line(-4.0, 4.0, 64).unwrap();
        let p = bumps(&g, 0.0);
        let gr = CoarseGraining::new(4);
        assert!(h_bar_from_density(&g, &p, &p, gr).unwrap().abs() < 1e-10);
        for c in [-2.0, -0.5, 1.0, 3.0] {
            let rho = bumps(&g, c);
            let total: f64 = g.integrate(&rho);
            let rho: Vec<f64> = rho.iter().map(|r| r / total).collect();
            let pt = g.integrate(&p);
            let pn: Vec<f64> = p.iter().map(|r| r / pt).collect();
            assert!(h_bar_from_density(&g, &rho, &pn, gr).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn empty_reference_cell() {
        let g = SpatialGrid::line(0.0, 1.0, 16).unwrap();
        let mut p = vec![2.0; 16];
        p[..8].iter_mut().for_each(|v| *v = 0.0);
        let rho = vec![1.0; 16];
        assert!(matches!(
            h_bar_from_density(&g, &rho, &p, CoarseGraining::new(8)),
            Err(Error::EmptyReferenceCell { cell: 0 })
        ));
    }

    #[test]
    fn equilibrium_samples_below_floor() {
        let g = SpatialGrid::line(-6.0, 6.0, 128).unwrap();
        let p: Vec<f64> = (0..128)
            .map(|j| (-0.5 * g.point(j)[0].powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .collect();
        let gr = CoarseGraining::new(8);
        let pm = cell_masses(&g, &p, gr).unwrap();
        for n in [1_000, 10_000] {
            let s = sample_density(&g, &p, n, 5).unwrap();
            let h = h_bar_from_samples(&g, &s, &p, gr).unwrap();
            assert!(h >= 0.0 && h < statistical_floor(&pm, n), "n={n} h={h}");
        }
    }

    #[test]
    fn graining_validation() {
        let g = SpatialGrid::line(0.0, 1.0, 32).unwrap();
        assert!(CoarseGraining::new(1).validate(&g).is_err());
        assert!(CoarseGraining::new(3).validate(&g).is_err());
        assert!(CoarseGraining::new(8).validate(&g).is_ok());
    }
}
