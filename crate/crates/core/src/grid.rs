//! Uniform periodic configuration-space lattices.
//!
//! A grid has one or two axes. Each axis either spans a spatial dimension of
//! one particle or the coordinate of a separate one-dimensional particle; the
//! numerics do not distinguish the two readings. Samples sit at
//! `x_j = min + j * dx` for `j = 0..points`, so `max` itself is excluded and
//! identified with `min`.
//!
//! Storage is row-major: axis 0 is the slow index.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the total number of grid points.
pub const DEFAULT_POINT_CAP: usize = 1 << 22;

/// Smallest admissible number of points on an axis.
pub const MIN_AXIS_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Axis { min, max, points }
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.points as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.min + j as f64 * self.spacing()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        let dk = 2.0 * PI / self.length();
        (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                m as f64 * dk
            })
            .collect()
    }

    /// Maps `x` into `[min, max)`. The flag reports whether a shift happened.
    pub fn wrap(&self, x: f64) -> (f64, bool) {
        if x >= self.min && x < self.max {
            return (x, false);
        }
        let len = self.length();
        let mut y = self.min + (x - self.min).rem_euclid(len);
        // rem_euclid can round up to exactly `len`
        if y >= self.max {
            y = self.min;
        }
        (y, true)
    }

    /// Index of the grid point whose centered cell contains `x` (periodic).
    pub fn nearest_index(&self, x: f64) -> usize {
        let s = ((x - self.min) / self.spacing()).round() as i64;
        s.rem_euclid(self.points as i64) as usize
    }

    fn validate(&self, axis: usize) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "axis {axis}: bounds must be finite"
            )));
        }
        if self.max <= self.min {
            return Err(Error::InvalidGrid(format!(
                "axis {axis}: max ({}) must exceed min ({})",
                self.max, self.min
            )));
        }
        if self.points < MIN_AXIS_POINTS || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "axis {axis}: {} points; need a power of two >= {MIN_AXIS_POINTS}",
                self.points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        Self::with_cap(axes, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(axes: Vec<Axis>, cap: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "{} axes; 1 or 2 supported",
                axes.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            a.validate(i)?;
        }
        let total: usize = axes.iter().map(|a| a.points).product();
        if total > cap {
            return Err(Error::InvalidGrid(format!(
                "{total} points exceeds the cap of {cap}"
            )));
        }
        Ok(SpatialGrid { axes })
    }

    pub fn line(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::new(min, max, points)])
    }

    pub fn plane(a: Axis, b: Axis) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.axes[axis].spacing()
    }

    /// Volume element `prod dx`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Stride of `axis` in the flat storage.
    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.points).product()
    }

    /// Multi-index of flat index `idx`; unused trailing slots are zero.
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [idx, 0],
            _ => {
                let n1 = self.axes[1].points;
                [idx / n1, idx % n1]
            }
        }
    }

    pub fn ravel(&self, ij: [usize; 2]) -> usize {
        match self.axes.len() {
            1 => ij[0],
            _ => ij[0] * self.axes[1].points + ij[1],
        }
    }

    /// Coordinates of flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ij = self.unravel(idx);
        let mut p = [0.0; 2];
        for (a, axis) in self.axes.iter().enumerate() {
            p[a] = axis.coord(ij[a]);
        }
        p
    }

    /// Flat index of the grid point nearest to `q` (periodic).
    pub fn nearest_index(&self, q: &[f64]) -> usize {
        let mut ij = [0usize; 2];
        for (a, axis) in self.axes.iter().enumerate() {
            ij[a] = axis.nearest_index(q[a]);
        }
        self.ravel(ij)
    }

    /// Wraps `q` into the fundamental domain in place; returns whether any
    /// coordinate moved.
    pub fn wrap(&self, q: &mut [f64]) -> bool {
        let mut any = false;
        for (a, axis) in self.axes.iter().enumerate() {
            let (y, w) = axis.wrap(q[a]);
            q[a] = y;
            any |= w;
        }
        any
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.ndim()
            && self
                .axes
                .iter()
                .zip(q)
                .all(|(a, &x)| x >= a.min && x < a.max)
    }

    /// Sum of `values * cell_volume`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Marginal of a field on `axis`, integrating out the other axis.
    pub fn marginal(&self, values: &[f64], axis: usize) -> Vec<f64> {
        if self.ndim() == 1 {
            return values.to_vec();
        }
        let [n0, n1] = [self.axes[0].points, self.axes[1].points];
        if axis == 0 {
            let dy = self.axes[1].spacing();
            values
                .chunks_exact(n1)
                .map(|row| row.iter().sum::<f64>() * dy)
                .collect()
        } else {
            let dx = self.axes[0].spacing();
            let mut out = vec![0.0; n1];
            for i in 0..n0 {
                for (o, v) in out.iter_mut().zip(&values[i * n1..(i + 1) * n1]) {
                    *o += v;
                }
            }
            out.iter_mut().for_each(|o| *o *= dx);
            out
        }
    }
}

/// Per-axis particle masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "masses must be finite and positive, got {masses:?}"
            )));
        }
        Ok(MassVector(masses))
    }

    /// The same mass on every axis of `grid`.
    pub fn uniform(grid: &SpatialGrid, m: f64) -> Result<Self> {
        Self::new(vec![m; grid.ndim()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> f64 {
        self.0[axis]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn check(&self, grid: &SpatialGrid) -> Result<()> {
        if self.0.len() != grid.ndim() {
            return Err(Error::InvalidArgument(format!(
                "{} masses for a {}-axis grid",
                self.0.len(),
                grid.ndim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(SpatialGrid::line(0.0, 1.0, 100).is_err());
        assert!(SpatialGrid::line(0.0, 1.0, 8).is_err());
        assert!(SpatialGrid::line(1.0, 0.0, 64).is_err());
        assert!(SpatialGrid::line(0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn rejects_three_axes_and_cap() {
        let a = Axis::new(0.0, 1.0, 16);
        assert!(SpatialGrid::new(vec![a, a, a]).is_err());
        assert!(SpatialGrid::with_cap(vec![a, a], 255).is_err());
        assert!(SpatialGrid::with_cap(vec![a, a], 256).is_ok());
    }

    #[test]
    fn wavenumbers_fft_order() {
        let a = Axis::new(0.0, 2.0 * PI, 16);
        let k = a.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[1], 1.0);
        assert_eq!(k[7], 7.0);
        assert_eq!(k[8], -8.0);
        assert_eq!(k[15], -1.0);
    }

    #[test]
    fn wrap_is_periodic() {
        let a = Axis::new(-1.0, 1.0, 16);
        assert_eq!(a.wrap(0.5), (0.5, false));
        let (y, w) = a.wrap(1.25);
        assert!(w && (y + 0.75).abs() < 1e-15);
        let (y, w) = a.wrap(-1.5);
        assert!(w && (y - 0.5).abs() < 1e-15);
        assert_eq!(a.nearest_index(0.99), 0);
    }

    #[test]
    fn marginals_integrate_to_total() {
        let g = SpatialGrid::plane(Axis::new(0.0, 1.0, 16), Axis::new(0.0, 2.0, 32)).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| (i % 7) as f64).collect();
        let total = g.integrate(&f);
        for axis in 0..2 {
            let m = g.marginal(&f, axis);
            let s: f64 = m.iter().sum::<f64>() * g.spacing(axis);
            assert!((s - total).abs() < 1e-12 * total);
        }
    }
}
