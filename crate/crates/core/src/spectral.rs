//! FFT-backed transforms and derivatives on a periodic grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::SpatialGrid;

/// Forward/inverse transforms plus wavenumber tables for one grid.
///
/// All methods take `&self`; scratch buffers are allocated per call so one
/// instance can be shared across threads.
#[derive(Clone)]
pub struct Spectral {
    grid: SpatialGrid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    wavenumbers: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid
            .axes()
            .iter()
            .map(|a| planner.plan_fft_forward(a.points))
            .collect();
        let inverse = grid
            .axes()
            .iter()
            .map(|a| planner.plan_fft_inverse(a.points))
            .collect();
        let wavenumbers = grid.axes().iter().map(|a| a.wavenumbers()).collect();
        Spectral {
            grid: grid.clone(),
            forward,
            inverse,
            wavenumbers,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, scaled so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(data.len(), self.grid.len());
        match plans.len() {
            1 => {
                let mut scratch = vec![Complex64::default(); plans[0].get_inplace_scratch_len()];
                plans[0].process_with_scratch(data, &mut scratch);
            }
            _ => {
                let n0 = self.grid.axis(0).points;
                let n1 = self.grid.axis(1).points;
                let len = plans[0]
                    .get_inplace_scratch_len()
                    .max(plans[1].get_inplace_scratch_len());
                let mut scratch = vec![Complex64::default(); len];
                // rows are contiguous along axis 1
                plans[1].process_with_scratch(data, &mut scratch);
                let mut t = vec![Complex64::default(); data.len()];
                transpose(data, &mut t, n0, n1);
                plans[0].process_with_scratch(&mut t, &mut scratch);
                transpose(&t, data, n1, n0);
            }
        }
    }

    /// Spectral derivative along `axis` of a field given in position space.
    pub fn derivative(&self, field: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut hat = field.to_vec();
        self.forward(&mut hat);
        self.derivative_from_hat(&hat, axis)
    }

    /// Derivative along `axis` of a field whose forward transform is `hat`.
    pub fn derivative_from_hat(&self, hat: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut out = hat.to_vec();
        let k = &self.wavenumbers[axis];
        let n = k.len();
        // The Nyquist mode has no well-defined odd derivative; drop it.
        for (idx, z) in out.iter_mut().enumerate() {
            let j = self.grid.unravel(idx)[axis];
            *z = if j == n / 2 {
                Complex64::default()
            } else {
                *z * Complex64::new(0.0, k[j])
            };
        }
        self.inverse(&mut out);
        out
    }

    /// Second derivative along `axis` from a forward transform.
    pub fn second_derivative_from_hat(&self, hat: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut out = hat.to_vec();
        let k = &self.wavenumbers[axis];
        for (idx, z) in out.iter_mut().enumerate() {
            let j = self.grid.unravel(idx)[axis];
            *z *= -k[j] * k[j];
        }
        self.inverse(&mut out);
        out
    }

    /// Divergence of a real vector field (one component per axis).
    pub fn divergence(&self, components: &[Vec<f64>]) -> Vec<f64> {
        let mut div = vec![0.0; self.grid.len()];
        for (axis, c) in components.iter().enumerate() {
            let field: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let d = self.derivative(&field, axis);
            for (o, z) in div.iter_mut().zip(d) {
                *o += z.re;
            }
        }
        div
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::Axis;

    #[test]
    fn round_trip_2d() {
        let g = SpatialGrid::plane(Axis::new(0.0, 1.0, 16), Axis::new(0.0, 1.0, 32)).unwrap();
        let s = Spectral::new(&g);
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut d = orig.clone();
        s.forward(&mut d);
        s.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_sine_2d() {
        let g =
            SpatialGrid::plane(Axis::new(0.0, 2.0 * PI, 32), Axis::new(0.0, 2.0 * PI, 16)).unwrap();
        let s = Spectral::new(&g);
        let f: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                Complex64::new((3.0 * p[0]).sin() * (2.0 * p[1]).cos(), 0.0)
            })
            .collect();
        let dx = s.derivative(&f, 0);
        let dy = s.derivative(&f, 1);
        for i in 0..g.len() {
            let p = g.point(i);
            assert!((dx[i].re - 3.0 * (3.0 * p[0]).cos() * (2.0 * p[1]).cos()).abs() < 1e-12);
            assert!((dy[i].re + 2.0 * (3.0 * p[0]).sin() * (2.0 * p[1]).sin()).abs() < 1e-12);
        }
    }
}
