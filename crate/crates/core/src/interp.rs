//! Separable Catmull-Rom interpolation of grid fields with periodic wrap.

use crate::grid::{Axis, SpatialGrid};

#[inline]
fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[inline]
fn dweights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ]
}

/// Stencil indices and fractional offset along one axis.
#[inline]
fn stencil(axis: &Axis, x: f64) -> ([usize; 4], f64) {
    let s = (x - axis.min) / axis.spacing();
    let i = s.floor();
    let t = s - i;
    let n = axis.points as i64;
    let i = i as i64;
    let idx = [
        (i - 1).rem_euclid(n) as usize,
        i.rem_euclid(n) as usize,
        (i + 1).rem_euclid(n) as usize,
        (i + 2).rem_euclid(n) as usize,
    ];
    (idx, t)
}

/// Value of the interpolant of `field` at `q`.
pub fn value(grid: &SpatialGrid, field: &[f64], q: &[f64]) -> f64 {
    match grid.ndim() {
        1 => {
            let (ix, tx) = stencil(grid.axis(0), q[0]);
            let w = weights(tx);
            (0..4).map(|a| w[a] * field[ix[a]]).sum()
        }
        _ => {
            let (ix, tx) = stencil(grid.axis(0), q[0]);
            let (iy, ty) = stencil(grid.axis(1), q[1]);
            let wx = weights(tx);
            let wy = weights(ty);
            let n1 = grid.axis(1).points;
            let mut acc = 0.0;
            for a in 0..4 {
                let row = ix[a] * n1;
                let r: f64 = (0..4).map(|b| wy[b] * field[row + iy[b]]).sum();
                acc += wx[a] * r;
            }
            acc
        }
    }
}

/// Gradient of the interpolant of `field` at `q`.
pub fn gradient(grid: &SpatialGrid, field: &[f64], q: &[f64]) -> [f64; 2] {
    match grid.ndim() {
        1 => {
            let axis = grid.axis(0);
            let (ix, tx) = stencil(axis, q[0]);
            let w = dweights(tx);
            let d: f64 = (0..4).map(|a| w[a] * field[ix[a]]).sum();
            [d / axis.spacing(), 0.0]
        }
        _ => {
            let (ix, tx) = stencil(grid.axis(0), q[0]);
            let (iy, ty) = stencil(grid.axis(1), q[1]);
            let (wx, dx) = (weights(tx), dweights(tx));
            let (wy, dy) = (weights(ty), dweights(ty));
            let n1 = grid.axis(1).points;
            let mut gx = 0.0;
            let mut gy = 0.0;
            for a in 0..4 {
                let row = ix[a] * n1;
                let mut r = 0.0;
                let mut rd = 0.0;
                for b in 0..4 {
                    let f = field[row + iy[b]];
                    r += wy[b] * f;
                    rd += dy[b] * f;
                }
                gx += dx[a] * r;
                gy += wx[a] * rd;
            }
            [gx / grid.spacing(0), gy / grid.spacing(1)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_quadratics() {
        let g = SpatialGrid::line(-4.0, 4.0, 64).unwrap();
        let f: Vec<f64> = (0..64)
            .map(|j| {
                let x = g.axis(0).coord(j);
                1.0 + 2.0 * x - 0.5 * x * x
            })
            .collect();
        for j in 4..60 {
            let x = g.axis(0).coord(j);
            assert!((value(&g, &f, &[x]) - f[j]).abs() < 1e-12);
        }
        for &x in &[-1.3, 0.01, 2.77] {
            assert!((value(&g, &f, &[x]) - (1.0 + 2.0 * x - 0.5 * x * x)).abs() < 1e-12);
            assert!((gradient(&g, &f, &[x])[0] - (2.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_in_two_axes() {
        use crate::grid::Axis;
        let g = SpatialGrid::plane(Axis::new(0.0, 4.0, 32), Axis::new(-2.0, 2.0, 16)).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                p[0] * p[1] + 3.0 * p[1]
            })
            .collect();
        let q = [1.37, 0.42];
        assert!((value(&g, &f, &q) - (q[0] * q[1] + 3.0 * q[1])).abs() < 1e-12);
        let gr = gradient(&g, &f, &q);
        assert!((gr[0] - q[1]).abs() < 1e-12);
        assert!((gr[1] - (q[0] + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn wraps_periodically() {
        let g = SpatialGrid::line(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let f: Vec<f64> = (0..64).map(|j| g.axis(0).coord(j).sin()).collect();
        let a = value(&g, &f, &[0.01]);
        let b = value(&g, &f, &[2.0 * std::f64::consts::PI - 0.01]);
        assert!((a + b).abs() < 1e-4);
    }
}
