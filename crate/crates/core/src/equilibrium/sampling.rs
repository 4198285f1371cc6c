//! Rejection sampling from a density tabulated on the grid.
//!
//! The density is read as piecewise constant over cells centred on the grid
//! points. Sample `i` draws from its own ChaCha stream, so results do not
//! depend on how the work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

const MAX_ATTEMPTS: usize = 1 << 24;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `n` positions (flat, `ndim` per sample) distributed as `p`.
pub fn sample_density(grid: &SpatialGrid, p: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    if p.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "density has {} values for a grid of {}",
            p.len(),
            grid.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument(
            "density must be finite and non-negative".into(),
        ));
    }
    let pmax = p.iter().copied().fold(0.0, f64::max);
    if !(pmax > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let ndim = grid.ndim();
    let len = grid.len();
    let samples: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            for _ in 0..MAX_ATTEMPTS {
                let idx = rng.random_range(0..len);
                let accept: f64 = rng.random();
                let offsets: [f64; 2] = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
                if accept * pmax < p[idx] {
                    let c = grid.point(idx);
                    let mut q: Vec<f64> = (0..ndim)
                        .map(|a| c[a] + offsets[a] * grid.spacing(a))
                        .collect();
                    grid.wrap(&mut q);
                    return Ok(q);
                }
            }
            Err(Error::DegenerateDensity)
        })
        .collect::<Result<_>>()?;
    Ok(samples.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_support() {
        let g = SpatialGrid::line(0.0, 1.0, 64).unwrap();
        let mut p = vec![0.0; 64];
        p[10] = 64.0;
        let s = sample_density(&g, &p, 500, 3).unwrap();
        let dx = g.spacing(0);
        let c = g.axis(0).coord(10);
        assert!(s.iter().all(|x| (x - c).abs() <= 0.5 * dx));
    }

    #[test]
    fn zero_density_is_degenerate() {
        let g = SpatialGrid::line(0.0, 1.0, 16).unwrap();
        assert!(matches!(
            sample_density(&g, &[0.0; 16], 10, 1),
            Err(Error::DegenerateDensity)
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = SpatialGrid::line(-4.0, 4.0, 64).unwrap();
        let p: Vec<f64> = (0..64)
            .map(|j| (-g.axis(0).coord(j).powi(2)).exp())
            .collect();
        let a = sample_density(&g, &p, 1000, 42).unwrap();
        let b = sample_density(&g, &p, 1000, 42).unwrap();
        let c = sample_density(&g, &p, 1000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
