//! Potential specifications evaluated on a grid.
//!
//! Terms combine additively. The absorbing mask contributes `-i W(x)` with
//! `W >= 0` supported only in sponge layers at the edges of each axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MassVector, SpatialGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialTerm {
    Free,
    /// `sum_a m_a omega_a^2 x_a^2 / 2`, centered at the origin.
    Harmonic {
        omega: Vec<f64>,
    },
    /// Constant `height` inside the box `lower <= x < upper` (per axis).
    Barrier {
        height: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// One real value per grid point.
    Tabulated {
        values: Vec<f64>,
    },
    /// Quadratic ramp `strength * (depth / width)^2` inside sponge layers.
    AbsorbingMask {
        width: f64,
        strength: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub terms: Vec<PotentialTerm>,
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec { terms: vec![] }
    }

    pub fn harmonic(omega: Vec<f64>) -> Self {
        PotentialSpec {
            terms: vec![PotentialTerm::Harmonic { omega }],
        }
    }

    pub fn barrier(height: f64, lower: f64, upper: f64) -> Self {
        PotentialSpec {
            terms: vec![PotentialTerm::Barrier {
                height,
                lower: vec![lower],
                upper: vec![upper],
            }],
        }
    }

    pub fn constant(grid: &SpatialGrid, c: f64) -> Self {
        PotentialSpec {
            terms: vec![PotentialTerm::Tabulated {
                values: vec![c; grid.len()],
            }],
        }
    }

    pub fn with(mut self, term: PotentialTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn has_absorber(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t, PotentialTerm::AbsorbingMask { strength, .. } if *strength > 0.0))
    }

    /// Checks each term against the grid without evaluating it.
    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        let d = grid.ndim();
        for t in &self.terms {
            match t {
                PotentialTerm::Free => {}
                PotentialTerm::Harmonic { omega } => {
                    if omega.len() != d || omega.iter().any(|w| !w.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "harmonic term needs {d} finite frequencies"
                        )));
                    }
                }
                PotentialTerm::Barrier {
                    height,
                    lower,
                    upper,
                } => {
                    if !height.is_finite() || lower.len() != d || upper.len() != d {
                        return Err(Error::InvalidArgument(format!(
                            "barrier needs a finite height and {d} bounds per side"
                        )));
                    }
                    if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                        return Err(Error::InvalidArgument("barrier lower >= upper".into()));
                    }
                }
                PotentialTerm::Tabulated { values } => {
                    if values.len() != grid.len() || values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "tabulated potential needs {} finite values",
                            grid.len()
                        )));
                    }
                }
                PotentialTerm::AbsorbingMask { width, strength } => {
                    let shortest = grid
                        .axes()
                        .iter()
                        .map(|a| a.length())
                        .fold(f64::INFINITY, f64::min);
                    if !(*width > 0.0 && *width < 0.5 * shortest) {
                        return Err(Error::InvalidArgument(format!(
                            "sponge width {width} must lie in (0, L/2)"
                        )));
                    }
                    if !(strength.is_finite() && *strength >= 0.0) {
                        return Err(Error::InvalidArgument(
                            "sponge strength must be non-negative".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Complex potential at every grid point.
    pub fn evaluate(&self, grid: &SpatialGrid, masses: &MassVector) -> Result<Vec<Complex64>> {
        self.validate(grid)?;
        masses.check(grid)?;
        let mut out = vec![Complex64::default(); grid.len()];
        for t in &self.terms {
            match t {
                PotentialTerm::Free => {}
                PotentialTerm::Harmonic { omega } => {
                    for (i, v) in out.iter_mut().enumerate() {
                        let p = grid.point(i);
                        for a in 0..grid.ndim() {
                            v.re += 0.5 * masses.get(a) * omega[a] * omega[a] * p[a] * p[a];
                        }
                    }
                }
                PotentialTerm::Barrier {
                    height,
                    lower,
                    upper,
                } => {
                    for (i, v) in out.iter_mut().enumerate() {
                        let p = grid.point(i);
                        if (0..grid.ndim()).all(|a| p[a] >= lower[a] && p[a] < upper[a]) {
                            v.re += height;
                        }
                    }
                }
                PotentialTerm::Tabulated { values } => {
                    for (v, x) in out.iter_mut().zip(values) {
                        v.re += x;
                    }
                }
                PotentialTerm::AbsorbingMask { width, strength } => {
                    for (i, v) in out.iter_mut().enumerate() {
                        let p = grid.point(i);
                        let mut w = 0.0;
                        for (a, axis) in grid.axes().iter().enumerate() {
                            let depth = (axis.min + width - p[a])
                                .max(p[a] - (axis.max - width))
                                .max(0.0);
                            w += strength * (depth / width).powi(2);
                        }
                        v.im -= w;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Real part only, as used by the Hamilton-Jacobi force and the energy.
    pub fn evaluate_real(&self, grid: &SpatialGrid, masses: &MassVector) -> Result<Vec<f64>> {
        Ok(self
            .evaluate(grid, masses)?
            .into_iter()
            .map(|z| z.re)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    #[test]
    fn additive_terms() {
        let g = SpatialGrid::line(-4.0, 4.0, 64).unwrap();
        let m = MassVector::uniform(&g, 2.0).unwrap();
        let spec = PotentialSpec::harmonic(vec![1.0])
            .with(PotentialTerm::Barrier {
                height: 3.0,
                lower: vec![0.0],
                upper: vec![1.0],
            })
            .with(PotentialTerm::AbsorbingMask {
                width: 1.0,
                strength: 5.0,
            });
        let v = spec.evaluate(&g, &m).unwrap();
        let i0 = g.axis(0).nearest_index(0.5);
        assert!((v[i0].re - (0.25 + 3.0)).abs() < 1e-12);
        assert_eq!(v[i0].im, 0.0);
        // sponge: imaginary part non-positive and zero outside the layers
        for (i, z) in v.iter().enumerate() {
            let x = g.point(i)[0];
            assert!(z.im <= 0.0);
            if x > -3.0 && x < 3.0 {
                assert_eq!(z.im, 0.0);
            }
        }
        assert!((v[0].im + 5.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let g = SpatialGrid::plane(Axis::new(0.0, 1.0, 16), Axis::new(0.0, 1.0, 16)).unwrap();
        assert!(PotentialSpec::harmonic(vec![1.0]).validate(&g).is_err());
        assert!(PotentialSpec::barrier(1.0, 0.0, 1.0).validate(&g).is_err());
        let s = PotentialSpec::free().with(PotentialTerm::AbsorbingMask {
            width: 0.6,
            strength: 1.0,
        });
        assert!(s.validate(&g).is_err());
    }
}
