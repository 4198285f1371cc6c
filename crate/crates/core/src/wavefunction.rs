//! Complex amplitudes on a grid, with constructors for the standard packets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, SpatialGrid};

/// Tolerance on the discrete norm of states flagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Physical constants carried by a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub hbar: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { hbar: 1.0 }
    }
}

impl Units {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(Units { hbar })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
    time: f64,
    units: Units,
    normalized: bool,
}

impl WaveFunction {
    /// Builds a state from raw amplitudes and normalizes it.
    pub fn from_amplitudes(
        grid: SpatialGrid,
        amplitudes: Vec<Complex64>,
        units: Units,
    ) -> Result<Self> {
        let mut psi = Self::unnormalized(grid, amplitudes, units)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Builds a state without touching its norm.
    pub fn unnormalized(
        grid: SpatialGrid,
        amplitudes: Vec<Complex64>,
        units: Units,
    ) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for {} grid points",
                amplitudes.len(),
                grid.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFiniteAmplitude { time: 0.0 });
        }
        Ok(WaveFunction {
            grid,
            amplitudes,
            time: 0.0,
            units,
            normalized: false,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn hbar(&self) -> f64 {
        self.units.hbar
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn mark_unnormalized(&mut self) {
        self.normalized = false;
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n >= 1e-12) || !n.is_finite() {
            return Err(Error::ZeroVector(n));
        }
        let s = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|z| *z *= s);
        self.normalized = true;
        Ok(())
    }

    /// `sqrt(sum |psi|^2 dV)`.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `|psi|^2` at every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn same_grid(&self, other: &WaveFunction) -> bool {
        self.grid == other.grid
    }

    /// Multiplies by a complex constant; the normalization flag is dropped
    /// unless `|c| == 1`.
    pub fn scaled(&self, c: Complex64) -> WaveFunction {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|z| *z *= c);
        out.normalized = self.normalized && (c.norm() - 1.0).abs() < 1e-15;
        out
    }

    /// Tensor product of two single-axis states onto a two-axis grid.
    pub fn outer(a: &WaveFunction, b: &WaveFunction) -> Result<WaveFunction> {
        if a.grid.ndim() != 1 || b.grid.ndim() != 1 {
            return Err(Error::InvalidArgument(
                "outer product needs two single-axis states".into(),
            ));
        }
        if a.units != b.units {
            return Err(Error::InvalidArgument(
                "factors carry different units".into(),
            ));
        }
        let grid = SpatialGrid::plane(*a.grid.axis(0), *b.grid.axis(0))?;
        let mut amps = Vec::with_capacity(grid.len());
        for za in &a.amplitudes {
            for zb in &b.amplitudes {
                amps.push(za * zb);
            }
        }
        let mut psi = WaveFunction::unnormalized(grid, amps, a.units)?;
        psi.normalized = a.normalized && b.normalized;
        psi.time = a.time;
        Ok(psi)
    }
}

/// `<psi1|psi2>` as a Riemann sum with volume element `prod dx`.
pub fn inner_product(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<Complex64> {
    if !psi1.same_grid(psi2) {
        return Err(Error::GridMismatch);
    }
    let s: Complex64 = psi1
        .amplitudes
        .iter()
        .zip(&psi2.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * psi1.grid.cell_volume())
}

pub fn norm(psi: &WaveFunction) -> f64 {
    psi.norm()
}

/// Normalized `c1 psi1 + c2 psi2`.
pub fn superpose(
    psi1: &WaveFunction,
    psi2: &WaveFunction,
    c1: Complex64,
    c2: Complex64,
) -> Result<WaveFunction> {
    if !psi1.same_grid(psi2) || psi1.time != psi2.time || psi1.units != psi2.units {
        return Err(Error::GridMismatch);
    }
    let amps = psi1
        .amplitudes
        .iter()
        .zip(&psi2.amplitudes)
        .map(|(a, b)| c1 * a + c2 * b)
        .collect();
    let mut out = WaveFunction::unnormalized(psi1.grid.clone(), amps, psi1.units)?;
    out.time = psi1.time;
    out.normalize()?;
    Ok(out)
}

/// Normalized Gaussian packet `prod_a exp(-(x_a - c_a)^2 / (4 s_a^2) + i k_a x_a)`.
///
/// `width` is the standard deviation of `|psi|^2` along each axis.
pub fn make_gaussian(
    grid: &SpatialGrid,
    center: &[f64],
    width: &[f64],
    wavenumber: &[f64],
    units: Units,
) -> Result<WaveFunction> {
    let d = grid.ndim();
    if center.len() != d || width.len() != d || wavenumber.len() != d {
        return Err(Error::InvalidArgument(format!(
            "packet parameters must have {d} entries per field"
        )));
    }
    for (a, axis) in grid.axes().iter().enumerate() {
        check_packet_axis(a, axis, center[a], width[a])?;
    }
    let factors: Vec<Vec<Complex64>> = grid
        .axes()
        .iter()
        .enumerate()
        .map(|(a, axis)| {
            (0..axis.points)
                .map(|j| {
                    let x = axis.coord(j);
                    let u = (x - center[a]) / width[a];
                    Complex64::from_polar((-0.25 * u * u).exp(), wavenumber[a] * x)
                })
                .collect()
        })
        .collect();
    let amps = tensor(grid, &factors);
    WaveFunction::from_amplitudes(grid.clone(), amps, units)
}

fn check_packet_axis(a: usize, axis: &Axis, center: f64, width: f64) -> Result<()> {
    if !(center >= axis.min && center < axis.max) {
        return Err(Error::InvalidArgument(format!(
            "center {center} outside axis {a} [{}, {})",
            axis.min, axis.max
        )));
    }
    let min_width = 3.0 * axis.spacing();
    if !(width >= min_width) {
        return Err(Error::UnresolvablePacket {
            axis: a,
            width,
            min: min_width,
        });
    }
    let tail = |x: f64| {
        let u = (x - center) / width;
        (-0.25 * u * u).exp()
    };
    let ratio = tail(axis.min).max(tail(axis.max));
    if ratio >= 1e-6 {
        return Err(Error::BoundaryLeak { axis: a, ratio });
    }
    Ok(())
}

fn tensor(grid: &SpatialGrid, factors: &[Vec<Complex64>]) -> Vec<Complex64> {
    match factors.len() {
        1 => factors[0].clone(),
        _ => {
            let mut out = Vec::with_capacity(grid.len());
            for a in &factors[0] {
                for b in &factors[1] {
                    out.push(a * b);
                }
            }
            out
        }
    }
}

/// Plane wave `exp(i k . x)` normalized over the grid volume.
///
/// Each `k_a` must lie on the reciprocal lattice `2 pi m / L_a`.
pub fn plane_wave(grid: &SpatialGrid, wavenumber: &[f64], units: Units) -> Result<WaveFunction> {
    if wavenumber.len() != grid.ndim() {
        return Err(Error::InvalidArgument("one wavenumber per axis".into()));
    }
    for (a, axis) in grid.axes().iter().enumerate() {
        let m = wavenumber[a] * axis.length() / (2.0 * std::f64::consts::PI);
        if (m - m.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "wavenumber {} is not on the reciprocal lattice of axis {a}",
                wavenumber[a]
            )));
        }
    }
    let factors: Vec<Vec<Complex64>> = grid
        .axes()
        .iter()
        .enumerate()
        .map(|(a, axis)| {
            (0..axis.points)
                .map(|j| Complex64::from_polar(1.0, wavenumber[a] * axis.coord(j)))
                .collect()
        })
        .collect();
    WaveFunction::from_amplitudes(grid.clone(), tensor(grid, &factors), units)
}

/// Unnormalized Hermite function values `h_n(xi)`, with
/// `int h_n^2 dxi = 1`.
pub fn hermite_function(n: usize, xi: f64) -> f64 {
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * xi * h0;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Real harmonic-oscillator eigenstate `n` on a single-axis grid, centered at
/// the origin.
pub fn harmonic_eigenstate(
    grid: &SpatialGrid,
    level: usize,
    omega: f64,
    mass: f64,
    units: Units,
) -> Result<WaveFunction> {
    if grid.ndim() != 1 {
        return Err(Error::InvalidArgument(
            "harmonic eigenstates are built on single-axis grids".into(),
        ));
    }
    if !(omega > 0.0 && mass > 0.0) {
        return Err(Error::InvalidArgument(
            "omega and mass must be positive".into(),
        ));
    }
    let alpha = (mass * omega / units.hbar).sqrt();
    let axis = grid.axis(0);
    let amps = (0..axis.points)
        .map(|j| Complex64::new(hermite_function(level, alpha * axis.coord(j)), 0.0))
        .collect();
    WaveFunction::from_amplitudes(grid.clone(), amps, units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line() -> SpatialGrid {
        SpatialGrid::line(-20.0, 20.0, 512).unwrap()
    }

    #[test]
    fn gaussian_is_normalized_and_peaked() {
        let g = line();
        let psi = make_gaussian(&g, &[0.0], &[1.0], &[0.0], Units::default()).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-8);
        let p = psi.density();
        let imax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(imax, g.axis(0).nearest_index(0.0));
        // k = 0 gives a real packet
        assert!(psi.amplitudes().iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn gaussian_preconditions() {
        let g = line();
        let dx = g.spacing(0);
        assert!(matches!(
            make_gaussian(&g, &[0.0], &[2.0 * dx], &[0.0], Units::default()),
            Err(Error::UnresolvablePacket { .. })
        ));
        assert!(matches!(
            make_gaussian(&g, &[15.0], &[1.0], &[0.0], Units::default()),
            Err(Error::BoundaryLeak { .. })
        ));
        assert!(make_gaussian(&g, &[25.0], &[1.0], &[0.0], Units::default()).is_err());
    }

    #[test]
    fn superpose_identity_and_zero() {
        let g = line();
        let a = make_gaussian(&g, &[-3.0], &[1.0], &[1.0], Units::default()).unwrap();
        let b = make_gaussian(&g, &[3.0], &[1.0], &[0.0], Units::default()).unwrap();
        let s = superpose(&a, &b, Complex64::new(1.0, 0.0), Complex64::default()).unwrap();
        for (x, y) in s.amplitudes().iter().zip(a.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
        assert!(matches!(
            superpose(&a, &a, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)),
            Err(Error::ZeroVector(_))
        ));
        let c = make_gaussian(
            &SpatialGrid::line(-20.0, 20.0, 256).unwrap(),
            &[0.0],
            &[1.0],
            &[0.0],
            Units::default(),
        )
        .unwrap();
        assert!(matches!(inner_product(&a, &c), Err(Error::GridMismatch)));
    }

    #[test]
    fn orthogonal_halves_carry_half_weight() {
        let g = line();
        let a = make_gaussian(&g, &[-8.0], &[1.0], &[0.0], Units::default()).unwrap();
        let b = make_gaussian(&g, &[8.0], &[1.0], &[0.0], Units::default()).unwrap();
        let s = superpose(&a, &b, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let p = s.density();
        let dx = g.spacing(0);
        let left: f64 = p[..256].iter().sum::<f64>() * dx;
        assert_relative_eq!(left, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_superposition_normalization_factor() {
        // Quadrature oracle for the overlap of two equal real Gaussians.
        let g = line();
        let sep = 2.0 * (2.0 * (1.0f64 / 0.2).ln()).sqrt(); // exp(-sep^2/8) = 0.2
        let a = make_gaussian(&g, &[-sep / 2.0], &[1.0], &[0.0], Units::default()).unwrap();
        let b = make_gaussian(&g, &[sep / 2.0], &[1.0], &[0.0], Units::default()).unwrap();
        let overlap = simpson_overlap(&a, &b);
        assert_relative_eq!(overlap, 0.2, epsilon = 1e-9);
        let s = superpose(&a, &b, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let i = g.axis(0).nearest_index(0.0);
        let expected = (a.amplitudes()[i] + b.amplitudes()[i]) / (2.0 + 2.0 * 0.2f64).sqrt();
        assert!((s.amplitudes()[i] - expected).norm() < 1e-9);
    }

    fn simpson_overlap(a: &WaveFunction, b: &WaveFunction) -> f64 {
        // composite Simpson on the grid points, independent of inner_product
        let f: Vec<f64> = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x.conj() * y).re)
            .collect();
        let h = a.grid().spacing(0);
        let n = f.len() - 1;
        let mut s = f[0] + f[n - 1];
        for (j, v) in f.iter().enumerate().take(n - 1).skip(1) {
            s += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_overlap_at_separation_two() {
        let g = line();
        let a = make_gaussian(&g, &[-1.0], &[1.0], &[0.0], Units::default()).unwrap();
        let b = make_gaussian(&g, &[1.0], &[1.0], &[0.0], Units::default()).unwrap();
        let ov = inner_product(&a, &b).unwrap();
        assert!((ov.re - (-0.5f64).exp()).abs() < 1e-4);
        assert!(ov.im.abs() < 1e-14);
    }

    #[test]
    fn hermitian_symmetry() {
        let g = line();
        let a = make_gaussian(&g, &[-1.0], &[1.0], &[0.7], Units::default()).unwrap();
        let b = make_gaussian(&g, &[1.5], &[1.2], &[-0.3], Units::default()).unwrap();
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-15);
        assert!((inner_product(&a, &a).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_eigenstates_are_orthonormal() {
        let g = line();
        let s: Vec<_> = (0..3)
            .map(|n| harmonic_eigenstate(&g, n, 1.0, 1.0, Units::default()).unwrap())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let ip = inner_product(&s[i], &s[j]).unwrap().re;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "{i} {j} {ip}");
            }
        }
    }

    #[test]
    fn plane_wave_requires_lattice_wavenumber() {
        let g = SpatialGrid::line(0.0, 8.0 * std::f64::consts::PI, 64).unwrap();
        assert!(plane_wave(&g, &[1.0], Units::default()).is_ok());
        assert!(plane_wave(&g, &[1.1], Units::default()).is_err());
    }
}
