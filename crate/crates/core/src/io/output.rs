//! CSV renderers. Every real is written with 17 significant digits so that
//! values round-trip exactly.

use std::fmt::Write;

use crate::equilibrium::HSeries;
use crate::error::Result;
use crate::experiments::Histogram;
use crate::grid::MassVector;
use crate::pilot_wave::polar_fields;
use crate::trajectories::TrajectoryEnsemble;
use crate::wavefunction::WaveFunction;

const AXIS_NAMES: [&str; 2] = ["x", "y"];

/// `x` in scientific notation with 17 significant digits, e.g.
/// `-1.2500000000000000e-03`.
pub fn real(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// One row per (trajectory, recorded time) for the first `limit`
/// trajectories (`0` means all).
pub fn trajectory_csv(ensemble: &TrajectoryEnsemble, limit: usize) -> String {
    let ndim = ensemble.ndim();
    let mut out = String::from("traj_id,t");
    for name in &AXIS_NAMES[..ndim] {
        write!(out, ",{name}").unwrap();
    }
    out.push_str(",flags\n");
    let n = if limit == 0 {
        ensemble.len()
    } else {
        limit.min(ensemble.len())
    };
    for (id, traj) in ensemble.trajectories[..n].iter().enumerate() {
        for k in 0..traj.len() {
            write!(out, "{id},{}", real(traj.times[k])).unwrap();
            for &q in traj.position(k) {
                write!(out, ",{}", real(q)).unwrap();
            }
            writeln!(out, ",{}", traj.flags[k].bits()).unwrap();
        }
    }
    out
}

/// Field snapshot on every `stride`-th grid point per axis.
pub fn field_csv(psi: &WaveFunction, masses: &MassVector, stride: usize) -> Result<String> {
    let grid = psi.grid();
    let ndim = grid.ndim();
    let fields = polar_fields(psi, masses)?;
    let mut out = String::new();
    for name in &AXIS_NAMES[..ndim] {
        write!(out, "{name},").unwrap();
    }
    out.push_str("re_psi,im_psi,p");
    for name in &AXIS_NAMES[..ndim] {
        write!(out, ",v_{name}").unwrap();
    }
    out.push_str(",q,node_mask\n");
    let amps = psi.amplitudes();
    let stride = stride.max(1);
    for idx in 0..grid.len() {
        let ij = grid.unravel(idx);
        if ij[..ndim].iter().any(|&j| j % stride != 0) {
            continue;
        }
        let p = grid.point(idx);
        for &x in &p[..ndim] {
            write!(out, "{},", real(x)).unwrap();
        }
        write!(
            out,
            "{},{},{}",
            real(amps[idx].re),
            real(amps[idx].im),
            real(fields.density[idx])
        )
        .unwrap();
        for v in &fields.velocity {
            write!(out, ",{}", real(v[idx])).unwrap();
        }
        writeln!(
            out,
            ",{},{}",
            real(fields.quantum_potential[idx]),
            u8::from(fields.node_mask[idx])
        )
        .unwrap();
    }
    Ok(out)
}

pub fn histogram_csv(histograms: &[Histogram]) -> String {
    let mut out = String::from("name,t,axis,bin_center,density,reference\n");
    for h in histograms {
        for ((c, d), r) in h.centers.iter().zip(&h.density).zip(&h.reference) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                h.name,
                real(h.time),
                AXIS_NAMES[h.axis],
                real(*c),
                real(*d),
                real(*r)
            )
            .unwrap();
        }
    }
    out
}

pub fn h_series_csv(series: &HSeries) -> String {
    let mut out = String::from("t,h_bar,floor\n");
    for (t, h) in series.times.iter().zip(&series.values) {
        writeln!(out, "{},{},{}", real(*t), real(*h), real(series.floor)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::trajectories::{SamplingMode, StepFlags, Trajectory};
    use crate::wavefunction::{make_gaussian, Units};

    #[test]
    fn reals_round_trip() {
        for x in [
            0.0,
            -0.0,
            1.0,
            -1.25e-3,
            std::f64::consts::PI,
            1e300,
            5e-324,
            0.1 + 0.2,
        ] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(real(-1.25e-3), "-1.2500000000000000e-03");
        assert_eq!(real(123.0), "1.2300000000000000e+02");
    }

    #[test]
    fn trajectory_rows() {
        let mut t = Trajectory::new(1);
        t.push(0.0, &[1.0], StepFlags::default());
        t.push(0.5, &[2.0], StepFlags::NODE_PROXIMITY);
        let ens = TrajectoryEnsemble {
            trajectories: vec![t.clone(), t],
            seed: 0,
            sampling_mode: SamplingMode::QuantumEquilibrium,
        };
        let csv = trajectory_csv(&ens, 1);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "traj_id,t,x,flags");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("0,5.0000000000000000e-01,2.0") && lines[2].ends_with(",1"));
    }

    #[test]
    fn field_rows_with_stride() {
        let grid = SpatialGrid::line(-10.0, 10.0, 64).unwrap();
        let psi = make_gaussian(&grid, &[0.0], &[1.0], &[1.0], Units::default()).unwrap();
        let masses = MassVector::uniform(&grid, 1.0).unwrap();
        let csv = field_csv(&psi, &masses, 4).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x,re_psi,im_psi,p,v_x,q,node_mask");
        assert_eq!(lines.len(), 1 + 16);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 7));
    }
}
