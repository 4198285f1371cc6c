use num_complex::Complex64;
use proptest::prelude::*;

use bohm_core::equilibrium::{
    h_bar_from_samples, ks_distance, relative_entropy, sample_density, CoarseGraining,
};
use bohm_core::experiments::{CustomParams, PacketSpec, Preset};
use bohm_core::grid::{Axis, MassVector, SpatialGrid};
use bohm_core::io::output::real;
use bohm_core::io::{parse_config, RunConfig};
use bohm_core::potential::PotentialSpec;
use bohm_core::propagator::Propagator;
use bohm_core::wavefunction::{make_gaussian, Units};

fn normalize(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_reals_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_round_trip(
        samples in 1usize..50_000,
        seed in 0u64..(1 << 62),
        half in 5.0f64..40.0,
        pow in 7u32..11,
        center in -3.0f64..3.0,
        width in 0.8f64..2.0,
        boost in -2.0f64..2.0,
        re in -1.0f64..1.0,
        hbar in 0.5f64..2.0,
        absorber in any::<bool>(),
    ) {
        let mut cfg = RunConfig::preset("custom").unwrap();
        let e = &mut cfg.experiment;
        e.samples = samples;
        e.seed = seed;
        e.units.hbar = hbar;
        e.axes = vec![Axis::new(-half, half, 1 << pow)];
        e.check_times = vec![0.0];
        e.preset = Preset::Custom(CustomParams {
            packets: vec![PacketSpec {
                center: vec![center],
                width: vec![width],
                boost: vec![boost],
                amplitude: Complex64::new(re, 0.5),
            }],
        });
        if absorber {
            e.potential = PotentialSpec::free().with(
                bohm_core::potential::PotentialTerm::AbsorbingMask { width: 1.0, strength: 0.5 },
            );
        }
        prop_assume!(cfg.validate().is_ok());
        prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn relative_entropy_is_non_negative(
        rho in prop::collection::vec(0.0f64..1.0, 8),
        p in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        prop_assume!(rho.iter().sum::<f64>() > 0.0);
        let h = relative_entropy(&normalize(&rho), &normalize(&p)).unwrap();
        prop_assert!(h >= -1e-12);
    }

    #[test]
    fn sampled_h_bar_and_ks_are_bounded(seed in 0u64..1000, center in -2.0f64..2.0) {
        let grid = SpatialGrid::line(-10.0, 10.0, 128).unwrap();
        let psi = make_gaussian(&grid, &[center], &[1.0], &[0.0], Units::default()).unwrap();
        let p = psi.density();
        let samples = sample_density(&grid, &p, 500, seed).unwrap();
        prop_assert!(samples.iter().all(|&x| (-10.0..10.0).contains(&x)));
        let d = ks_distance(&grid, &samples, &p);
        prop_assert!((0.0..=1.0).contains(&d));
        let h = h_bar_from_samples(&grid, &samples, &p, CoarseGraining::new(8)).unwrap();
        prop_assert!(h >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn propagation_conserves_norm(
        center in -4.0f64..4.0,
        width in 0.7f64..2.0,
        boost in -3.0f64..3.0,
        omega in 0.0f64..1.5,
    ) {
        let grid = SpatialGrid::line(-20.0, 20.0, 256).unwrap();
        let m = MassVector::uniform(&grid, 1.0).unwrap();
        let mut psi = make_gaussian(&grid, &[center], &[width], &[boost], Units::default()).unwrap();
        let v = PotentialSpec::harmonic(vec![omega]);
        let prop = Propagator::new(&grid, &v, &m, 1.0, 2e-3).unwrap();
        for _ in 0..200 {
            prop.advance(&mut psi).unwrap();
        }
        prop_assert!((psi.norm() - 1.0).abs() < 1e-11);
    }
}
