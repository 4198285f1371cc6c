//! Acceptance criteria, one test per criterion. Each prints a single
//! PASS/FAIL line. Criteria run one at a time so that wall-clock budgets
//! are measured without contention.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use num_complex::Complex64;

use bohm_core::equilibrium::{
    equivariance_report, ks_critical_99, relative_entropy, sample_density, InitialDensity,
};
use bohm_core::experiments::{
    rank_violations, run_experiment, ExperimentConfig, PacketSpec, Preset, PRESET_NAMES,
};
use bohm_core::grid::{MassVector, SpatialGrid};
use bohm_core::io::{execute, RunOptions};
use bohm_core::pilot_wave::quantum_newton_residual;
use bohm_core::potential::PotentialSpec;
use bohm_core::propagator::{evolve, EvolutionPlan, Propagator};
use bohm_core::trajectories::{integrate, InitialEnsemble, SamplingMode};
use bohm_core::wavefunction::{make_gaussian, plane_wave, Units, WaveFunction};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line (bypassing the harness capture) and asserts.
fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] criterion {id:2} {name}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed < Duration::from_secs(secs)
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::preset_defaults(name).unwrap()
}

fn line(points: usize) -> SpatialGrid {
    SpatialGrid::line(-20.0, 20.0, points).unwrap()
}

fn std_dev(grid: &SpatialGrid, p: &[f64]) -> f64 {
    let dx = grid.spacing(0);
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, &w) in p.iter().enumerate() {
        let x = grid.point(i)[0];
        m1 += x * w * dx;
        m2 += x * x * w * dx;
    }
    (m2 - m1 * m1).sqrt()
}

/// Distance to `exact` minimized over a global phase.
fn phase_free_distance(psi: &WaveFunction, exact: &[Complex64], dx: f64) -> f64 {
    let overlap: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(exact)
        .map(|(a, b)| b.conj() * a)
        .sum();
    let rot = Complex64::from_polar(1.0, overlap.arg());
    let sq: f64 = psi
        .amplitudes()
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - rot * b).norm_sqr())
        .sum();
    (sq * dx).sqrt()
}

#[test]
fn c01_unitarity() {
    let _g = gate();
    let start = Instant::now();
    let grid = line(512);
    let m = MassVector::uniform(&grid, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for potential in [PotentialSpec::free(), PotentialSpec::harmonic(vec![0.5])] {
        let mut psi = make_gaussian(&grid, &[-2.0], &[1.0], &[1.5], Units::default()).unwrap();
        let prop = Propagator::new(&grid, &potential, &m, 1.0, 1e-3).unwrap();
        for _ in 0..10_000 {
            prop.advance(&mut psi).unwrap();
        }
        worst = worst.max((psi.norm() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "unitarity",
        worst < 1e-9 && within(elapsed, 5),
        format!("max |dnorm| = {worst:.2e} (< 1e-9) over 1e4 steps, {elapsed:.2?} (< 5 s)"),
    );
}

#[test]
fn c02_propagator_accuracy() {
    let _g = gate();
    let start = Instant::now();
    let grid = line(512);
    let m = MassVector::uniform(&grid, 1.0).unwrap();

    let mut psi = make_gaussian(&grid, &[0.0], &[1.0], &[0.0], Units::default()).unwrap();
    let prop = Propagator::new(&grid, &PotentialSpec::free(), &m, 1.0, 1e-3).unwrap();
    for _ in 0..2000 {
        prop.advance(&mut psi).unwrap();
    }
    let width = std_dev(&grid, &psi.density());
    let want = (1.0f64 + 1.0).sqrt();
    let width_err = (width - want).abs() / want;

    // Coherent state of the unit oscillator: a ground-width packet whose
    // centre follows x0 cos t with momentum -x0 sin t.
    let x0 = 3.0;
    let t_end: f64 = 2.0;
    let exact: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i)[0];
            let xc = x0 * t_end.cos();
            let pc = -x0 * t_end.sin();
            Complex64::from_polar(
                std::f64::consts::PI.powf(-0.25) * (-(x - xc).powi(2) / 2.0).exp(),
                pc * x,
            )
        })
        .collect();
    let harmonic = PotentialSpec::harmonic(vec![1.0]);
    let mut errors = Vec::new();
    for k in 0..4 {
        let steps = 1000usize << k;
        let dt = t_end / steps as f64;
        let mut psi = make_gaussian(
            &grid,
            &[x0],
            &[std::f64::consts::FRAC_1_SQRT_2],
            &[0.0],
            Units::default(),
        )
        .unwrap();
        let prop = Propagator::new(&grid, &harmonic, &m, 1.0, dt).unwrap();
        for _ in 0..steps {
            prop.advance(&mut psi).unwrap();
        }
        errors.push(phase_free_distance(&psi, &exact, grid.spacing(0)));
    }
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let orders_ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.2);
    let elapsed = start.elapsed();
    verdict(
        2,
        "propagator accuracy",
        width_err < 0.01 && orders_ok && within(elapsed, 30),
        format!(
            "width(t=2) = {width:.6} vs {want:.6} (rel {width_err:.1e} < 1%), orders {:?} (2.0 +- 0.2), {elapsed:.2?} (< 30 s)",
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn c03_guidance() {
    let _g = gate();
    let start = Instant::now();
    let report = run_experiment(&preset("stationary")).unwrap();
    let rest = report.metric("max_displacement").unwrap();

    let g = SpatialGrid::line(0.0, 8.0 * std::f64::consts::PI, 256).unwrap();
    let psi = plane_wave(&g, &[1.0], Units::default()).unwrap();
    let m = MassVector::uniform(&g, 1.0).unwrap();
    let plan = EvolutionPlan::new(5e-3, 1000, PotentialSpec::free(), m.clone())
        .with_stride(10)
        .with_half_steps(true);
    let tl = evolve(&psi, &plan).unwrap();
    let starts: Vec<f64> = (0..50).map(|i| 0.5 * i as f64).collect();
    let ens = integrate(&tl, &InitialEnsemble::explicit(starts, 1), &m, 1).unwrap();
    let mut uniform: f64 = 0.0;
    for tr in &ens.trajectories {
        let x = tr.unwrapped(&g, 0);
        for (t, xi) in tr.times.iter().zip(&x) {
            uniform = uniform.max((xi - x[0] - t).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        "guidance",
        rest < 1e-6 && uniform < 1e-6 && within(elapsed, 10),
        format!(
            "eigenstate max displacement {rest:.2e} (< 1e-6), plane-wave deviation {uniform:.2e} (< 1e-6), {elapsed:.2?} (< 10 s)"
        ),
    );
}

#[test]
fn c04_equivariance() {
    let _g = gate();
    let start = Instant::now();
    let cfg = preset("custom");
    let report = run_experiment(&cfg).unwrap();
    let n = cfg.samples;
    let limit = 0.0255f64;
    let equilibrium_ok = report.ks.len() == 3 && report.ks.iter().all(|k| k.distance < limit);

    // Same state and times, started from a packet twice as wide.
    let grid = cfg.grid().unwrap();
    let m = cfg.mass_vector().unwrap();
    let psi = make_gaussian(&grid, &[0.0], &[1.0], &[0.0], Units::default()).unwrap();
    let wide = make_gaussian(&grid, &[0.0], &[2.0], &[0.0], Units::default()).unwrap();
    let init = InitialEnsemble {
        positions: sample_density(&grid, &wide.density(), n, cfg.seed).unwrap(),
        ndim: 1,
        seed: cfg.seed,
        mode: SamplingMode::CustomDensity,
    };
    let plan = EvolutionPlan::new(
        cfg.evolution.dt,
        cfg.evolution.steps,
        PotentialSpec::free(),
        m.clone(),
    )
    .with_stride(cfg.evolution.snapshot_stride)
    .with_half_steps(true);
    let tl = evolve(&psi, &plan).unwrap();
    let ens = integrate(&tl, &init, &m, 1).unwrap();
    let control = equivariance_report(&ens, &tl, &cfg.check_times).unwrap();
    let control_fails = control.checks.iter().all(|k| k.distance >= limit);
    let elapsed = start.elapsed();
    let fmt = |d: Vec<f64>| {
        d.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    verdict(
        4,
        "equivariance",
        equilibrium_ok && control_fails && within(elapsed, 120),
        format!(
            "KS at t=0,1,2: [{}] (< {limit}; 1.63/sqrt(n) = {:.4}), control [{}] (>= {limit}), {elapsed:.2?} (< 2 min)",
            fmt(report.ks.iter().map(|k| k.distance).collect()),
            ks_critical_99(n),
            fmt(control.checks.iter().map(|k| k.distance).collect()),
        ),
    );
}

fn pointer_with(c1: f64, empty_wave: bool) -> ExperimentConfig {
    let mut cfg = preset("pointer_measurement");
    if let Preset::PointerMeasurement(p) = &mut cfg.preset {
        p.c1 = Complex64::new(c1, 0.0);
        p.c2 = Complex64::new((1.0 - c1 * c1).sqrt(), 0.0);
        p.empty_wave = empty_wave;
    }
    cfg
}

#[test]
fn c05_born_rule() {
    let _g = gate();
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for weight in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let report = run_experiment(&pointer_with(f64::sqrt(weight), false)).unwrap();
        let frac = report.metric("fraction_1").unwrap();
        let sigma = (weight * (1.0 - weight) / report.ensemble.len() as f64).sqrt();
        let z = (frac - weight).abs() / sigma;
        ok &= z <= 3.0;
        parts.push(format!("{weight}: {frac:.4} ({z:.2} sigma)"));
    }
    // Default amplitudes 0.6 / 0.8 give 0.36 in the first channel.
    let report = run_experiment(&preset("pointer_measurement")).unwrap();
    let frac = report.metric("fraction_1").unwrap();
    let sigma = report.metric("binomial_sigma").unwrap();
    let z = (frac - 0.36).abs() / sigma;
    ok &= z <= 3.0;
    parts.push(format!("0.36: {frac:.4} ({z:.2} sigma)"));
    let elapsed = start.elapsed();
    verdict(
        5,
        "Born rule",
        ok && within(elapsed, 300),
        format!("{} (<= 3 sigma), {elapsed:.2?} (< 5 min)", parts.join(", ")),
    );
}

#[test]
fn c06_empty_waves() {
    let _g = gate();
    let start = Instant::now();
    let report = run_experiment(&pointer_with(0.6, true)).unwrap();
    let deviation = report.metric("empty_wave_deviation").unwrap();
    let elapsed = start.elapsed();
    verdict(
        6,
        "empty waves",
        deviation < 1e-4 && within(elapsed, 120),
        format!(
            "full vs collapsed max deviation {deviation:.2e} (< 1e-4), {elapsed:.2?} (< 2 min)"
        ),
    );
}

#[test]
fn c07_no_crossing() {
    let _g = gate();
    let start = Instant::now();
    // Two packets collide head-on; every step is recorded.
    let mut cfg = preset("custom");
    cfg.samples = 1000;
    cfg.evolution.dt = 2e-3;
    cfg.evolution.steps = 1000;
    cfg.evolution.snapshot_stride = 1;
    cfg.record_stride = 1;
    cfg.check_times = vec![0.0, 1.0, 2.0];
    cfg.preset = Preset::Custom(bohm_core::experiments::CustomParams {
        packets: vec![
            PacketSpec {
                center: vec![-4.0],
                width: vec![1.0],
                boost: vec![3.0],
                amplitude: Complex64::new(1.0, 0.0),
            },
            PacketSpec {
                center: vec![4.0],
                width: vec![1.0],
                boost: vec![-3.0],
                amplitude: Complex64::new(1.0, 0.0),
            },
        ],
    });
    let report = run_experiment(&cfg).unwrap();
    let grid = cfg.grid().unwrap();
    let recorded = report.ensemble.times().len();
    let violations = rank_violations(&grid, &report.ensemble, 0);

    let slit = run_experiment(&preset("double_slit")).unwrap();
    let sign = slit.metric("sign_changes").unwrap();
    let elapsed = start.elapsed();
    verdict(
        7,
        "no-crossing",
        violations == 0 && recorded == 1001 && report.ensemble.len() == 1000 && sign == 0.0 && slit.ensemble.len() == 10_000,
        format!(
            "1D rank violations {violations} over {recorded} snapshots of 1000 trajectories (== 0), double-slit sign changes {sign} for n = {} (== 0), {elapsed:.2?}",
            slit.ensemble.len()
        ),
    );
}

fn newton_residual(points: usize, dt: f64) -> f64 {
    let grid = line(points);
    let m = MassVector::uniform(&grid, 1.0).unwrap();
    let psi = make_gaussian(
        &grid,
        &[3.0],
        &[std::f64::consts::FRAC_1_SQRT_2],
        &[0.0],
        Units::default(),
    )
    .unwrap();
    let potential = PotentialSpec::harmonic(vec![1.0]);
    let steps = (2.0 / dt).round() as usize;
    let plan = EvolutionPlan::new(dt, steps, potential.clone(), m.clone())
        .with_stride(10)
        .with_half_steps(true);
    let tl = evolve(&psi, &plan).unwrap();
    let init = InitialEnsemble {
        positions: sample_density(&grid, &psi.density(), 100, 3).unwrap(),
        ndim: 1,
        seed: 3,
        mode: SamplingMode::QuantumEquilibrium,
    };
    let ens = integrate(&tl, &init, &m, 1).unwrap();
    quantum_newton_residual(&ens, &tl, &potential, &m).unwrap()
}

#[test]
fn c08_quantum_newton() {
    let _g = gate();
    let start = Instant::now();
    let base = newton_residual(512, 1e-3);
    let fine = newton_residual(1024, 5e-4);
    let elapsed = start.elapsed();
    verdict(
        8,
        "quantum Newton",
        base < 0.05 && fine < base,
        format!("RMS relative residual {base:.2e} at 512/1e-3 (< 5%), {fine:.2e} at 1024/5e-4 (decreasing), {elapsed:.2?}"),
    );
}

#[test]
fn c09_h_function() {
    let _g = gate();
    let start = Instant::now();
    let oracle = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
    let two_cell = relative_entropy(&[0.8, 0.2], &[0.5, 0.5]).unwrap();

    let relax = run_experiment(&preset("relaxation")).unwrap();
    let min_h = relax
        .h_series
        .values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let ratio = relax.metric("h_ratio").unwrap();

    let mut eq = preset("relaxation");
    if let Preset::Relaxation(p) = &mut eq.preset {
        p.initial = InitialDensity::Equilibrium;
    }
    let eq = run_experiment(&eq).unwrap();
    let eq_max = eq
        .h_series
        .values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let eq_min = eq
        .h_series
        .values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let floor = eq.h_series.floor;
    let elapsed = start.elapsed();
    verdict(
        9,
        "H-function",
        (two_cell - 0.1927).abs() < 1e-4
            && (two_cell - oracle).abs() < 1e-12
            && min_h >= 0.0
            && eq_min >= 0.0
            && eq_max < floor
            && ratio < 0.5
            && within(elapsed, 300),
        format!(
            "two-cell {two_cell:.6} (0.1927 +- 1e-4), min H {min_h:.3e} / {eq_min:.3e} (>= 0), equilibrium max {eq_max:.2e} (< floor {floor:.2e}), H(T)/H(0) {ratio:.4} (< 0.5), {elapsed:.2?} (< 5 min)"
        ),
    );
}

#[test]
fn c10_dwell_time() {
    let _g = gate();
    let start = Instant::now();
    let report = run_experiment(&preset("barrier_dwell")).unwrap();
    let mean = report.metric("dwell_mean").unwrap();
    let oracle = report.metric("dwell_oracle").unwrap();
    let rel = (mean - oracle).abs() / oracle;
    let elapsed = start.elapsed();
    verdict(
        10,
        "dwell time",
        rel < 0.02 && report.dwell_times.len() == 10_000 && within(elapsed, 120),
        format!("mean {mean:.5} vs integral {oracle:.5} (rel {rel:.2e} < 2%), n = {}, {elapsed:.2?} (< 2 min)", report.dwell_times.len()),
    );
}

#[test]
fn c11_which_way() {
    let _g = gate();
    let start = Instant::now();
    let report = run_experiment(&preset("which_way")).unwrap();
    let marked = report.metric("visibility_marked").unwrap();
    let unmarked = report.metric("visibility_unmarked").unwrap();
    let elapsed = start.elapsed();
    verdict(
        11,
        "which-way",
        marked < 0.05 && unmarked > 0.5 && within(elapsed, 300),
        format!("visibility {marked:.2e} with pointer (< 0.05), {unmarked:.4} without (> 0.5), {elapsed:.2?} (< 5 min)"),
    );
}

/// Shortened configurations that still exercise every preset code path.
fn reproducibility_config(name: &str) -> String {
    let (top, evolution) = match name {
        "double_slit" => ("check_times = [0.0, 1.0, 2.0]\n", "steps = 400\n"),
        "which_way" => ("check_times = [0.0, 1.0, 2.0]\n", "steps = 400\n"),
        "relaxation" => ("", "steps = 2048\n"),
        "barrier_dwell" | "stationary" => ("check_times = [0.0, 1.0, 2.0]\n", "steps = 2000\n"),
        _ => ("", ""),
    };
    format!("experiment = \"{name}\"\nsamples = 400\nseed = 11\n{top}[evolution]\n{evolution}")
}

fn output_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn comparable_manifest(bytes: &[u8], dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    let obj = v.as_object_mut().unwrap();
    for key in ["runtime_seconds", "threads", "overrides"] {
        obj.remove(key);
    }
    let cfg = obj["config"]
        .as_str()
        .unwrap()
        .replace(&dir.display().to_string(), "<out>");
    obj.insert("config".into(), cfg.into());
    v
}

#[test]
fn c12_reproducibility() {
    let _g = gate();
    let start = Instant::now();
    let work = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for name in PRESET_NAMES {
        let cfg = work.path().join(format!("{name}.toml"));
        fs::write(&cfg, reproducibility_config(name)).unwrap();
        let mut runs = Vec::new();
        for (label, threads) in [("a", 1), ("b", 4), ("c", 1)] {
            let out = work.path().join(format!("{name}-{label}"));
            let outcome = execute(&RunOptions {
                config: Some(cfg.clone()),
                out: Some(out.clone()),
                threads: Some(threads),
                ..RunOptions::default()
            })
            .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(outcome.manifest.threads, threads);
            runs.push(out);
        }
        let reference = output_files(&runs[0]);
        for other in &runs[1..] {
            let files = output_files(other);
            if files.keys().ne(reference.keys()) {
                mismatches.push(format!("{name}: file sets differ"));
                continue;
            }
            for (file, bytes) in &reference {
                compared += 1;
                let same = if file == "manifest.json" {
                    comparable_manifest(bytes, &runs[0]) == comparable_manifest(&files[file], other)
                } else {
                    bytes == &files[file]
                };
                if !same {
                    mismatches.push(format!("{name}/{file}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        12,
        "reproducibility",
        mismatches.is_empty(),
        format!(
            "{compared} file comparisons across 7 presets at 1/4/1 threads, mismatches {mismatches:?}, {elapsed:.2?}"
        ),
    );
}
