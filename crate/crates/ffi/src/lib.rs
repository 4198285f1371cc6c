//! C ABI over `bohm_core`.
//!
//! Objects are opaque heap handles created by `*_new` functions and released
//! with the matching `*_free`. Every fallible call returns a [`BohmStatus`];
//! on failure, [`bohm_last_error`] describes the problem for the calling
//! thread. Arrays are caller-allocated, with their length passed alongside.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use bohm_core::equilibrium::{h_bar_from_samples, ks_distance, sample_density, CoarseGraining};
use bohm_core::grid::{Axis, MassVector, SpatialGrid};
use bohm_core::io::{execute, RunOptions};
use bohm_core::pilot_wave::velocity_field;
use bohm_core::potential::{PotentialSpec, PotentialTerm};
use bohm_core::propagator::Propagator;
use bohm_core::wavefunction::{make_gaussian, Units, WaveFunction};
use bohm_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BohmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    /// The configuration failed validation.
    Schema = 4,
    /// A numerical precondition failed (nodes, overlap, non-finite values).
    Numerical = 5,
    Io = 6,
    /// Caller-supplied buffer has the wrong length.
    BufferSize = 7,
    /// An internal panic was caught at the boundary.
    Panic = 8,
}

pub struct BohmGrid {
    inner: SpatialGrid,
}

pub struct BohmWave {
    inner: WaveFunction,
}

pub struct BohmPropagator {
    inner: Propagator,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BohmStatus {
    match e {
        Error::InvalidGrid(_) | Error::GridMismatch | Error::UnresolvablePacket { .. } => {
            BohmStatus::InvalidGrid
        }
        Error::InvalidArgument(_) | Error::ZeroVector(_) => BohmStatus::InvalidArgument,
        Error::SchemaViolation(_) => BohmStatus::Schema,
        Error::Io { .. } => BohmStatus::Io,
        _ => BohmStatus::Numerical,
    }
}

enum Failure {
    Status(BohmStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(BohmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BohmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BohmStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            BohmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(
    p: *mut T,
    len: usize,
    want: usize,
    what: &str,
) -> Result<&'a mut [T], Failure> {
    if len != want {
        return Err(Failure::Status(
            BohmStatus::BufferSize,
            format!("{what} has length {len}, expected {want}"),
        ));
    }
    if want == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn string_in(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_string)
        .map_err(|_| Failure::Status(BohmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bohm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Periodic grid with one axis (`ndim = 1`) or two; `mins`, `maxs` and
/// `points` each hold `ndim` entries.
///
/// # Safety
/// Arrays must hold `ndim` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bohm_grid_new(
    ndim: usize,
    mins: *const f64,
    maxs: *const f64,
    points: *const usize,
    out: *mut *mut BohmGrid,
) -> BohmStatus {
    guard(|| {
        if ndim == 0 || points.is_null() {
            return Err(null("points"));
        }
        let mins = slice_in(mins, ndim, "mins")?;
        let maxs = slice_in(maxs, ndim, "maxs")?;
        let points = slice::from_raw_parts(points, ndim);
        let axes = (0..ndim)
            .map(|i| Axis::new(mins[i], maxs[i], points[i]))
            .collect();
        put(
            out,
            BohmGrid {
                inner: SpatialGrid::new(axes)?,
            },
        )
    })
}

/// # Safety
/// `grid` must come from [`bohm_grid_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bohm_grid_free(grid: *mut BohmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bohm_grid_len(grid: *const BohmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.len())
}

/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bohm_grid_ndim(grid: *const BohmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.ndim())
}

/// Normalized Gaussian packet; `center`, `width` and `wavenumber` hold one
/// entry per axis.
///
/// # Safety
/// Handles must be live; arrays must hold `ndim` elements.
#[no_mangle]
pub unsafe extern "C" fn bohm_wave_gaussian(
    grid: *const BohmGrid,
    center: *const f64,
    width: *const f64,
    wavenumber: *const f64,
    hbar: f64,
    out: *mut *mut BohmWave,
) -> BohmStatus {
    guard(|| {
        let g = &get(grid, "grid")?.inner;
        let d = g.ndim();
        let psi = make_gaussian(
            g,
            slice_in(center, d, "center")?,
            slice_in(width, d, "width")?,
            slice_in(wavenumber, d, "wavenumber")?,
            Units::new(hbar)?,
        )?;
        put(out, BohmWave { inner: psi })
    })
}

/// # Safety
/// `wave` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bohm_wave_free(wave: *mut BohmWave) {
    if !wave.is_null() {
        drop(Box::from_raw(wave));
    }
}

/// # Safety
/// `wave` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bohm_wave_norm(wave: *const BohmWave, out: *mut f64) -> BohmStatus {
    guard(|| {
        let w = get(wave, "wave")?;
        *out.as_mut().ok_or_else(|| null("out"))? = w.inner.norm();
        Ok(())
    })
}

/// # Safety
/// `wave` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bohm_wave_time(wave: *const BohmWave, out: *mut f64) -> BohmStatus {
    guard(|| {
        let w = get(wave, "wave")?;
        *out.as_mut().ok_or_else(|| null("out"))? = w.inner.time();
        Ok(())
    })
}

/// Writes `|psi|^2` at every grid point (`len` must equal the grid length).
///
/// # Safety
/// `wave` must be live; `density` must hold `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn bohm_wave_density(
    wave: *const BohmWave,
    density: *mut f64,
    len: usize,
) -> BohmStatus {
    guard(|| {
        let w = &get(wave, "wave")?.inner;
        slice_out(density, len, w.grid().len(), "density")?.copy_from_slice(&w.density());
        Ok(())
    })
}

/// Split-step propagator with an optional tabulated real potential
/// (`potential` may be null for a free particle) and one mass per axis.
///
/// # Safety
/// Handles must be live; `potential` must be null or hold `potential_len`
/// values; `masses` must hold one entry per axis.
#[no_mangle]
pub unsafe extern "C" fn bohm_propagator_new(
    grid: *const BohmGrid,
    potential: *const f64,
    potential_len: usize,
    masses: *const f64,
    hbar: f64,
    dt: f64,
    out: *mut *mut BohmPropagator,
) -> BohmStatus {
    guard(|| {
        let g = &get(grid, "grid")?.inner;
        let mut spec = PotentialSpec::free();
        if !potential.is_null() {
            let values = slice_in(potential, potential_len, "potential")?.to_vec();
            spec = spec.with(PotentialTerm::Tabulated { values });
        }
        let m = MassVector::new(slice_in(masses, g.ndim(), "masses")?.to_vec())?;
        put(
            out,
            BohmPropagator {
                inner: Propagator::new(g, &spec, &m, hbar, dt)?,
            },
        )
    })
}

/// # Safety
/// `prop` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bohm_propagator_free(prop: *mut BohmPropagator) {
    if !prop.is_null() {
        drop(Box::from_raw(prop));
    }
}

/// Advances `wave` in place by `steps` time steps.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn bohm_propagator_step(
    prop: *const BohmPropagator,
    wave: *mut BohmWave,
    steps: usize,
) -> BohmStatus {
    guard(|| {
        let p = &get(prop, "propagator")?.inner;
        let w = &mut wave.as_mut().ok_or_else(|| null("wave"))?.inner;
        for _ in 0..steps {
            p.advance(w)?;
        }
        Ok(())
    })
}

/// Guidance velocity on the grid. `velocity` holds `ndim * len` values,
/// axis-major; `node_mask` (may be null) receives 1 at masked nodes.
///
/// # Safety
/// `wave` must be live; `masses` holds one entry per axis; buffers must be
/// writable with the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn bohm_velocity(
    wave: *const BohmWave,
    masses: *const f64,
    velocity: *mut f64,
    velocity_len: usize,
    node_mask: *mut u8,
    mask_len: usize,
) -> BohmStatus {
    guard(|| {
        let w = &get(wave, "wave")?.inner;
        let n = w.grid().len();
        let d = w.grid().ndim();
        let m = MassVector::new(slice_in(masses, d, "masses")?.to_vec())?;
        let field = velocity_field(w, &m)?;
        let out = slice_out(velocity, velocity_len, n * d, "velocity")?;
        for (a, c) in field.components.iter().enumerate() {
            out[a * n..(a + 1) * n].copy_from_slice(c);
        }
        if !node_mask.is_null() {
            let mask = slice_out(node_mask, mask_len, n, "node_mask")?;
            for (o, &b) in mask.iter_mut().zip(&field.node_mask) {
                *o = u8::from(b);
            }
        }
        Ok(())
    })
}

/// Draws `n` positions from `|psi|^2` into `positions` (`n * ndim` values,
/// point-major). Deterministic in `seed`.
///
/// # Safety
/// `wave` must be live; `positions` must hold `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn bohm_sample(
    wave: *const BohmWave,
    n: usize,
    seed: u64,
    positions: *mut f64,
    len: usize,
) -> BohmStatus {
    guard(|| {
        let w = &get(wave, "wave")?.inner;
        let out = slice_out(positions, len, n * w.grid().ndim(), "positions")?;
        out.copy_from_slice(&sample_density(w.grid(), &w.density(), n, seed)?);
        Ok(())
    })
}

/// Kolmogorov-Smirnov distance between `n` point-major samples and
/// `|psi|^2` (largest over axis marginals).
///
/// # Safety
/// `wave` must be live; `positions` holds `n * ndim` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bohm_ks_distance(
    wave: *const BohmWave,
    positions: *const f64,
    n: usize,
    out: *mut f64,
) -> BohmStatus {
    guard(|| {
        let w = &get(wave, "wave")?.inner;
        let s = slice_in(positions, n * w.grid().ndim(), "positions")?;
        *out.as_mut().ok_or_else(|| null("out"))? = ks_distance(w.grid(), s, &w.density());
        Ok(())
    })
}

/// Coarse-grained H-function of `n` samples against `|psi|^2`, with cells
/// of `cell` grid points per axis.
///
/// # Safety
/// `wave` must be live; `positions` holds `n * ndim` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bohm_h_bar(
    wave: *const BohmWave,
    positions: *const f64,
    n: usize,
    cell: usize,
    out: *mut f64,
) -> BohmStatus {
    guard(|| {
        let w = &get(wave, "wave")?.inner;
        let s = slice_in(positions, n * w.grid().ndim(), "positions")?;
        let h = h_bar_from_samples(w.grid(), s, &w.density(), CoarseGraining::new(cell))?;
        *out.as_mut().ok_or_else(|| null("out"))? = h;
        Ok(())
    })
}

/// Runs the TOML configuration at `config_path`, writing outputs to
/// `out_dir` (may be null to use the configured directory). `exit_code`
/// receives 0 when every check passed and 2 otherwise.
///
/// # Safety
/// Strings must be NUL-terminated; `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn bohm_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> BohmStatus {
    guard(|| {
        let config = PathBuf::from(string_in(config_path, "config_path")?);
        let out = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(string_in(out_dir, "out_dir")?))
        };
        let code = exit_code.as_mut().ok_or_else(|| null("exit_code"))?;
        let outcome = execute(&RunOptions {
            config: Some(config),
            out,
            ..RunOptions::default()
        })?;
        *code = outcome.exit_code;
        Ok(())
    })
}
