//! Pilot-wave (de Broglie-Bohm) simulation engine.
//!
//! A wavefunction is advanced under the Schrodinger equation with a
//! split-step spectral propagator, and an ensemble of point particles is
//! carried along by the guidance equation `dq/dt = (hbar/m) Im(grad psi / psi)`.
//! Diagnostics check equivariance of `|psi|^2`, the coarse-grained
//! H-function, the quantum potential force law, and measurement statistics.

pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod interp;
pub mod io;
pub mod pilot_wave;
pub mod potential;
pub mod propagator;
pub mod spectral;
pub mod trajectories;
pub mod wavefunction;

pub use error::{Error, Result};
