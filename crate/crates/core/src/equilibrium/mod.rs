//! Quantum-equilibrium sampling and relaxation diagnostics.

mod h_function;
mod ks;
mod relaxation;
mod sampling;

pub use h_function::{
    cell_masses, h_bar_from_density, h_bar_from_samples, relative_entropy, statistical_floor,
    CoarseGraining, HSeries,
};
pub use ks::{
    equivariance_report, ks_critical_99, ks_distance, ks_distance_1d, EquivarianceReport, KsCheck,
};
pub use relaxation::{
    random_phase_modes, relaxation_run, BoxMode, InitialDensity, RelaxationOutcome, RelaxationSpec,
};
pub use sampling::sample_density;
