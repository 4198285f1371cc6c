use std::path::PathBuf;

use thiserror::Error;

/// A single schema problem found while validating a run configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Dotted key path, e.g. `evolution.snapshot_stride`.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grids or times of the operands do not match")]
    GridMismatch,
    #[error("packet width {width} is below 3 grid spacings ({min}) on axis {axis}")]
    UnresolvablePacket { axis: usize, width: f64, min: f64 },
    #[error(
        "packet amplitude at the boundary of axis {axis} is {ratio:e} of its peak (limit 1e-6)"
    )]
    BoundaryLeak { axis: usize, ratio: f64 },
    #[error("resulting state has norm {0:e}; cannot normalize")]
    ZeroVector(f64),
    #[error("kinetic phase per step {phase} reaches pi at the Nyquist mode")]
    NyquistViolation { phase: f64 },
    #[error("non-finite amplitude after propagation at t = {time}")]
    NonFiniteAmplitude { time: f64 },
    #[error(
        "node mask covers more than half of the probability-bearing grid ({fraction:.3} masked)"
    )]
    AllNodes { fraction: f64 },
    #[error("trajectory {trajectory} entered a node-masked cell at t = {time}")]
    NodeProximity { trajectory: usize, time: f64 },
    #[error("no field snapshot available at stage time {time}")]
    StageTimeUnavailable { time: f64 },
    #[error("non-finite position for trajectory {trajectory} at t = {time}")]
    NonFinitePosition { trajectory: usize, time: f64 },
    #[error("channel supports {0} and {1} overlap")]
    OverlappingSupports(usize, usize),
    #[error("density is zero everywhere")]
    DegenerateDensity,
    #[error("coarse cell {cell} has ensemble density but zero reference density")]
    EmptyReferenceCell { cell: usize },
    #[error("pointer packets overlap by {overlap:e} (limit {limit:e})")]
    OverlapTooLarge { overlap: f64, limit: f64 },
    #[error("configuration has {} violation(s):\n{}", .0.len(), format_violations(.0))]
    SchemaViolation(Vec<Violation>),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
