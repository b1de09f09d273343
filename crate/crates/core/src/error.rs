use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis for N={n_particles}, M={n_modes} has dimension {dim}, above the cap of {cap}")]
    DimensionCap {
        n_particles: usize,
        n_modes: usize,
        dim: u128,
        cap: usize,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{requested} steps is below the minimum of {minimum} for this drive")]
    StepFloor { requested: usize, minimum: usize },

    #[error("finite-difference step {0:e} is too small to resolve a change in the state")]
    StepSize(f64),

    #[error("eigenpair ({a}, {b}) is degenerate (gap {gap:e}); tau estimate undefined")]
    DegeneratePair { a: usize, b: usize, gap: f64 },

    #[error("inconclusive scan: {0}")]
    InconclusiveScan(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::StepFloor { .. } => 2,
            Error::DimensionCap { .. } => 4,
            _ => 3,
        }
    }
}
