use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("derivative order must be at least 1")]
    ZeroOrder,
    #[error("laplacian power {0} outside supported range 1..=9")]
    UnsupportedPower(u32),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("basis size {requested} exceeds the {available} resolvable modes of the grid")]
    BasisTooLarge { requested: usize, available: usize },
    #[error("coefficient vector has length {got}, basis expects {expected}")]
    CoefficientLength { got: usize, expected: usize },
    #[error("density must be positive (min {min:e})")]
    NonpositiveDensity { min: f64 },
    #[error("density floor violated: min {min:e} below {floor:e}")]
    DensityFloor { min: f64, floor: f64 },
    #[error("time step {dt:e} exceeds stability bound {bound:e} set by {term}")]
    StabilityBound { term: String, dt: f64, bound: f64 },
    #[error("negative temperature (min {min:e})")]
    NegativeTemperature { min: f64 },
    #[error("negative argument {0:e}")]
    NegativeArgument(f64),
    #[error("mass matrix factorization failed")]
    Factorization,
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { solver: &'static str, iterations: usize, residual: f64 },
    #[error("non-finite value in force term {0}")]
    NonFiniteTerm(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} states, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("{0}")]
    Inadmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
