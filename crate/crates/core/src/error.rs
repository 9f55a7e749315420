use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Fock dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),

    #[error("Fock level {level} is out of range for dimension {dim}")]
    OutOfRange { level: usize, dim: usize },

    #[error("truncation insufficient at dimension {dim}: tail mass {mass:e} is not below {limit:e}")]
    TruncationInsufficient { dim: usize, mass: f64, limit: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported moment order {0}")]
    UnsupportedOrder(usize),

    #[error("invalid detector efficiency {0}: must lie in (0, 1]")]
    InvalidEfficiency(f64),

    #[error("phase-space grid too small: captured mass {captured} outside 1 ± {tolerance:e}")]
    InsufficientExtent { captured: f64, tolerance: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no data: every count is zero")]
    EmptyData,

    #[error("unstable reconstruction: denominator {denominator:e} against term scale {scale:e}")]
    UnstableReconstruction { denominator: f64, scale: f64 },

    #[error("ill-posed phase design: {0}")]
    IllPosed(String),

    #[error("probability {0:e} is negative beyond the clamping threshold")]
    NegativeProbability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
