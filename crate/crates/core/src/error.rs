use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("factor dimensions {factors:?} do not multiply to {dim}")]
    FactorDims { factors: Vec<usize>, dim: usize },

    #[error("subsystem index {index} out of range for {count} factors")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("empty subsystem selection")]
    EmptySelection,

    #[error("operator is not {kind} (residual {residual:.3e})")]
    NotOfKind { kind: &'static str, residual: f64 },

    #[error("not a valid density operator: {0}")]
    InvalidDensity(String),

    #[error("projector family invalid: {0}")]
    InvalidProjectors(String),

    #[error("normalization violated: |alpha|^2 + |beta|^2 = {0}")]
    Normalization(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("combinatorial blow-up: {count} exceeds limit {limit}")]
    TooMany { count: usize, limit: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
