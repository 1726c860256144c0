use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported function: {0}")]
    Unsupported(String),

    #[error("degenerate conjugate: slope is bounded by {threshold}, conjugate is +inf above it")]
    DegenerateConjugate { threshold: f64 },

    #[error("invalid N-function: {0}")]
    InvalidNFunction(String),

    #[error("growth class violation: {0}")]
    ClassViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular symbol: operator is not elliptic, kernel at xi = {xi:?}")]
    SingularSymbol { xi: Vec<f64> },

    #[error("operator is elliptic, its symbol has no kernel")]
    NoKernel,

    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),

    #[error("field is not compactly supported: {0}")]
    NotCompactlySupported(String),

    #[error("radius {radius} is below the grid resolution {min}")]
    RadiusBelowResolution { radius: f64, min: f64 },

    #[error("grid of {cells} cells exceeds the memory cap of {cap} cells")]
    MemoryCap { cells: usize, cap: usize },

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
