use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} is beyond the supplied weight data (last trustworthy index {hint})")]
    IndexOutOfData { index: usize, hint: usize },

    #[error("invalid weight data: {0}")]
    InvalidWeights(String),

    #[error("window too small: {got} (need at least {min})")]
    WindowTooSmall { got: usize, min: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis is rank deficient at vector {index} (relative residual {residual:e})")]
    RankDeficient { index: usize, residual: f64 },

    #[error("zero vector supplied where a nonzero vector is required")]
    ZeroVector,

    #[error("subspace is not invariant: defect {defect:e} exceeds tolerance {tol:e}")]
    NotInvariant { defect: f64, tol: f64 },

    #[error("cyclic vector generated only {achieved} of {required} dimensions")]
    CyclicityFailure { achieved: usize, required: usize },

    #[error("radius {radius} is too close to the point-spectrum radius estimate {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid perturbation plan: {0}")]
    InvalidPlan(String),

    #[error("invalid configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
