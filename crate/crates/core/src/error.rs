use thiserror::Error;

/// Errors surfaced by group construction, norm evaluation, scans, and solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix {index} is not skew-symmetric (max |Λ + Λᵀ| = {deviation:.3e})")]
    SkewSymmetryViolation { index: usize, deviation: f64 },
    #[error("the Λ matrices are linearly dependent (rank {rank} of {expected})")]
    LinearDependence { rank: usize, expected: usize },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("dilation scale must be positive, got {scale}")]
    NonpositiveScale { scale: f64 },
    #[error("field evaluation failed: {context}")]
    EvaluationFailure { context: String },
    #[error("evaluation at the origin is singular")]
    OriginSingularity,
    #[error("outer function not twice differentiable at s = {at}")]
    OuterSingularity { at: f64 },
    #[error("sample set is empty: {context}")]
    EmptySample { context: String },
    #[error("budget {budget} below minimum {min}")]
    BudgetTooSmall { budget: usize, min: usize },
    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },
    #[error("chain start point lies on the singular set")]
    StartOnSingularSet,
    #[error("energy is not finite at the requested point")]
    NonfiniteEnergy,
    #[error("grid too coarse: every axis needs at least {min} nodes, got {got}")]
    GridTooCoarse { min: usize, got: usize },
    #[error("estimated matrix storage {estimate_bytes} bytes exceeds budget {budget_bytes}")]
    MemoryBudgetExceeded { estimate_bytes: usize, budget_bytes: usize },
    #[error("eigensolver did not converge within {matvecs} matrix-vector products")]
    NoConvergence { matvecs: usize },
    #[error("config validation failed at `{key}`: {message}")]
    ValidationError { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
