use thiserror::Error;

/// Errors surfaced by the numerical operations.
///
/// Every variant carries a stable machine-readable `code()` used by the CLI
/// when emitting structured error JSON.
#[derive(Debug, Error)]
pub enum JetscopeError {
    #[error("test function support exceeds the requested region: {0}")]
    SupportViolation(String),

    #[error("derivative data insufficient: need order {needed}, have {available}")]
    MissingDerivativeData { needed: usize, available: usize },

    #[error("region contains no grid nodes")]
    EmptyRegion,

    #[error("exponent not supported for this operation: {0}")]
    UnsupportedExponent(String),

    #[error("optimizer failed to converge: {0}")]
    SolverDivergence(String),

    #[error("normal equations ill conditioned (estimated condition {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("point lies too close to the grid boundary for the requested stencil")]
    BoundaryPoint,

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("algebraic residual too large: {0:.3e}")]
    ResidualTooLarge(f64),

    #[error(
        "deformation hypothesis not satisfied: measured {measured:.6e} exceeds bound {bound:.6e}"
    )]
    HypothesisUnverified { measured: f64, bound: f64 },

    #[error("scale extrapolation did not converge: {0}")]
    NoConvergence(String),

    #[error("the closed set is empty")]
    EmptySet,

    #[error("partition-of-unity local sum degenerate (min {0:.3e})")]
    DegenerateSum(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl JetscopeError {
    /// Stable error code for machine-readable reporting.
    pub fn code(&self) -> &'static str {
        match self {
            JetscopeError::SupportViolation(_) => "support_violation",
            JetscopeError::MissingDerivativeData { .. } => "missing_derivative_data",
            JetscopeError::EmptyRegion => "empty_region",
            JetscopeError::UnsupportedExponent(_) => "unsupported_exponent",
            JetscopeError::SolverDivergence(_) => "solver_divergence",
            JetscopeError::IllConditioned { .. } => "ill_conditioned",
            JetscopeError::BoundaryPoint => "boundary_point",
            JetscopeError::SingularSystem(_) => "singular_system",
            JetscopeError::ResidualTooLarge(_) => "residual_too_large",
            JetscopeError::HypothesisUnverified { .. } => "hypothesis_unverified",
            JetscopeError::NoConvergence(_) => "no_convergence",
            JetscopeError::EmptySet => "empty_set",
            JetscopeError::DegenerateSum(_) => "degenerate_sum",
            JetscopeError::InvalidInput(_) => "invalid_input",
            JetscopeError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, JetscopeError>;
