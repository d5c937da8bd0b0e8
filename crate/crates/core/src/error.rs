use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Error)]
pub enum StarError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("polytropic exponent {gamma} is within {tolerance} of 4/3 where the linearized operator is singular; set the override flag to proceed")]
    DegenerateGamma { gamma: f64, tolerance: f64 },

    #[error("Lane-Emden integration found no surface before xi = {xi_max}")]
    NoSurface { xi_max: f64 },

    #[error("deformation fold: det Dg = {det:.3e} at s = {s:.4}, mu = {mu:.4}")]
    Fold { det: f64, s: f64, mu: f64 },

    #[error("state outside trust radius: |{field}|_X = {norm:.4e} > {radius:.4e}")]
    TrustRadius {
        field: &'static str,
        norm: f64,
        radius: f64,
    },

    #[error("point at radius {radius:.6} along mu = {mu:.6} lies outside the deformed domain")]
    OutsideDomain { radius: f64, mu: f64 },

    #[error("singular Jacobian: {0}")]
    Singular(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("Newton failed after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Iterations taken before giving up.
        trace: Vec<crate::equilibrium::NewtonStep>,
    },

    #[error("parameter guard: {0}")]
    Guard(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, StarError>;
