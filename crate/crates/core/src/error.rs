use thiserror::Error;

/// Errors raised by the compliance library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not in the image of the hat map (symmetric residual {residual:e})")]
    NotSkew { residual: f64 },

    #[error("chebyshev argument {x} lies outside [-1, 1]")]
    ChebyshevDomain { x: f64 },

    #[error("arc length {s} lies outside [0, {length}]")]
    ArcLength { s: f64, length: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inner compliance matrix is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("tendon {tendon} has a degenerate path derivative at s = {s}")]
    DegenerateRouting { tendon: usize, s: f64 },

    #[error("rank-deficient sample matrix (rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Last iterate of the unknowns, when the solver exposes one.
        last_iterate: Vec<f64>,
        residual_history: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
