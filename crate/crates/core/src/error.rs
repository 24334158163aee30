use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("system definition rejected: {0}")]
    InvalidSystem(String),

    #[error("degree shortfall: d_F = {d_f} < d_K + d_P = {required}")]
    DegreeShortfall { d_f: u32, required: u32 },

    #[error("gram basis too small: monomial {0} cannot be represented")]
    GramBasisTooSmall(String),

    #[error("polynomial degree exceeds the declared basis: {0}")]
    DegreeMismatch(String),

    #[error("symmetric eigensolver did not converge within {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("KKT factorization failed: {0}")]
    KktFactorization(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "conic subproblem at outer iteration {iteration} ended with {status:?} \
         (primal {primal_residual:.3e}, dual {dual_residual:.3e})"
    )]
    Subproblem {
        iteration: usize,
        status: SolveStatus,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
