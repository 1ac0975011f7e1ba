use thiserror::Error;

/// Errors surfaced by the matrix layer, the solvers and the applications.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },

    #[error("Cholesky factorization failed: matrix is not positive definite")]
    CholeskyFailure,

    #[error("symmetric eigensolve failed to converge")]
    EigFailure,

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("CCCP oracle failed: {0}")]
    OracleFailure(String),

    #[error("inner solver failed: {0}")]
    InnerSolverFailure(String),

    #[error("aggregate gradient is singular: samples do not span the space")]
    SingularGradient,

    #[error("map {index} is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficiency { index: usize, rank: usize, cols: usize },

    #[error("aggregate map is singular: the A_i columns do not jointly span the space")]
    SingularAggregate,

    #[error("iterates diverged (condition number or log-determinant out of bounds); the datum is likely infeasible")]
    DivergenceDetected,

    #[error("quadrature did not converge within the panel budget (estimated error {err:.3e})")]
    QuadratureNonConvergence { err: f64 },

    #[error("solve aborted at iteration {iteration}: {reason}")]
    Aborted {
        iteration: usize,
        reason: Box<Error>,
        /// Records collected before the failure.
        partial_trace: Box<crate::solver::IterateTrace>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
