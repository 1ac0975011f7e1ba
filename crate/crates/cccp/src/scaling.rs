//! Matrix scaling to doubly stochastic form as a CCCP instance.
//!
//! For an entrywise-positive n×n matrix M, minimizing
//! `φ(x) = −Σ_j log x_j + Σ_i log(Σ_j x_j M_ij)` over positive x recovers
//! Sinkhorn's update as the closed-form surrogate minimizer. The manifold is
//! the positive orthant (diagonal PD matrices), so the engine runs on
//! vector-shaped points.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::PosVector;
use crate::solver::{solve, DcProblem, IterateTrace, SolverConfig};

/// Scaling instance: an entrywise-positive matrix.
#[derive(Debug, Clone)]
pub struct ScalingProblem {
    m: DMatrix<f64>,
}

impl ScalingProblem {
    /// Matrices with nonpositive entries are rejected; support-condition
    /// analysis for nonnegative matrices is out of scope.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch { left: m.nrows(), right: m.ncols() });
        }
        if m.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::DomainError("matrix must be entrywise positive".into()));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    fn row_sums(&self, x: &PosVector) -> DVector<f64> {
        &self.m * x.as_vector()
    }

    /// Solve to a doubly stochastic scaling; returns `(x, trace)` with
    /// `E = diag(x)`.
    pub fn solve(&self, x0: PosVector, cfg: &SolverConfig) -> Result<(PosVector, IterateTrace)> {
        solve(self, x0, cfg)
    }

    /// Diagonal scalings `(D, E)` from a solved x: `E = diag(x)`,
    /// `D_i = 1/(Σ_j x_j M_ij)`. Rows of DME sum to 1 exactly by
    /// construction of D; columns to solver tolerance.
    pub fn assemble(&self, x: &PosVector) -> (DVector<f64>, DVector<f64>) {
        let d = self.row_sums(x).map(|s| 1.0 / s);
        (d, x.as_vector().clone())
    }

    /// The scaled matrix `D M E`.
    pub fn scaled_matrix(&self, x: &PosVector) -> DMatrix<f64> {
        let (d, e) = self.assemble(x);
        let mut out = self.m.clone();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] *= d[i] * e[j];
            }
        }
        out
    }
}

impl DcProblem for ScalingProblem {
    type P = PosVector;

    // f(x) = −Σ log x_j
    fn eval_f(&self, x: &PosVector) -> f64 {
        -x.as_vector().iter().map(|v| v.ln()).sum::<f64>()
    }

    // h(x) = −Σ_i log(Σ_j x_j M_ij)
    fn eval_h(&self, x: &PosVector) -> f64 {
        -self.row_sums(x).iter().map(|s| s.ln()).sum::<f64>()
    }

    fn grad_h(&self, x: &PosVector) -> DVector<f64> {
        let sums = self.row_sums(x);
        let mut g = DVector::zeros(self.dim());
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                g[j] -= self.m[(i, j)] / sums[i];
            }
        }
        g
    }

    // argmin −Σ log x_j − ⟨g, x⟩ is x_j = −1/g_j (g entrywise negative)
    fn oracle(&self, g: &DVector<f64>, _anchor: &PosVector) -> Result<PosVector> {
        if g.iter().any(|&v| v >= 0.0) {
            return Err(Error::DomainError("surrogate gradient must be entrywise negative".into()));
        }
        PosVector::new(g.map(|v| -1.0 / v))
    }
}

/// Objective value of the scaling instance at x.
pub fn scaling_objective(p: &ScalingProblem, x: &PosVector) -> f64 {
    p.objective(x)
}
