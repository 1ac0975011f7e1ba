//! Tyler's M-estimator of scatter via CCCP.
//!
//! We parametrize by the inverse scatter `P = X⁻¹`, which makes both DC
//! components Euclidean convex:
//! `φ(P) = −log det P + (2β/n) Σ_i log(a_iᵀ P a_i)` with β = d/2 for Tyler
//! proper (the distance generating function f(t) = t^{−β}). The surrogate
//! minimizer is the classical fixed-point map. The estimator is defined only
//! up to positive scale; iterates are left un-gauged (the surrogate picks a
//! scale on its own) and [`TylerProblem::scatter`] applies the tr(X) = d
//! normalization for reporting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::incremental::FiniteSumDcProblem;

use crate::solver::{solve, DcProblem, IterateTrace, SolverConfig};
use crate::spd::{SpdMatrix, SymMatrix};

#[derive(Debug, Clone)]
pub struct TylerProblem {
    samples: Vec<DVector<f64>>,
    dim: usize,
    /// Exponent β of f(t) = t^{−β}; d/2 for Tyler proper.
    shape_exponent: f64,
}

impl TylerProblem {
    /// Tyler proper: β = d/2.
    pub fn new(samples: Vec<DVector<f64>>) -> Result<Self> {
        let d = samples.first().map(|a| a.len()).unwrap_or(0);
        Self::with_shape_exponent(samples, d as f64 / 2.0)
    }

    pub fn with_shape_exponent(samples: Vec<DVector<f64>>, shape_exponent: f64) -> Result<Self> {
        let dim = samples.first().map(|a| a.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::DomainError("no samples".into()));
        }
        if samples.len() < dim {
            return Err(Error::DomainError(format!(
                "need n ≥ d samples, got n={} d={dim}",
                samples.len()
            )));
        }
        for (i, a) in samples.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::DimMismatch { left: a.len(), right: dim });
            }
            if a.norm() == 0.0 {
                return Err(Error::DomainError(format!("sample {i} is zero")));
            }
        }
        if shape_exponent <= 0.0 {
            return Err(Error::DomainError("shape exponent must be positive".into()));
        }
        Ok(Self { samples, dim, shape_exponent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    // weight on Σ log(a_iᵀ P a_i): 2β/n, = d/n for Tyler proper
    fn coeff(&self) -> f64 {
        2.0 * self.shape_exponent / self.samples.len() as f64
    }

    fn quad_form(&self, i: usize, p: &SpdMatrix) -> f64 {
        let a = &self.samples[i];
        (a.transpose() * p.as_matrix() * a)[(0, 0)]
    }

    /// `(2β/n) Σ a_i a_iᵀ / (a_iᵀ P a_i)`: the positive side of ∇h.
    fn weighted_scatter(&self, p: &SpdMatrix) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (i, a) in self.samples.iter().enumerate() {
            let q = self.quad_form(i, p);
            g.ger(self.coeff() / q, a, a, 1.0);
        }
        SymMatrix::from_average(g).into_matrix()
    }

    /// Fixed-point residual `‖P · (2β/n) Σ a_i a_iᵀ/(a_iᵀ P a_i) − I‖_F`;
    /// zero at stationarity of the objective.
    pub fn fixed_point_residual(&self, p: &SpdMatrix) -> f64 {
        let g = self.weighted_scatter(p);
        (p.as_matrix() * g - DMatrix::identity(self.dim, self.dim)).norm()
    }

    /// Solve from the identity; returns the (un-normalized) inverse scatter.
    pub fn solve(&self, cfg: &SolverConfig) -> Result<(SpdMatrix, IterateTrace)> {
        solve(self, SpdMatrix::identity(self.dim), cfg)
    }

    /// Scatter estimate `X = P⁻¹`, trace-normalized to tr(X) = d.
    pub fn scatter(&self, p: &SpdMatrix) -> Result<SpdMatrix> {
        let x = p.inverse()?;
        let c = self.dim as f64 / x.trace();
        x.scale(c)
    }
}

impl DcProblem for TylerProblem {
    type P = SpdMatrix;

    fn eval_f(&self, p: &SpdMatrix) -> f64 {
        -p.logdet().unwrap_or(f64::NAN)
    }

    fn eval_h(&self, p: &SpdMatrix) -> f64 {
        -self.coeff() * (0..self.samples.len()).map(|i| self.quad_form(i, p).ln()).sum::<f64>()
    }

    fn grad_h(&self, p: &SpdMatrix) -> SymMatrix {
        SymMatrix::from_average(-self.weighted_scatter(p))
    }

    // argmin −log det P + tr((−g) P) is P = (−g)⁻¹
    fn oracle(&self, g: &SymMatrix, _anchor: &SpdMatrix) -> Result<SpdMatrix> {
        let gpos = SpdMatrix::new(-g.as_matrix()).map_err(|_| Error::SingularGradient)?;
        gpos.inverse().map_err(|_| Error::SingularGradient)
    }
}

impl FiniteSumDcProblem for TylerProblem {
    type P = SpdMatrix;

    fn num_components(&self) -> usize {
        self.samples.len()
    }

    fn eval_f(&self, p: &SpdMatrix) -> f64 {
        DcProblem::eval_f(self, p)
    }

    // h_i(P) = −2β log(a_iᵀ P a_i), so that (1/n) Σ h_i = h
    fn eval_h_component(&self, i: usize, p: &SpdMatrix) -> f64 {
        -2.0 * self.shape_exponent * self.quad_form(i, p).ln()
    }

    fn grad_h_component(&self, i: usize, p: &SpdMatrix) -> SymMatrix {
        let a = &self.samples[i];
        let q = self.quad_form(i, p);
        let mut g = DMatrix::zeros(self.dim, self.dim);
        g.ger(-2.0 * self.shape_exponent / q, a, a, 1.0);
        SymMatrix::from_average(g)
    }

    fn oracle(&self, g: &SymMatrix, anchor: &SpdMatrix) -> Result<SpdMatrix> {
        DcProblem::oracle(self, g, anchor)
    }
}
