//! Brascamp–Lieb constant computation.
//!
//! For a datum of linear maps A_i : ℝ^{k_i} → ℝ^d (full column rank) and
//! weights w_i, the log of the BL constant is the infimum over SPD X of
//!
//!   F(X) = −log det X + Σ w_i log det(A_iᵀ X A_i),
//!
//! written as the DC pair f(X) = −log det X, h(X) = −Σ w_i log det(A_iᵀXA_i).
//! F is scale invariant exactly when Σ w_i k_i = d, and the surrogate
//! minimizer is X = (−g)⁻¹ for the aggregated minorant gradient g.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::solver::{solve, DcProblem, IterateTrace, SolverConfig};
use crate::spd::{SpdMatrix, SymMatrix, CONDITION_WARN};

/// A Brascamp–Lieb datum: maps and their exponents.
#[derive(Debug, Clone)]
pub struct BlDatum {
    maps: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
    dim: usize,
}

impl BlDatum {
    pub fn new(maps: Vec<DMatrix<f64>>, weights: Vec<f64>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::DomainError("need at least one map".into()));
        }
        if maps.len() != weights.len() {
            return Err(Error::DimMismatch { left: maps.len(), right: weights.len() });
        }
        let dim = maps[0].nrows();
        for (i, a) in maps.iter().enumerate() {
            if a.nrows() != dim {
                return Err(Error::DimMismatch { left: a.nrows(), right: dim });
            }
            if a.ncols() == 0 || a.ncols() > dim {
                return Err(Error::DomainError(format!(
                    "map {i} has {} columns, expected 1..={dim}",
                    a.ncols()
                )));
            }
            let rank = a.clone().svd(false, false).rank(1e-10 * a.norm().max(1.0));
            if rank < a.ncols() {
                return Err(Error::RankDeficiency { index: i, rank, cols: a.ncols() });
            }
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::DomainError("weights must be positive".into()));
        }
        let scaling: f64 = maps
            .iter()
            .zip(&weights)
            .map(|(a, &w)| w * a.ncols() as f64)
            .sum();
        if (scaling - dim as f64).abs() > 1e-10 {
            log::warn!(
                "weighted column dimensions sum to {scaling}, not {dim}: objective is not scale invariant"
            );
        }
        Ok(Self { maps, weights, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> &[DMatrix<f64>] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Parse the text form: `d`, then per map a block `k_i`, `w_i`, and
    /// `d` rows of `k_i` entries.
    pub fn parse(text: &str) -> Result<Self> {
        fn bad() -> Error {
            Error::Parse("malformed datum text".into())
        }
        let mut tokens = text.split_whitespace().map(|t| t.parse::<f64>());
        let mut next = || tokens.next().ok_or_else(bad)?.map_err(|_| bad());
        let d = next()? as usize;
        if d == 0 {
            return Err(bad());
        }
        let mut maps = Vec::new();
        let mut weights = Vec::new();
        loop {
            let k = match tokens.next() {
                None => break,
                Some(t) => t.map_err(|_| bad())? as usize,
            };
            let mut next = || tokens.next().ok_or_else(bad)?.map_err(|_| bad());
            weights.push(next()?);
            let mut a = DMatrix::zeros(d, k);
            for r in 0..d {
                for c in 0..k {
                    a[(r, c)] = next()?;
                }
            }
            maps.push(a);
        }
        Self::new(maps, weights)
    }

    /// Inverse of [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.dim);
        for (a, w) in self.maps.iter().zip(&self.weights) {
            let _ = writeln!(s, "{}\n{:.16e}", a.ncols(), w);
            for r in 0..a.nrows() {
                let row: Vec<String> = (0..a.ncols()).map(|c| format!("{:.16e}", a[(r, c)])).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }

    fn pullback(&self, i: usize, x: &SpdMatrix) -> Result<SpdMatrix> {
        let a = &self.maps[i];
        SpdMatrix::new(a.transpose() * x.as_matrix() * a)
            .map_err(|_| Error::DomainError(format!("pullback through map {i} not positive definite")))
    }
}

/// `F(X) = −log det X + Σ w_i log det(A_iᵀ X A_i)`.
pub fn bl_objective(datum: &BlDatum, x: &SpdMatrix) -> Result<f64> {
    let mut v = -x.logdet()?;
    for i in 0..datum.maps.len() {
        v += datum.weights[i] * datum.pullback(i, x)?.logdet()?;
    }
    Ok(v)
}

impl DcProblem for BlDatum {
    type P = SpdMatrix;

    fn eval_f(&self, x: &SpdMatrix) -> f64 {
        -x.logdet().unwrap_or(f64::NAN)
    }

    fn eval_h(&self, x: &SpdMatrix) -> f64 {
        let mut v = 0.0;
        for i in 0..self.maps.len() {
            match self.pullback(i, x).and_then(|p| p.logdet()) {
                Ok(ld) => v -= self.weights[i] * ld,
                Err(_) => return f64::NAN,
            }
        }
        v
    }

    // ∇h = −Σ w_i A_i (A_iᵀ X A_i)⁻¹ A_iᵀ
    fn grad_h(&self, x: &SpdMatrix) -> SymMatrix {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (i, a) in self.maps.iter().enumerate() {
            if let Ok(inv) = self.pullback(i, x).and_then(|p| p.inverse()) {
                g -= a * inv.as_matrix() * a.transpose() * self.weights[i];
            }
        }
        SymMatrix::from_average(g)
    }

    fn oracle(&self, g: &SymMatrix, _anchor: &SpdMatrix) -> Result<SpdMatrix> {
        bl_oracle(g)
    }
}

/// Surrogate minimizer for f = −log det: `X = (−g)⁻¹`.
pub fn bl_oracle(g: &SymMatrix) -> Result<SpdMatrix> {
    let neg = SpdMatrix::new(-g.as_matrix()).map_err(|_| Error::SingularAggregate)?;
    neg.inverse()
}

/// One-anchor upper bound on the constant: the surrogate value at `x`
/// anchored at `anchor` majorizes F(x).
pub fn bl_surrogate_bound(datum: &BlDatum, x: &SpdMatrix, anchor: &SpdMatrix) -> f64 {
    crate::solver::surrogate_value(datum, x, anchor)
}

/// Minimize F from the identity with a Frobenius gauge; returns the optimal
/// value (the log BL constant), the gauged minimizer and the trace.
pub fn bl_constant(
    datum: &BlDatum,
    cfg: &SolverConfig,
) -> Result<(f64, SpdMatrix, IterateTrace)> {
    let gauged = GaugedBl { inner: datum };
    let (x, trace) = solve(&gauged, SpdMatrix::identity(datum.dim), cfg)?;
    let value = bl_objective(datum, &x)?;
    Ok((value, x, trace))
}

/// Wrapper that renormalizes each oracle output to `‖X‖_F = √d`. When the
/// datum is scale invariant this leaves the objective sequence untouched and
/// pins the iterates to a compact set; drift toward singularity (κ beyond
/// the conditioning guard) is reported as divergence of the infimum.
struct GaugedBl<'a> {
    inner: &'a BlDatum,
}

impl DcProblem for GaugedBl<'_> {
    type P = SpdMatrix;

    fn eval_f(&self, x: &SpdMatrix) -> f64 {
        self.inner.eval_f(x)
    }

    fn eval_h(&self, x: &SpdMatrix) -> f64 {
        self.inner.eval_h(x)
    }

    fn grad_h(&self, x: &SpdMatrix) -> SymMatrix {
        self.inner.grad_h(x)
    }

    fn oracle(&self, g: &SymMatrix, anchor: &SpdMatrix) -> Result<SpdMatrix> {
        let raw = self.inner.oracle(g, anchor)?;
        let target = (self.inner.dim as f64).sqrt();
        let scaled = raw.scale(target / raw.frob_norm())?;
        if scaled.condition_number()? > CONDITION_WARN {
            return Err(Error::DivergenceDetected);
        }
        Ok(scaled)
    }
}
