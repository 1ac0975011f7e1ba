//! S-divergence geometry: divergence evaluation, matrix square roots and
//! weighted barycenters through the CCCP engine.
//!
//! The objective is the unsquared weighted sum `Σ w_i δ_s(X, A_i)`, whose
//! surrogate minimizer is the closed-form map
//! `X ← ½ [Σ w_i (X + A_i)⁻¹]⁻¹`. For atoms {I, M} with equal weights the
//! map reduces to `X ← [(X+I)⁻¹ + (X+M)⁻¹]⁻¹`, whose fixed point is exactly
//! `M^{1/2}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::solver::{solve, DcProblem, IterateTrace, SolverConfig};
use crate::spd::{SpdMatrix, SymMatrix};

/// S-divergence `δ_s(X,Y) = log det((X+Y)/2) − ½ log det X − ½ log det Y`.
pub fn s_divergence(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch { left: x.dim(), right: y.dim() });
    }
    let mid = SpdMatrix::new((x.as_matrix() + y.as_matrix()) * 0.5)?;
    Ok(mid.logdet()? - 0.5 * x.logdet()? - 0.5 * y.logdet()?)
}

/// Weighted barycenter instance: atoms A_i with convex weights.
#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    atoms: Vec<SpdMatrix>,
    weights: Vec<f64>,
    dim: usize,
}

impl BarycenterProblem {
    pub fn new(atoms: Vec<SpdMatrix>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::DomainError("need at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimMismatch { left: atoms.len(), right: weights.len() });
        }
        let dim = atoms[0].dim();
        for a in &atoms {
            if a.dim() != dim {
                return Err(Error::DimMismatch { left: a.dim(), right: dim });
            }
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::DomainError("weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::DomainError(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Self { atoms, weights, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[SpdMatrix] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i δ_s(X, A_i)`.
    pub fn objective_value(&self, x: &SpdMatrix) -> Result<f64> {
        let mut v = 0.0;
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            v += w * s_divergence(x, a)?;
        }
        Ok(v)
    }

    /// First-order stationarity residual `‖2 Σ w_i (X+A_i)⁻¹ − X⁻¹‖_F`,
    /// relative to `‖X⁻¹‖_F`.
    pub fn stationarity_residual(&self, x: &SpdMatrix) -> Result<f64> {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            let inv = SpdMatrix::new(x.as_matrix() + a.as_matrix())?.inverse()?;
            acc += inv.as_matrix() * (2.0 * w);
        }
        let xinv = x.inverse()?;
        Ok((acc - xinv.as_matrix()).norm() / xinv.frob_norm())
    }

    /// Solve from the weighted arithmetic mean of the atoms.
    pub fn solve(&self, cfg: &SolverConfig) -> Result<(SpdMatrix, IterateTrace)> {
        let mut x0 = DMatrix::zeros(self.dim, self.dim);
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            x0 += a.as_matrix() * w;
        }
        solve(self, SpdMatrix::new(x0)?, cfg)
    }
}

impl DcProblem for BarycenterProblem {
    type P = SpdMatrix;

    // f(X) = −½ log det X − ½ Σ w_i log det A_i (constant folded in so that
    // φ equals the divergence sum)
    fn eval_f(&self, x: &SpdMatrix) -> f64 {
        let c: f64 = self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, &w)| w * a.logdet().unwrap_or(f64::NAN))
            .sum();
        -0.5 * x.logdet().unwrap_or(f64::NAN) - 0.5 * c
    }

    // h(X) = −Σ w_i log det((X+A_i)/2)
    fn eval_h(&self, x: &SpdMatrix) -> f64 {
        let mut v = 0.0;
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            let mid = (x.as_matrix() + a.as_matrix()) * 0.5;
            match SpdMatrix::new(mid).and_then(|m| m.logdet()) {
                Ok(ld) => v -= w * ld,
                Err(_) => return f64::NAN,
            }
        }
        v
    }

    fn grad_h(&self, x: &SpdMatrix) -> SymMatrix {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            if let Ok(sum) = SpdMatrix::new(x.as_matrix() + a.as_matrix()) {
                if let Ok(inv) = sum.inverse() {
                    g -= inv.as_matrix() * w;
                }
            }
        }
        SymMatrix::from_average(g)
    }

    // argmin −½ log det X − ⟨g, X⟩: X = ½ (−g)⁻¹
    fn oracle(&self, g: &SymMatrix, _anchor: &SpdMatrix) -> Result<SpdMatrix> {
        let neg = SpdMatrix::new(-g.as_matrix())
            .map_err(|_| Error::OracleFailure("surrogate gradient not negative definite".into()))?;
        neg.inverse()?.scale(0.5)
    }
}

/// Matrix square root via the barycenter of {I, M} with equal weights.
///
/// The pair is scale-preconditioned first (`c = √(‖M⁻¹‖_F/‖M‖_F)` centers
/// the spectrum of cM at 1, which keeps the linear convergence factor small)
/// and the result rescaled by `1/√c`; the solve path never touches an
/// eigendecomposition.
pub fn matrix_sqrt_via_sdiv(m: &SpdMatrix, cfg: &SolverConfig) -> Result<(SpdMatrix, IterateTrace)> {
    let c = (m.inverse()?.frob_norm() / m.frob_norm()).sqrt();
    let ms = m.scale(c)?;
    let p = BarycenterProblem::new(vec![SpdMatrix::identity(m.dim()), ms], vec![0.5, 0.5])?;
    let (x, trace) = p.solve(cfg)?;
    Ok((x.scale(1.0 / c.sqrt())?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_zero_at_equal_args() {
        let mut rng = crate::test_rng(53);
        let x = crate::spd::random_spd(4, 3.0, &mut rng);
        assert!(s_divergence(&x, &x).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn divergence_hand_value() {
        let i = SpdMatrix::identity(1);
        let a = SpdMatrix::from_diagonal(&[4.0]).unwrap();
        let v = s_divergence(&i, &a).unwrap();
        assert!((v - (2.5f64.ln() - 0.5 * 4.0f64.ln())).abs() <= 1e-14);
    }

    #[test]
    fn divergence_symmetric_and_nonnegative() {
        let mut rng = crate::test_rng(59);
        for _ in 0..20 {
            let x = crate::spd::random_spd(3, 4.0, &mut rng);
            let y = crate::spd::random_spd(3, 4.0, &mut rng);
            let d1 = s_divergence(&x, &y).unwrap();
            let d2 = s_divergence(&y, &x).unwrap();
            assert!((d1 - d2).abs() <= 1e-10);
            assert!(d1 >= -1e-12);
        }
    }

    #[test]
    fn congruence_invariance() {
        let mut rng = crate::test_rng(61);
        for _ in 0..10 {
            let x = crate::spd::random_spd(3, 3.0, &mut rng);
            let y = crate::spd::random_spd(3, 3.0, &mut rng);
            let m = DMatrix::from_fn(3, 3, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0))
                + DMatrix::identity(3, 3) * 2.0;
            let xc = SpdMatrix::new(crate::spd::SymMatrix::from_average(
                m.transpose() * x.as_matrix() * &m,
            )
            .into_matrix())
            .unwrap();
            let yc = SpdMatrix::new(crate::spd::SymMatrix::from_average(
                m.transpose() * y.as_matrix() * &m,
            )
            .into_matrix())
            .unwrap();
            let d1 = s_divergence(&x, &y).unwrap();
            let d2 = s_divergence(&xc, &yc).unwrap();
            assert!((d1 - d2).abs() <= 1e-9, "congruence broke: {d1} vs {d2}");
        }
    }

    #[test]
    fn oracle_fixed_point_at_common_atom() {
        let mut rng = crate::test_rng(67);
        let a = crate::spd::random_spd(3, 3.0, &mut rng);
        let p = BarycenterProblem::new(vec![a.clone(), a.clone()], vec![0.5, 0.5]).unwrap();
        let g = p.grad_h(&a);
        let next = p.oracle(&g, &a).unwrap();
        assert!((next.as_matrix() - a.as_matrix()).norm() / a.frob_norm() <= 1e-12);
    }

    #[test]
    fn sqrt_first_iterate_hand_arithmetic() {
        // atoms {I, diag(4,9)} from X0 = I: next = diag(10/7, 5/3)
        let m = SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let p = BarycenterProblem::new(vec![SpdMatrix::identity(2), m], vec![0.5, 0.5]).unwrap();
        let x0 = SpdMatrix::identity(2);
        let next = crate::solver::cccp_step(&p, &x0).unwrap();
        assert!((next.as_matrix()[(0, 0)] - 10.0 / 7.0).abs() <= 1e-14);
        assert!((next.as_matrix()[(1, 1)] - 5.0 / 3.0).abs() <= 1e-14);
    }

    #[test]
    fn sqrt_fixed_point_identity_check() {
        // substituting X = M^{1/2} into the map reproduces M^{1/2}
        let mut rng = crate::test_rng(71);
        let m = crate::spd::random_spd(4, 5.0, &mut rng);
        let s = m.sqrt().unwrap();
        let p =
            BarycenterProblem::new(vec![SpdMatrix::identity(4), m], vec![0.5, 0.5]).unwrap();
        let next = crate::solver::cccp_step(&p, &s).unwrap();
        assert!((next.as_matrix() - s.as_matrix()).norm() / s.frob_norm() <= 1e-10);
    }

    #[test]
    fn sqrt_solves_diagonal_case() {
        let m = SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let cfg = SolverConfig { objective_tol: 0.0, step_tol: 1e-12, ..Default::default() };
        let (x, trace) = matrix_sqrt_via_sdiv(&m, &cfg).unwrap();
        let truth = SpdMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        assert!(crate::spd::riemannian_distance(&x, &truth).unwrap() <= 1e-8);
        assert!(trace.iterations() <= 60, "took {} iterations", trace.iterations());
    }

    #[test]
    fn sqrt_of_identity_is_identity() {
        let (x, _) = matrix_sqrt_via_sdiv(&SpdMatrix::identity(3), &SolverConfig::default()).unwrap();
        assert!((x.as_matrix() - SpdMatrix::identity(3).as_matrix()).norm() <= 1e-9);
    }

    #[test]
    fn single_atom_barycenter_is_the_atom() {
        let mut rng = crate::test_rng(73);
        let a = crate::spd::random_spd(3, 3.0, &mut rng);
        let p = BarycenterProblem::new(vec![a.clone()], vec![1.0]).unwrap();
        let (x, _) = p.solve(&SolverConfig::default()).unwrap();
        assert!((x.as_matrix() - a.as_matrix()).norm() / a.frob_norm() <= 1e-8);
    }

    #[test]
    fn commuting_diagonal_atoms_match_scalar_bisection() {
        // per-coordinate scalar problem: minimize Σ w_i δ_s(x, a_i) over x>0;
        // stationarity: 2 Σ w_i/(x+a_i) = 1/x, solved by bisection
        let atoms_diag = [vec![1.0, 4.0, 0.5], vec![9.0, 2.0, 1.0]];
        let w = [0.3, 0.7];
        let atoms: Vec<SpdMatrix> =
            atoms_diag.iter().map(|d| SpdMatrix::from_diagonal(d).unwrap()).collect();
        let p = BarycenterProblem::new(atoms, w.to_vec()).unwrap();
        let cfg = SolverConfig { step_tol: 1e-13, objective_tol: 0.0, ..Default::default() };
        let (x, _) = p.solve(&cfg).unwrap();
        for j in 0..3 {
            let f = |t: f64| 2.0 * (w[0] / (t + atoms_diag[0][j]) + w[1] / (t + atoms_diag[1][j])) - 1.0 / t;
            let (mut lo, mut hi) = (1e-8, 1e8);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            assert!(
                (x.as_matrix()[(j, j)] - root).abs() <= 1e-8,
                "coordinate {j}: {} vs {root}",
                x.as_matrix()[(j, j)]
            );
        }
        assert!(p.stationarity_residual(&x).unwrap() <= 1e-8);
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = crate::test_rng(79);
        let atoms: Vec<SpdMatrix> = (0..3).map(|_| crate::spd::random_spd(3, 3.0, &mut rng)).collect();
        let w = vec![0.2, 0.5, 0.3];
        // permutation (2,0,1)
        let mut pm = DMatrix::zeros(3, 3);
        pm[(0, 2)] = 1.0;
        pm[(1, 0)] = 1.0;
        pm[(2, 1)] = 1.0;
        let perm_atoms: Vec<SpdMatrix> = atoms
            .iter()
            .map(|a| SpdMatrix::new(pm.transpose() * a.as_matrix() * &pm).unwrap())
            .collect();
        let cfg = SolverConfig { step_tol: 1e-13, objective_tol: 0.0, ..Default::default() };
        let (x, _) = BarycenterProblem::new(atoms, w.clone()).unwrap().solve(&cfg).unwrap();
        let (xp, _) = BarycenterProblem::new(perm_atoms, w).unwrap().solve(&cfg).unwrap();
        let expected = pm.transpose() * x.as_matrix() * &pm;
        assert!((xp.as_matrix() - expected).norm() / x.frob_norm() <= 1e-8);
    }

    #[test]
    fn bad_weights_rejected() {
        let a = SpdMatrix::identity(2);
        assert!(BarycenterProblem::new(vec![a.clone()], vec![0.9]).is_err());
        assert!(BarycenterProblem::new(vec![a.clone(), a], vec![1.5, -0.5]).is_err());
    }
}
