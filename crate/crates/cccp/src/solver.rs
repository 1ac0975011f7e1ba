//! Generic Euclidean CCCP engine: exact scheme, inexact variant, trace
//! recording.
//!
//! Each iteration linearizes the concave part `−h` at the current iterate and
//! hands the gradient to a problem-supplied oracle that globally minimizes
//! the convex surrogate `Q(x, x_k) = f(x) − h(x_k) − ⟨∇h(x_k), x − x_k⟩`
//! over the manifold.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::point::Point;

/// A difference-of-convex problem `φ = f − h` over points of type `Self::P`,
/// with a surrogate-minimizer oracle.
pub trait DcProblem {
    type P: Point;

    fn eval_f(&self, x: &Self::P) -> f64;
    fn eval_h(&self, x: &Self::P) -> f64;
    /// Euclidean gradient of the convex part `h`.
    fn grad_h(&self, x: &Self::P) -> <Self::P as Point>::Grad;
    /// Global minimizer of `f(x) − ⟨g, x⟩` over the manifold.
    fn oracle(&self, g: &<Self::P as Point>::Grad, anchor: &Self::P) -> Result<Self::P>;
    /// Euclidean smoothness constant of `h`, when known.
    fn smoothness_l(&self) -> Option<f64> {
        None
    }

    fn objective(&self, x: &Self::P) -> f64 {
        self.eval_f(x) - self.eval_h(x)
    }
}

/// Run parameters shared by all solver variants.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when `|φ_k − φ_{k−1}| ≤ tol · max(1, |φ_k|)`; zero disables
    /// the objective test entirely (step-based stopping only).
    pub objective_tol: f64,
    /// Stop when the Riemannian step `d(X_k, X_{k+1})` falls below this.
    pub step_tol: f64,
    pub record_trace: bool,
    /// Seed for the incremental variant's index sampling.
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            objective_tol: 1e-10,
            step_tol: 1e-9,
            record_trace: true,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::DomainError("max_iters must be ≥ 1".into()));
        }
        if self.objective_tol < 0.0 || self.step_tol < 0.0 {
            return Err(Error::DomainError("tolerances must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// One row of a solver trace.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub k: usize,
    /// Objective at the start of the step, `φ(X_k)`.
    pub phi: f64,
    /// Surrogate value `Q(X_{k+1}, X_k)`; NaN on the terminal row.
    pub surrogate: f64,
    pub step_frob: f64,
    pub step_riem: f64,
    /// Inexactness slack reported by the inner solver, when applicable.
    pub eta: Option<f64>,
    pub wall_ns: u128,
}

/// Per-iteration solver trace; exports the shared CSV schema
/// `k,phi,Q,step_frob,step_riem,eta,wall_ns`.
#[derive(Debug, Clone, Default)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of oracle invocations performed (terminal row carries none).
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| !r.surrogate.is_nan()).count()
    }

    pub fn final_phi(&self) -> Option<f64> {
        self.records.last().map(|r| r.phi)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.phi)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,phi,Q,step_frob,step_riem,eta,wall_ns")?;
        for r in &self.records {
            let q = if r.surrogate.is_nan() { String::new() } else { format!("{:.17e}", r.surrogate) };
            let eta = r.eta.map(|e| format!("{e:.17e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{:.17e},{},{:.17e},{:.17e},{},{}",
                r.k, r.phi, q, r.step_frob, r.step_riem, eta, r.wall_ns
            )?;
        }
        Ok(())
    }
}

/// Surrogate value `Q(x, anchor) = f(x) − h(anchor) − ⟨∇h(anchor), x − anchor⟩`.
///
/// `Q(anchor, anchor) = φ(anchor)` exactly, and `Q(·, anchor)` majorizes `φ`
/// whenever `h` is convex.
pub fn surrogate_value<Pb: DcProblem + ?Sized>(p: &Pb, x: &Pb::P, anchor: &Pb::P) -> f64 {
    let g = p.grad_h(anchor);
    p.eval_f(x) - p.eval_h(anchor) - (Pb::P::pair(&g, x) - Pb::P::pair(&g, anchor))
}

/// One exact CCCP step: `argmin_x Q(x, x_k)` via the problem oracle.
pub fn cccp_step<Pb: DcProblem + ?Sized>(p: &Pb, x_k: &Pb::P) -> Result<Pb::P> {
    let g = p.grad_h(x_k);
    let next = p.oracle(&g, x_k)?;
    if !next.is_finite() {
        return Err(Error::OracleFailure("oracle returned non-finite point".into()));
    }
    Ok(next)
}

/// Lemma-style check `|Q(Z, anchor) − φ(Z)| ≤ (L/2)‖anchor − Z‖² + 1e−10`.
pub fn surrogate_gap_bound_check<Pb: DcProblem + ?Sized>(
    p: &Pb,
    anchor: &Pb::P,
    z: &Pb::P,
    l: f64,
) -> bool {
    let gap = (surrogate_value(p, z, anchor) - p.objective(z)).abs();
    gap <= 0.5 * l * anchor.euclid_dist(z).powi(2) + 1e-10
}

/// Inner solver for the inexact variant: returns an approximate surrogate
/// minimizer together with its reported additive slack `η_k` on the
/// surrogate value.
pub trait InexactOracle<Pb: DcProblem + ?Sized> {
    fn minimize(
        &mut self,
        p: &Pb,
        g: &<Pb::P as Point>::Grad,
        anchor: &Pb::P,
        eps: f64,
    ) -> Result<(Pb::P, f64)>;
}

enum OracleMode<'a, Pb: DcProblem + ?Sized> {
    Exact,
    Inexact { eps: f64, inner: &'a mut dyn InexactOracle<Pb> },
}

fn run_loop<Pb: DcProblem + ?Sized>(
    p: &Pb,
    x0: Pb::P,
    cfg: &SolverConfig,
    mut mode: OracleMode<'_, Pb>,
) -> Result<(Pb::P, IterateTrace)> {
    cfg.validate()?;
    let mut trace = IterateTrace::default();
    let mut x = x0;
    let mut phi = p.objective(&x);
    if !phi.is_finite() {
        return Err(Error::DomainError(format!("objective at start is {phi}")));
    }

    for k in 0..cfg.max_iters {
        let t0 = Instant::now();
        let g = p.grad_h(&x);
        let step = match &mut mode {
            OracleMode::Exact => p.oracle(&g, &x).map(|x| (x, None)),
            OracleMode::Inexact { eps, inner } => {
                inner.minimize(p, &g, &x, *eps).map(|(x, eta)| (x, Some(eta)))
            }
        };
        let (x_next, eta) = match step {
            Ok(v) => v,
            Err(e) => {
                return Err(Error::Aborted {
                    iteration: k,
                    reason: Box::new(e),
                    partial_trace: Box::new(trace),
                })
            }
        };
        if !x_next.is_finite() {
            return Err(Error::Aborted {
                iteration: k,
                reason: Box::new(Error::OracleFailure("non-finite iterate".into())),
                partial_trace: Box::new(trace),
            });
        }

        let q = surrogate_value(p, &x_next, &x);
        let phi_next = p.objective(&x_next);
        let step_frob = x.euclid_dist(&x_next);
        let step_riem = x.manifold_dist(&x_next)?;
        if cfg.record_trace {
            trace.records.push(IterateRecord {
                k,
                phi,
                surrogate: q,
                step_frob,
                step_riem,
                eta,
                wall_ns: t0.elapsed().as_nanos(),
            });
        }

        let obj_converged = cfg.objective_tol > 0.0
            && (phi_next - phi).abs() <= cfg.objective_tol * f64::max(1.0, phi_next.abs());
        let step_converged = step_riem <= cfg.step_tol;
        x = x_next;
        phi = phi_next;
        if obj_converged || step_converged {
            break;
        }
    }

    if cfg.record_trace {
        let k = trace.records.last().map(|r| r.k + 1).unwrap_or(0);
        trace.records.push(IterateRecord {
            k,
            phi,
            surrogate: f64::NAN,
            step_frob: 0.0,
            step_riem: 0.0,
            eta: None,
            wall_ns: 0,
        });
    }
    Ok((x, trace))
}

/// Exact CCCP (the fixed-oracle majorization-minimization scheme) with
/// practical stopping rules on top of the iteration cap.
pub fn solve<Pb: DcProblem + ?Sized>(
    p: &Pb,
    x0: Pb::P,
    cfg: &SolverConfig,
) -> Result<(Pb::P, IterateTrace)> {
    run_loop(p, x0, cfg, OracleMode::Exact)
}

/// Inexact CCCP: the surrogate is minimized approximately by `inner`, which
/// reports a per-step additive slack `η_k` recorded in the trace.
pub fn solve_inexact<Pb: DcProblem + ?Sized>(
    p: &Pb,
    x0: Pb::P,
    cfg: &SolverConfig,
    eps: f64,
    inner: &mut dyn InexactOracle<Pb>,
) -> Result<(Pb::P, IterateTrace)> {
    if eps < 0.0 {
        return Err(Error::DomainError("eps must be ≥ 0".into()));
    }
    run_loop(p, x0, cfg, OracleMode::Inexact { eps, inner })
}

/// Wraps the problem's exact oracle as an inexact one with η = 0.
pub struct ExactInner;

impl<Pb: DcProblem + ?Sized> InexactOracle<Pb> for ExactInner {
    fn minimize(
        &mut self,
        p: &Pb,
        g: &<Pb::P as Point>::Grad,
        anchor: &Pb::P,
        _eps: f64,
    ) -> Result<(Pb::P, f64)> {
        Ok((p.oracle(g, anchor)?, 0.0))
    }
}


#[cfg(test)]
mod tests {
    use super::test_problems::{Golden, LogRatio};
    use super::*;
    use crate::point::PosVector;

    #[test]
    fn surrogate_anchoring_is_exact() {
        let p = LogRatio;
        let x = PosVector::from_slice(&[1.7]).unwrap();
        assert_eq!(surrogate_value(&p, &x, &x), p.objective(&x));
    }

    #[test]
    fn surrogate_hand_value() {
        // anchor = 1, X = 2: Q = −log 2 + log 2 + 1/2 = 0.5; φ(2) ≈ 0.4055
        let p = LogRatio;
        let anchor = PosVector::from_slice(&[1.0]).unwrap();
        let x = PosVector::from_slice(&[2.0]).unwrap();
        let q = surrogate_value(&p, &x, &anchor);
        assert!((q - 0.5).abs() <= 1e-14);
        let phi = p.objective(&x);
        assert!((phi - (3.0f64.ln() - 2.0f64.ln())).abs() <= 1e-14);
        assert!(q >= phi);
    }

    #[test]
    fn surrogate_majorizes_on_samples() {
        let p = LogRatio;
        let anchor = PosVector::from_slice(&[0.9]).unwrap();
        let mut rng = crate::test_rng(3);
        for _ in 0..1000 {
            let x = PosVector::from_slice(&[rand::Rng::gen_range(&mut rng, 0.05..20.0)]).unwrap();
            let gap = surrogate_value(&p, &x, &anchor) - p.objective(&x);
            assert!(gap >= -1e-10, "majorization violated: {gap}");
        }
    }

    #[test]
    fn golden_problem_converges() {
        let p = Golden;
        let cfg = SolverConfig { objective_tol: 0.0, step_tol: 1e-12, ..Default::default() };
        let (x, trace) = solve(&p, PosVector::from_slice(&[5.0]).unwrap(), &cfg).unwrap();
        assert!((x.as_vector()[0] - Golden::optimum()).abs() <= 1e-8);
        // monotone descent
        let phis: Vec<f64> = trace.objectives().collect();
        for w in phis.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * f64::max(1.0, w[0].abs()));
        }
    }

    #[test]
    fn fixed_point_terminates_quickly() {
        let p = Golden;
        let cfg = SolverConfig::default();
        let xstar = PosVector::from_slice(&[Golden::optimum()]).unwrap();
        let (_, trace) = solve(&p, xstar, &cfg).unwrap();
        assert!(trace.iterations() <= 2);
    }

    #[test]
    fn inexact_with_exact_inner_matches_solve_bitwise() {
        let p = Golden;
        let cfg = SolverConfig::default();
        let x0 = PosVector::from_slice(&[4.2]).unwrap();
        let (_, t1) = solve(&p, x0.clone(), &cfg).unwrap();
        let (_, t2) = solve_inexact(&p, x0, &cfg, 0.0, &mut ExactInner).unwrap();
        assert_eq!(t1.len(), t2.len());
        for (a, b) in t1.records.iter().zip(&t2.records) {
            assert_eq!(a.phi.to_bits(), b.phi.to_bits());
        }
    }

    #[test]
    fn inexact_inner_gradient_descent_rate_shape() {
        // inner solver: 50 plain gradient steps on the scalar surrogate
        struct GdInner;
        impl InexactOracle<Golden> for GdInner {
            fn minimize(
                &mut self,
                p: &Golden,
                g: &nalgebra::DVector<f64>,
                anchor: &PosVector,
                _eps: f64,
            ) -> Result<(PosVector, f64)> {
                let mut x = anchor.as_vector()[0];
                for _ in 0..50 {
                    // d/dx [x − log x − g·x] = 1 − 1/x − g
                    let grad = 1.0 - 1.0 / x - g[0];
                    x = (x - 0.2 * grad).max(1e-6);
                }
                let xp = PosVector::from_slice(&[x])?;
                let exact = p.oracle(g, anchor)?;
                let eta = surrogate_value(p, &xp, anchor) - surrogate_value(p, &exact, anchor);
                Ok((xp, eta.max(0.0)))
            }
        }
        let p = Golden;
        let cfg = SolverConfig { max_iters: 200, ..Default::default() };
        let (x, trace) =
            solve_inexact(&p, PosVector::from_slice(&[6.0]).unwrap(), &cfg, 1e-8, &mut GdInner)
                .unwrap();
        assert!((x.as_vector()[0] - Golden::optimum()).abs() <= 1e-4);
        // gap sequence bounded by C/(k+2): (φ_k − φ*)(k+2) bounded
        let phistar = Golden::optimal_value();
        let mut bound: f64 = 0.0;
        for r in &trace.records {
            bound = bound.max((r.phi - phistar) * (r.k as f64 + 2.0));
        }
        assert!(bound.is_finite() && bound < 50.0);
        // eta recorded
        assert!(trace.records.iter().take(3).all(|r| r.eta.is_some()));
    }

    #[test]
    fn gap_bound_check_holds_and_is_not_vacuous() {
        // h(x) = −log(x+1) on x ≥ 0.5 has L = 1/1.5²
        let p = LogRatio;
        let l = 1.0 / 1.5f64.powi(2);
        let mut rng = crate::test_rng(5);
        let mut failures_at_half_l = 0;
        for _ in 0..200 {
            let a = PosVector::from_slice(&[rand::Rng::gen_range(&mut rng, 0.5..5.0)]).unwrap();
            let z = PosVector::from_slice(&[rand::Rng::gen_range(&mut rng, 0.5..5.0)]).unwrap();
            assert!(surrogate_gap_bound_check(&p, &a, &z, l));
            if !surrogate_gap_bound_check(&p, &a, &z, l / 16.0) {
                failures_at_half_l += 1;
            }
        }
        assert!(failures_at_half_l > 0, "bound check is vacuous");
    }

    #[test]
    fn csv_schema() {
        let p = Golden;
        let cfg = SolverConfig { max_iters: 3, ..Default::default() };
        let (_, trace) = solve(&p, PosVector::from_slice(&[2.0]).unwrap(), &cfg).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("k,phi,Q,step_frob,step_riem,eta,wall_ns\n"));
        // terminal row has an empty Q field
        let last = s.trim_end().lines().last().unwrap();
        assert_eq!(last.split(',').nth(2), Some(""));
    }
}
