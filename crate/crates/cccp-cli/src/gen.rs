//! Deterministic instance generators. Everything is a pure function of the
//! seed, so repeated `generate` runs produce byte-identical files.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cccp::bl::BlDatum;
use cccp::spd::SpdMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0f64)).qr().q()
}

/// PD matrix Q Λ Qᵀ with log-uniform spectrum on [1/κ, 1] (extremes pinned
/// so the condition number is attained).
pub fn random_spd(d: usize, kappa: f64, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let q = random_orthogonal(d, rng);
    let logk = kappa.ln();
    let mut evs: Vec<f64> = (0..d).map(|_| (-rng.gen_range(0.0..1.0) * logk).exp()).collect();
    evs[0] = 1.0;
    if d > 1 {
        evs[d - 1] = 1.0 / kappa;
    }
    let lam = DMatrix::from_diagonal(&DVector::from_vec(evs));
    SpdMatrix::new(&q * lam * q.transpose()).expect("construction is PD")
}

/// Entrywise-positive matrix for the scaling problem.
pub fn random_positive(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.02..4.0f64))
}

/// Elliptical draws with the given shape: Gaussian directions under a random
/// per-sample radial scale.
pub fn elliptical_samples(
    d: usize,
    n: usize,
    shape: &SpdMatrix,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let root = shape.sqrt().expect("shape is PD");
    (0..n)
        .map(|_| {
            let g = DVector::from_fn(d, |_, _| {
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u.ln()).sqrt() * v.cos()
            });
            let radial = rng.gen_range(-1.5..1.5f64).exp();
            root.as_matrix() * g * radial
        })
        .collect()
}

/// Geometric BL datum: cyclic k-column windows of one orthogonal frame with
/// weights 1/k, so Σ w_i A_i A_iᵀ = I and Σ w_i k_i = d.
pub fn geometric_bl_datum(d: usize, k: usize, rng: &mut ChaCha8Rng) -> BlDatum {
    assert!(k >= 1 && k <= d, "need 1 ≤ k ≤ d");
    let q = random_orthogonal(d, rng);
    let mut maps = Vec::new();
    for s in 0..d {
        let mut a = DMatrix::zeros(d, k);
        for c in 0..k {
            a.set_column(c, &q.column((s + c) % d));
        }
        maps.push(a);
    }
    BlDatum::new(maps, vec![1.0 / k as f64; d]).expect("frame construction is valid")
}
