//! Point and gradient abstractions shared by the solvers.
//!
//! The CCCP engine is generic over the point shape: full SPD matrices for
//! the matrix applications, and entrywise-positive vectors (diagonal PD
//! matrices) for matrix scaling, where g-convexity reduces to ordinary
//! convexity on the positive orthant.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::spd::{riemannian_distance, SpdMatrix, SymMatrix};

/// Euclidean gradient living in the ambient linear space of a point type.
pub trait Gradient: Clone {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn norm(&self) -> f64;
}

/// A point on the manifold underlying a DC problem.
pub trait Point: Clone {
    type Grad: Gradient;

    /// Ambient inner product `⟨g, x⟩`.
    fn pair(g: &Self::Grad, x: &Self) -> f64;
    /// Euclidean (Frobenius) distance `‖x − y‖`.
    fn euclid_dist(&self, other: &Self) -> f64;
    /// Geodesic distance on the manifold.
    fn manifold_dist(&self, other: &Self) -> Result<f64>;
    fn is_finite(&self) -> bool;
}

impl Gradient for SymMatrix {
    fn add(&self, other: &Self) -> Self {
        SymMatrix::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        SymMatrix::sub(self, other)
    }
    fn scale(&self, c: f64) -> Self {
        SymMatrix::scale(self, c)
    }
    fn norm(&self) -> f64 {
        self.frob_norm()
    }
}

impl Point for SpdMatrix {
    type Grad = SymMatrix;

    fn pair(g: &SymMatrix, x: &Self) -> f64 {
        g.as_matrix().dot(x.as_matrix())
    }
    fn euclid_dist(&self, other: &Self) -> f64 {
        (self.as_matrix() - other.as_matrix()).norm()
    }
    fn manifold_dist(&self, other: &Self) -> Result<f64> {
        riemannian_distance(self, other)
    }
    fn is_finite(&self) -> bool {
        SpdMatrix::is_finite(self)
    }
}

/// Entrywise-positive vector: a point on the positive orthant, i.e. the
/// diagonal slice of the PD manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct PosVector {
    v: DVector<f64>,
}

impl PosVector {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::DomainError("vector entries must be positive and finite".into()));
        }
        Ok(Self { v })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(v))
    }

    pub fn ones(dim: usize) -> Self {
        Self { v: DVector::repeat(dim, 1.0) }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.v
    }
}

impl Gradient for DVector<f64> {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn norm(&self) -> f64 {
        nalgebra::DVector::norm(self)
    }
}

impl Point for PosVector {
    type Grad = DVector<f64>;

    fn pair(g: &DVector<f64>, x: &Self) -> f64 {
        g.dot(&x.v)
    }
    fn euclid_dist(&self, other: &Self) -> f64 {
        (&self.v - &other.v).norm()
    }
    fn manifold_dist(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { left: self.dim(), right: other.dim() });
        }
        // distance for diagonal PD matrices: ‖log x − log y‖₂
        let mut sum = 0.0;
        for i in 0..self.dim() {
            let l = (self.v[i] / other.v[i]).ln();
            sum += l * l;
        }
        Ok(sum.sqrt())
    }
    fn is_finite(&self) -> bool {
        self.v.iter().all(|x| x.is_finite())
    }
}
