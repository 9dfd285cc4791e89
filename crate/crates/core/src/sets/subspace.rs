use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::sample_rng;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Linear subspace spanned by the orthonormal columns of an `n x p` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (n, p) = basis.shape();
        if n == 0 || p == 0 || p > n {
            return Err(Error::InvalidSet(format!(
                "subspace basis must be n x p with 1 <= p <= n, got {n} x {p}"
            )));
        }
        let gram = basis.tr_mul(&basis);
        let dev = (gram - DMatrix::<f64>::identity(p, p)).amax();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::InvalidSet(format!(
                "subspace basis columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Subspace { basis })
    }

    pub fn from_row_major(n: usize, p: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::InvalidSet(format!(
                "basis has {} entries, expected {n} x {p}",
                data.len()
            )));
        }
        Subspace::new(DMatrix::from_row_slice(n, p, data))
    }

    /// Span of the first `p` coordinate axes.
    pub fn coordinate(n: usize, p: usize) -> Result<Self> {
        let mut basis = DMatrix::zeros(n, p);
        for j in 0..p.min(n) {
            basis[(j, j)] = 1.0;
        }
        Subspace::new(basis)
    }

    /// Uniformly random `p`-dimensional subspace (QR of a Gaussian matrix).
    pub fn random(n: usize, p: usize, seed: u64) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidSet(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
        }
        let mut rng = sample_rng(seed, u64::MAX);
        let g = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let q = g.qr().q();
        Subspace::new(q)
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Coordinates `B^T y` of the projection in the basis.
    pub fn coefficients(&self, y: &[f64]) -> DVector<f64> {
        self.basis.tr_mul(&DVector::from_column_slice(y))
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        (&self.basis * self.coefficients(y)).as_slice().to_vec()
    }
}
