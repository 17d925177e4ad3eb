use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::io::MatrixFile;

/// Relative rank tolerance below which an operator counts as not bounded below.
pub(crate) const RANK_TOL: f64 = 1e-12;

/// An m×n real matrix with its extreme singular values cached.
///
/// `sigma_min` is `inf ‖Ty‖₂/‖y‖₂`, which is zero whenever `m < n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
    sigma_max: f64,
    sigma_min: f64,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::invalid("operator matrix must be non-empty"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("operator matrix has non-finite entries"));
        }
        let (sigma_min, sigma_max) = extreme_singular_values(&matrix);
        Ok(Self { matrix, sigma_max, sigma_min })
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is valid")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Operator norm ‖T‖₂.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn norm(&self) -> f64 {
        self.sigma_max
    }

    pub fn is_bounded_below(&self) -> bool {
        self.rows() >= self.cols() && self.sigma_min > RANK_TOL * self.sigma_max
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub fn transpose(&self) -> DenseOperator {
        let mut t = Self::new(self.matrix.transpose()).expect("transpose of valid matrix");
        // keep identical spectra instead of a second, slightly different SVD
        if t.rows() == t.cols() {
            t.sigma_min = self.sigma_min;
        }
        t.sigma_max = self.sigma_max;
        t
    }

    /// Moore–Penrose left inverse `T†` with `T†T = I`.
    pub fn left_inverse(&self) -> Result<DenseOperator> {
        if !self.is_bounded_below() {
            return Err(Error::NoLeftInverse { sigma_min: self.sigma_min });
        }
        let svd = self.matrix.clone().svd(true, true);
        let pinv = svd
            .pseudo_inverse(RANK_TOL * self.sigma_max)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(pinv)
    }
}

impl TryFrom<MatrixFile> for DenseOperator {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        Self::from_row_slice(f.rows, f.cols, &f.data)
    }
}

impl From<DenseOperator> for MatrixFile {
    fn from(op: DenseOperator) -> MatrixFile {
        MatrixFile::from_matrix(&op.matrix)
    }
}

fn extreme_singular_values(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.singular_values();
    let max = sv.iter().fold(0.0f64, |a, b| a.max(*b));
    let min = if m.nrows() < m.ncols() {
        0.0
    } else {
        sv.iter().fold(f64::INFINITY, |a, b| a.min(*b))
    };
    (min, max)
}

/// `(sigma_min, sigma_max)` of an operator.
pub fn singular_bounds(t: &DenseOperator) -> (f64, f64) {
    (t.sigma_min, t.sigma_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn singular_values_of_examples() {
        assert_eq!(singular_bounds(&DenseOperator::identity(3)), (1.0, 1.0));
        let d = DenseOperator::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]).unwrap();
        let (lo, hi) = singular_bounds(&d);
        assert_relative_eq!(lo, 0.5, max_relative = 1e-12);
        assert_relative_eq!(hi, 2.0, max_relative = 1e-12);

        // TᵀT has eigenvalues (3 ± √5)/2
        let t = DenseOperator::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let (lo, hi) = singular_bounds(&t);
        let s5 = 5f64.sqrt();
        assert_relative_eq!(lo, ((3.0 - s5) / 2.0).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(hi, ((3.0 + s5) / 2.0).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn left_inverse_examples() {
        let id = DenseOperator::identity(3);
        let inv = id.left_inverse().unwrap();
        assert!((inv.matrix() - DMatrix::identity(3, 3)).abs().max() < 1e-14);

        let col = DenseOperator::from_row_slice(2, 1, &[1.0, 1.0]).unwrap();
        let inv = col.left_inverse().unwrap();
        assert_eq!((inv.rows(), inv.cols()), (1, 2));
        assert_relative_eq!(inv.matrix()[(0, 0)], 0.5, max_relative = 1e-12);
        assert_relative_eq!(inv.matrix()[(0, 1)], 0.5, max_relative = 1e-12);

        let ones = DenseOperator::from_row_slice(2, 2, &[1.0; 4]).unwrap();
        assert!(matches!(ones.left_inverse(), Err(Error::NoLeftInverse { .. })));
    }

    #[test]
    fn left_inverse_of_random_tall_matrix() {
        let t = DenseOperator::new(crate::rng::gaussian_matrix(5, 7, 4)).unwrap();
        assert!(t.is_bounded_below());
        let inv = t.left_inverse().unwrap();
        let err = inv.matrix() * t.matrix() - DMatrix::identity(4, 4);
        assert!(err.abs().max() < 1e-10);
        assert_relative_eq!(inv.norm(), 1.0 / t.sigma_min(), max_relative = 1e-8);
    }

    #[test]
    fn wide_matrices_are_not_bounded_below() {
        let t = DenseOperator::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(t.sigma_min(), 0.0);
        assert!(!t.is_bounded_below());
        assert!(t.left_inverse().is_err());
    }

    #[test]
    fn recompute_consistency() {
        let t = DenseOperator::new(crate::rng::gaussian_matrix(9, 6, 6)).unwrap();
        let sv = t.matrix().singular_values();
        let hi = sv.max();
        let lo = sv.min();
        assert!((t.sigma_max() - hi).abs() <= 1e-10 * hi);
        assert!((t.sigma_min() - lo).abs() <= 1e-10 * hi);
        assert!(t.sigma_min() <= t.sigma_max());
    }
}
