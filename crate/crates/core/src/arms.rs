//! Finite sets of arm vectors.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{self, DEFAULT_RANK_TOL};

/// An ordered collection of `K` arm vectors in a common ambient dimension.
///
/// Stored row-major as a `K x d` matrix: row `i` is arm `i`.
#[derive(Debug, Clone)]
pub struct ArmSet {
    rows: DMatrix<f64>,
    rank: OnceLock<usize>,
}

impl PartialEq for ArmSet {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl ArmSet {
    pub fn new(arms: &[Vec<f64>]) -> Result<Self> {
        let k = arms.len();
        if k == 0 {
            return Err(Error::invalid("arm set must contain at least one arm"));
        }
        let d = arms[0].len();
        if d == 0 {
            return Err(Error::invalid("arm vectors must have positive dimension"));
        }
        if let Some(bad) = arms.iter().find(|a| a.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let rows = DMatrix::from_fn(k, d, |i, j| arms[i][j]);
        Self::from_matrix(rows)
    }

    /// Wraps a `K x d` matrix whose rows are the arm vectors.
    pub fn from_matrix(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::invalid("arm set must be non-empty"));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("arm vectors"));
        }
        Ok(Self {
            rows,
            rank: OnceLock::new(),
        })
    }

    /// The standard basis `e_1, ..., e_d`.
    pub fn standard_basis(d: usize) -> Self {
        Self {
            rows: DMatrix::identity(d, d),
            rank: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn arm(&self, i: usize) -> DVector<f64> {
        self.rows.row(i).transpose()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| self.rows.row(i).iter().copied().collect())
            .collect()
    }

    /// Arms at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::ArmOutOfRange {
                arm: bad,
                k: self.len(),
            });
        }
        if indices.is_empty() {
            return Err(Error::invalid("subset must be non-empty"));
        }
        let rows = DMatrix::from_fn(indices.len(), self.dim(), |i, j| self.rows[(indices[i], j)]);
        Self::from_matrix(rows)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: &self.rows * c,
            rank: OnceLock::new(),
        }
    }

    /// Numerical rank at the default relative tolerance, cached.
    pub fn rank(&self) -> usize {
        *self.rank.get_or_init(|| {
            geometry::effective_dimension(self, DEFAULT_RANK_TOL).unwrap_or(0)
        })
    }

    /// Expected rewards `<theta, a(i)>` for every arm.
    pub fn rewards(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        Ok(&self.rows * theta)
    }

    /// Pairwise inner products `A A^T`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.rows * self.rows.transpose()
    }
}
