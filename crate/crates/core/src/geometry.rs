//! Rank detection and dimensionality reduction of arm sets.
//!
//! Reducing onto an orthonormal basis `B` of `span{a(i)}` preserves every
//! inner product with parameters in that span: `<theta, a> = <B^T theta, B^T a>`.

use nalgebra::{DMatrix, Dyn, SVD};

use crate::arms::ArmSet;
use crate::error::{Error, Result};

/// Relative singular-value threshold used for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Orthonormal basis of the span of an arm set, stored as a `d x d'` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: DMatrix<f64>,
}

impl Basis {
    /// `d'`, the number of basis columns.
    pub fn effective_dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Orthogonal projector `B B^T` onto the spanned subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.columns * self.columns.transpose()
    }
}

fn reversed_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(m.nrows() - 1 - i, j)])
}

fn reversed_cols(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, m.ncols() - 1 - j)])
}

/// Full SVD whose reconstruction has been checked.
///
/// nalgebra's bidiagonal iteration occasionally returns an inaccurate
/// factorization of rank-deficient inputs, so a bad result is retried on the
/// transpose and on row- and column-reversed copies, and the factors are
/// mapped back.
pub(crate) fn checked_svd(m: &DMatrix<f64>) -> Result<SVD<f64, Dyn, Dyn>> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-11 * scale * m.nrows().max(m.ncols()).max(1) as f64;
    let accept = |svd: SVD<f64, Dyn, Dyn>| -> Option<SVD<f64, Dyn, Dyn>> {
        let u = svd.u.as_ref()?;
        let v_t = svd.v_t.as_ref()?;
        let rec = u * DMatrix::from_diagonal(&svd.singular_values) * v_t;
        ((rec - m).amax() <= tol).then_some(svd)
    };
    let attempts: [&dyn Fn() -> SVD<f64, Dyn, Dyn>; 4] = [
        &|| SVD::new(m.clone(), true, true),
        &|| {
            let t = SVD::new(m.transpose(), true, true);
            SVD {
                u: t.v_t.map(|v| v.transpose()),
                v_t: t.u.map(|u| u.transpose()),
                singular_values: t.singular_values,
            }
        },
        &|| {
            let t = SVD::new(reversed_rows(m), true, true);
            SVD {
                u: t.u.map(|u| reversed_rows(&u)),
                ..t
            }
        },
        &|| {
            let t = SVD::new(reversed_cols(m), true, true);
            SVD {
                v_t: t.v_t.map(|v| reversed_cols(&v)),
                ..t
            }
        },
    ];
    attempts
        .iter()
        .find_map(|f| accept(f()))
        .ok_or(Error::SvdFailed)
}

/// Singular values of the `K x d` arm matrix, largest first.
fn sorted_singular_values(arms: &ArmSet) -> Result<Vec<f64>> {
    let mut sv: Vec<f64> = checked_svd(arms.matrix())?.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn rank_from_singular_values(sv: &[f64], tol: f64) -> Result<usize> {
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest <= 0.0 || !largest.is_finite() {
        return Err(Error::ZeroSpan);
    }
    Ok(sv.iter().filter(|&&s| s > tol * largest).count())
}

/// Number of singular values above `tol` times the largest one.
pub fn effective_dimension(arms: &ArmSet, tol: f64) -> Result<usize> {
    rank_from_singular_values(&sorted_singular_values(arms)?, tol)
}

/// Orthonormal basis of `span{a(i)}` from a reduced SVD.
///
/// Columns follow descending singular values; each column's first
/// non-negligible entry is made nonnegative.
pub fn orthonormal_basis(arms: &ArmSet, tol: f64) -> Result<Basis> {
    // columns of A^T are the arm vectors, so its left singular vectors span them
    let svd = checked_svd(&arms.matrix().transpose())?;
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
    let rank = rank_from_singular_values(&sorted, tol)?;

    let d = arms.dim();
    let mut columns = DMatrix::zeros(d, rank);
    for (out, &src) in order.iter().take(rank).enumerate() {
        let mut col = u.column(src).into_owned();
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
        columns.set_column(out, &col);
    }
    Ok(Basis { columns })
}

/// Coordinates `B^T a(i)` of every arm in the basis.
pub fn reduce(arms: &ArmSet, basis: &Basis) -> Result<ArmSet> {
    if arms.dim() != basis.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.ambient_dim(),
            found: arms.dim(),
        });
    }
    ArmSet::from_matrix(arms.matrix() * basis.matrix())
}

/// Rank plus, when the arms do not span their ambient space, the reduced set.
pub(crate) fn reduce_if_deficient(arms: &ArmSet, tol: f64) -> Result<(usize, Option<ArmSet>)> {
    let rank = effective_dimension(arms, tol)?;
    if rank == arms.dim() {
        return Ok((rank, None));
    }
    let basis = orthonormal_basis(arms, tol)?;
    Ok((rank, Some(reduce(arms, &basis)?)))
}
