//! Dense helpers shared by the dynamics, cascade and controller code.

use nalgebra::{DMatrix, DVector};

use crate::error::{CeicError, Result};

/// Relative cutoff below which singular values count as zero in [`pinv`].
pub const PINV_CUTOFF: f64 = 1e-10;
/// Relative threshold for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>, context: &str) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(CeicError::Dimension {
            context: "linear solve",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    match a.clone().lu().solve(b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => Err(CeicError::Singular {
            context: context.to_string(),
            sigma_min: smallest_singular_value(a),
        }),
    }
}

/// Matrix right-hand side version of [`solve`].
pub fn solve_mat(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    match a.clone().lu().solve(b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => Err(CeicError::Singular {
            context: context.to_string(),
            sigma_min: smallest_singular_value(a),
        }),
    }
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Number of singular values above `RANK_THRESHOLD * sigma_max`.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = singular_values(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * smax).count()
}

/// Rank against `RANK_THRESHOLD * max(sigma_max, scale)`.
///
/// A single-entry matrix always has full relative rank, so blocks of a
/// larger system are judged against that system's magnitude.
pub fn scaled_rank(a: &DMatrix<f64>, scale: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.iter().cloned().fold(scale.abs(), f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * smax).count()
}

/// Moore-Penrose pseudo-inverse through the SVD.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = PINV_CUTOFF * smax;
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut out = DMatrix::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

pub fn is_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}
