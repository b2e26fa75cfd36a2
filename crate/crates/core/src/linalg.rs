//! Small dense linear-algebra helpers shared by the jet kernel and the
//! invariant computations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Max-abs difference scaled by `1 + max_abs(reference)`.
pub fn scaled_diff(value: &Mat, reference: &Mat) -> f64 {
    max_abs(&(value - reference)) / (1.0 + max_abs(reference))
}

/// 2-norm condition number; infinite when the matrix is numerically singular.
pub fn condition_number(m: &Mat) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, refused when the condition number exceeds `limit`.
pub fn checked_inverse(m: &Mat, limit: f64) -> Result<Mat> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            op: "inverse",
            left: m.shape(),
            right: m.shape(),
        });
    }
    let condition = condition_number(m);
    if !(condition < limit) {
        return Err(Error::IllConditioned { condition, limit });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition, limit })
}

/// Diagonal matrix scaling every nonzero column to unit Euclidean norm.
pub fn column_scaling(m: &Mat) -> Mat {
    let scales: Vec<f64> = m
        .column_iter()
        .map(|c| {
            let norm = c.norm();
            if norm > 0.0 { 1.0 / norm } else { 1.0 }
        })
        .collect();
    Mat::from_diagonal(&nalgebra::DVector::from_vec(scales))
}

/// Inverse computed as `S (m S)^-1` with columns of `m S` equilibrated, so the
/// condition limit applies to the equilibrated matrix.
pub fn equilibrated_inverse(m: &Mat, limit: f64) -> Result<Mat> {
    let scale = column_scaling(m);
    Ok(&scale * checked_inverse(&(m * &scale), limit)?)
}

/// Numerical rank from a column-pivoted QR: diagonal entries of R below
/// `rel_tol * |R_00|` count as zero.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let r = m.clone().col_piv_qr().unpack_r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let lead = diag.iter().cloned().fold(0.0_f64, f64::max);
    if lead == 0.0 {
        return 0;
    }
    diag.iter().filter(|d| **d > rel_tol * lead).count()
}

/// Orthonormal basis of the column space of a full-column-rank matrix.
pub fn orthonormal_columns(m: &Mat) -> Mat {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    u.columns(0, m.ncols()).into_owned()
}

/// Sine of the largest principal angle between the column spans of `a` and `b`.
///
/// Both matrices must have full column rank; spans of different dimension are
/// at distance 1.
pub fn subspace_distance(a: &Mat, b: &Mat) -> f64 {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return 1.0;
    }
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    let residual = &qa - &qb * (qb.transpose() * &qa);
    residual.svd(false, false).singular_values.max().min(1.0)
}

/// Orthonormal basis of the `dim` right singular directions of `m - lambda I`
/// with the smallest singular values.
pub fn approximate_eigenspace(m: &Mat, lambda: f64, dim: usize) -> Mat {
    let n = m.nrows();
    let shifted = m - Mat::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    // singular values come sorted in decreasing order
    v_t.rows(n - dim, dim).transpose()
}

pub fn block(m: &Mat, row_block: usize, col_block: usize, n: usize) -> Mat {
    m.view((row_block * n, col_block * n), (n, n)).into_owned()
}

pub fn set_block(m: &mut Mat, row_block: usize, col_block: usize, value: &Mat) {
    let (r, c) = value.shape();
    m.view_mut((row_block * r, col_block * c), (r, c)).copy_from(value);
}

/// Block-diagonal matrix with `count` copies of `x`.
pub fn block_diagonal(x: &Mat, count: usize) -> Mat {
    let n = x.nrows();
    let mut out = Mat::zeros(n * count, n * count);
    for i in 0..count {
        out.view_mut((i * n, i * n), (n, n)).copy_from(x);
    }
    out
}

/// `E_j`: the `kn x n` block column with an identity in block row `j`.
pub fn canonical_block_column(k: usize, n: usize, j: usize) -> Mat {
    let mut e = Mat::zeros(k * n, n);
    e.view_mut((j * n, 0), (n, n)).fill_with_identity();
    e
}

/// The nilpotent matrix with superdiagonal blocks `1 I, 2 I, ..., (k-1) I`.
pub fn shift_nilpotent(k: usize, n: usize) -> Mat {
    let mut out = Mat::zeros(k * n, k * n);
    for j in 1..k {
        let scaled = Mat::identity(n, n) * j as f64;
        set_block(&mut out, j - 1, j, &scaled);
    }
    out
}
