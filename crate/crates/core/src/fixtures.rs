//! Seeded test curves and transformations.

use rand::Rng;

use crate::curves::{FrameCurve, FrameJet, PolynomialFrameCurve, PolynomialMatrix};
use crate::matjet::MatrixJet;
use crate::error::Result;
use crate::linalg::{canonical_block_column, condition_number, factorial, Mat};

/// Condition bound for random group elements.
pub const MAX_FIXTURE_CONDITION: f64 = 100.0;

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random element of `GL(size)` with condition number below 100.
pub fn random_gl<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Mat {
    loop {
        let m = Mat::identity(size, size) + random_matrix(rng, size, size) * 0.6;
        let scaled = m * rng.random_range(0.5..2.0);
        if condition_number(&scaled) < MAX_FIXTURE_CONDITION {
            return scaled;
        }
    }
}

/// Random polynomial `X(t)` with `X(t) = c I + small` invertible near `[0, 1]`.
pub fn random_polynomial_gl<R: Rng + ?Sized>(rng: &mut R, n: usize, degree: usize) -> PolynomialMatrix {
    let mut coeffs = vec![Mat::identity(n, n) * 2.0 + random_matrix(rng, n, n) * 0.3];
    for _ in 0..degree {
        coeffs.push(random_matrix(rng, n, n) * 0.3);
    }
    PolynomialMatrix::new(coeffs).expect("coefficients share one shape")
}

/// `sum_(j<k) t^j / j! E_j + eps * sum_(d<=degree) t^d / d! R_d`, resampled
/// until it is comfortably fanning on `[0, 1]`.
pub fn random_fanning_curve<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    n: usize,
    degree: usize,
    eps: f64,
) -> Result<PolynomialFrameCurve> {
    loop {
        let coeffs = (0..=degree.max(k - 1))
            .map(|d| {
                let base = if d < k { canonical_block_column(k, n, d) } else { Mat::zeros(k * n, n) };
                (base + random_matrix(rng, k * n, n) * eps) / factorial(d)
            })
            .collect();
        let curve = PolynomialFrameCurve::new(k, n, coeffs)?;
        if is_fanning_on_unit_interval(&curve, FIXTURE_FANNING_LIMIT)? {
            return Ok(curve);
        }
    }
}

/// Random fanning jet at `t = 0` with derivatives `A^(j)(0) = E_j + eps R_j`
/// (`E_j = 0` for `j >= k`), resampled until the juxtaposed matrix has
/// condition below `1e3`.
pub fn random_fanning_jet<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize, order: usize, eps: f64) -> Result<FrameJet> {
    loop {
        let derivatives = (0..=order)
            .map(|j| {
                let base = if j < k { canonical_block_column(k, n, j) } else { Mat::zeros(k * n, n) };
                base + random_matrix(rng, k * n, n) * eps
            })
            .collect();
        let fj = FrameJet::new(k, n, MatrixJet::from_derivatives(0.0, derivatives)?)?;
        if condition_number(fj.juxtaposed().value()) < 1e3 {
            return Ok(fj);
        }
    }
}

/// Equilibrated condition bound that fixture curves keep on `[0, 1]`.
pub const FIXTURE_FANNING_LIMIT: f64 = 1e4;

/// Condition below `limit` on a fine grid of `[0, 1]`, with no sign change of
/// the juxtaposed determinant in between.
pub fn is_fanning_on_unit_interval(curve: &PolynomialFrameCurve, limit: f64) -> Result<bool> {
    let mut sign = 0.0;
    for i in 0..=100 {
        let fj = curve.frame_jet(i as f64 / 100.0, curve.k() - 1)?;
        if !(fj.condition() < limit) {
            return Ok(false);
        }
        let s = fj.juxtaposed().value().determinant().signum();
        if sign != 0.0 && s != sign {
            return Ok(false);
        }
        sign = s;
    }
    Ok(true)
}

/// `(T A(t)) X0` for a polynomial curve.
pub fn transform_curve(curve: &PolynomialFrameCurve, t: &Mat, x0: &Mat) -> Result<PolynomialFrameCurve> {
    curve
        .left_transform(t)?
        .right_multiply(&PolynomialMatrix::constant(x0.clone()))
}

/// Taylor coefficients of `tan t` at 0 up to `degree`, from `tan' = 1 + tan^2`.
pub fn tan_series(degree: usize) -> Vec<f64> {
    let mut a = vec![0.0; degree + 1];
    for m in 0..degree {
        let mut acc = if m == 0 { 1.0 } else { 0.0 };
        for i in 0..=m {
            acc += a[i] * a[m - i];
        }
        a[m + 1] = acc / (m + 1) as f64;
    }
    a
}

/// The frame `(1, tan t)` with `tan` replaced by its Taylor polynomial.
pub fn tan_curve(degree: usize) -> PolynomialFrameCurve {
    let coeffs = tan_series(degree)
        .into_iter()
        .enumerate()
        .map(|(d, c)| Mat::from_column_slice(2, 1, &[if d == 0 { 1.0 } else { 0.0 }, c]))
        .collect();
    PolynomialFrameCurve::new(2, 1, coeffs).expect("valid tan frame")
}
