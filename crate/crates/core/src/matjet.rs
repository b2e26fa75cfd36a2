//! Truncated Taylor expansions of matrix-valued curves.
//!
//! A [`MatrixJet`] of order `r` at base time `t0` stores the coefficients
//! `c_0, ..., c_r` of `sum c_i (t - t0)^i`, so the `i`-th derivative at `t0`
//! is `i! c_i`. Every derivative used by the invariant computations flows
//! through this kernel.

use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, factorial, Mat};

/// Default refusal threshold for the condition number of the leading
/// coefficient in [`MatrixJet::inverse`].
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixJet {
    base_time: f64,
    coeffs: Vec<Mat>,
}

impl MatrixJet {
    /// Builds a jet from Taylor coefficients; all must share one shape.
    pub fn new(base_time: f64, coeffs: Vec<Mat>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::InvalidCurve("a jet needs at least one coefficient".into()));
        };
        let shape = first.shape();
        if let Some(bad) = coeffs.iter().find(|c| c.shape() != shape) {
            return Err(Error::ShapeMismatch {
                op: "jet construction",
                left: shape,
                right: bad.shape(),
            });
        }
        Ok(Self { base_time, coeffs })
    }

    /// Builds a jet from raw derivatives `A(t0), A'(t0), ...`.
    pub fn from_derivatives(base_time: f64, derivatives: Vec<Mat>) -> Result<Self> {
        let coeffs = derivatives
            .into_iter()
            .enumerate()
            .map(|(i, d)| d / factorial(i))
            .collect();
        Self::new(base_time, coeffs)
    }

    /// Jet of the polynomial `sum_d m_d t^d` re-expanded around `base_time`.
    ///
    /// Coefficients above the polynomial degree are exactly zero.
    pub fn from_polynomial(poly: &[Mat], base_time: f64, order: usize) -> Result<Self> {
        let Some(first) = poly.first() else {
            return Err(Error::InvalidCurve("empty polynomial".into()));
        };
        let (rows, cols) = first.shape();
        let mut coeffs = vec![Mat::zeros(rows, cols); order + 1];
        for (d, m) in poly.iter().enumerate() {
            if m.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch {
                    op: "polynomial jet",
                    left: (rows, cols),
                    right: m.shape(),
                });
            }
            // t^d = sum_i C(d, i) t0^(d-i) (t - t0)^i
            let mut binom = 1.0;
            for (i, c) in coeffs.iter_mut().enumerate().take(order.min(d) + 1) {
                if i > 0 {
                    binom = binom * (d - i + 1) as f64 / i as f64;
                }
                *c += m * (binom * base_time.powi((d - i) as i32));
            }
        }
        Ok(Self { base_time, coeffs })
    }

    pub fn constant(base_time: f64, value: Mat, order: usize) -> Self {
        let (r, c) = value.shape();
        let mut coeffs = vec![Mat::zeros(r, c); order + 1];
        coeffs[0] = value;
        Self { base_time, coeffs }
    }

    pub fn zeros(base_time: f64, rows: usize, cols: usize, order: usize) -> Self {
        Self {
            base_time,
            coeffs: vec![Mat::zeros(rows, cols); order + 1],
        }
    }

    pub fn identity(base_time: f64, n: usize, order: usize) -> Self {
        Self::constant(base_time, Mat::identity(n, n), order)
    }

    pub fn base_time(&self) -> f64 {
        self.base_time
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coeffs[0].shape()
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Mat {
        &self.coeffs[i]
    }

    /// Value at the base time.
    pub fn value(&self) -> &Mat {
        &self.coeffs[0]
    }

    /// `i`-th derivative at the base time, `i! c_i`.
    pub fn deriv(&self, i: usize) -> Mat {
        &self.coeffs[i] * factorial(i)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = order.min(self.order()) + 1;
        Self {
            base_time: self.base_time,
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    /// Appends zero coefficients up to `order`.
    ///
    /// Only meaningful when the caller knows the higher coefficients may be
    /// chosen freely; binary operations never pad implicitly.
    pub fn pad_zeros(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        let (r, c) = self.shape();
        coeffs.resize(order.max(self.order()) + 1, Mat::zeros(r, c));
        Self {
            base_time: self.base_time,
            coeffs,
        }
    }

    fn check_base(&self, other: &Self) -> Result<()> {
        if self.base_time != other.base_time {
            return Err(Error::BaseTimeMismatch {
                left: self.base_time,
                right: other.base_time,
            });
        }
        Ok(())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "jet_add", |a, b| a + b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "jet_sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(&Mat, &Mat) -> Mat) -> Result<Self> {
        self.check_base(other)?;
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Self {
            base_time: self.base_time,
            coeffs,
        })
    }

    /// Truncated Cauchy product `c_m = sum_i a_i b_(m-i)`.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        if self.cols() != other.rows() {
            return Err(Error::ShapeMismatch {
                op: "jet_mul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|m| {
                let mut acc = Mat::zeros(self.rows(), other.cols());
                for i in 0..=m {
                    acc.gemm(1.0, &self.coeffs[i], &other.coeffs[m - i], 1.0);
                }
                acc
            })
            .collect();
        Ok(Self {
            base_time: self.base_time,
            coeffs,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c * factor)
    }

    /// Multiplies every coefficient on the left by a constant matrix.
    pub fn left_mul(&self, m: &Mat) -> Result<Self> {
        if m.ncols() != self.rows() {
            return Err(Error::ShapeMismatch {
                op: "jet left_mul",
                left: m.shape(),
                right: self.shape(),
            });
        }
        Ok(self.map(|c| m * c))
    }

    /// Multiplies every coefficient on the right by a constant matrix.
    pub fn right_mul(&self, m: &Mat) -> Result<Self> {
        if self.cols() != m.nrows() {
            return Err(Error::ShapeMismatch {
                op: "jet right_mul",
                left: self.shape(),
                right: m.shape(),
            });
        }
        Ok(self.map(|c| c * m))
    }

    pub fn map(&self, f: impl Fn(&Mat) -> Mat) -> Self {
        Self {
            base_time: self.base_time,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Jet inverse with the default conditioning threshold.
    pub fn inverse(&self) -> Result<Self> {
        self.inverse_with_limit(DEFAULT_CONDITION_LIMIT)
    }

    /// `b_0 = c_0^-1`, `b_m = -b_0 sum_(i=1..m) c_i b_(m-i)`.
    pub fn inverse_with_limit(&self, condition_limit: f64) -> Result<Self> {
        let b0 = checked_inverse(&self.coeffs[0], condition_limit)?;
        let n = b0.nrows();
        let mut coeffs: Vec<Mat> = Vec::with_capacity(self.coeffs.len());
        coeffs.push(b0);
        for m in 1..=self.order() {
            let mut acc = Mat::zeros(n, n);
            for i in 1..=m {
                acc.gemm(1.0, &self.coeffs[i], &coeffs[m - i], 1.0);
            }
            let bm = -(&coeffs[0] * acc);
            coeffs.push(bm);
        }
        Ok(Self {
            base_time: self.base_time,
            coeffs,
        })
    }

    /// Termwise derivative; the order drops by one.
    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::InsufficientOrder {
                needed: 1,
                available: 0,
            });
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| c * (i + 1) as f64)
            .collect();
        Ok(Self {
            base_time: self.base_time,
            coeffs,
        })
    }

    /// `times`-fold derivative.
    pub fn nth_derivative(&self, times: usize) -> Result<Self> {
        if times > self.order() {
            return Err(Error::InsufficientOrder {
                needed: times,
                available: self.order(),
            });
        }
        let mut jet = self.clone();
        for _ in 0..times {
            jet = jet.derivative()?;
        }
        Ok(jet)
    }

    /// Horner evaluation of the truncated series at `t`.
    pub fn eval(&self, t: f64) -> Mat {
        let dt = t - self.base_time;
        let mut acc = self.coeffs[self.order()].clone();
        for c in self.coeffs[..self.order()].iter().rev() {
            acc = acc * dt + c;
        }
        acc
    }

    /// Column block `[start, start + width)` of every coefficient.
    pub fn columns(&self, start: usize, width: usize) -> Self {
        self.map(|c| c.columns(start, width).into_owned())
    }

    /// Row block `[start, start + height)` of every coefficient.
    pub fn rows_range(&self, start: usize, height: usize) -> Self {
        self.map(|c| c.rows(start, height).into_owned())
    }

    /// Horizontal concatenation; the result has the minimum order of the parts.
    pub fn hstack(parts: &[MatrixJet]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidCurve("hstack of no jets".into()));
        };
        let rows = first.rows();
        let order = parts.iter().map(|p| p.order()).min().unwrap_or(0);
        for p in parts {
            first.check_base(p)?;
            if p.rows() != rows {
                return Err(Error::ShapeMismatch {
                    op: "hstack",
                    left: first.shape(),
                    right: p.shape(),
                });
            }
        }
        let cols: usize = parts.iter().map(|p| p.cols()).sum();
        let coeffs = (0..=order)
            .map(|i| {
                let mut m = Mat::zeros(rows, cols);
                let mut at = 0;
                for p in parts {
                    m.columns_mut(at, p.cols()).copy_from(&p.coeffs[i]);
                    at += p.cols();
                }
                m
            })
            .collect();
        Ok(Self {
            base_time: first.base_time,
            coeffs,
        })
    }

    /// Largest absolute entry over all coefficients.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(crate::linalg::max_abs)
            .fold(0.0, f64::max)
    }
}
