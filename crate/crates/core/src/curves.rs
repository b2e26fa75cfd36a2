//! Frame curves in `Gr(n, kn)` and their jets.
//!
//! Two backends: [`PolynomialFrameCurve`] (exact jets by Taylor shift) and
//! [`OdeFrameCurve`], the solution of
//! `A^(k) + C(k,1) A^(k-1) P_1 + ... + A P_k = 0` for prescribed polynomial
//! coefficient curves, whose jets come from integration followed by repeated
//! differentiation of the equation itself.

use crate::error::{Error, Result};
use crate::linalg::{binomial, block_diagonal, canonical_block_column, checked_inverse, column_scaling, condition_number, factorial, set_block, Mat};
use crate::matjet::{MatrixJet, DEFAULT_CONDITION_LIMIT};
use crate::ode::{self, IntegratorSettings};

/// Anything that can produce frame jets at arbitrary times.
pub trait FrameCurve {
    fn k(&self) -> usize;
    fn n(&self) -> usize;
    fn frame_jet(&self, t: f64, order: usize) -> Result<FrameJet>;
}

fn check_grassmannian(k: usize, n: usize) -> Result<()> {
    if k < 2 || n < 1 {
        return Err(Error::InvalidCurve(format!(
            "need k >= 2 and n >= 1, got k = {k}, n = {n}"
        )));
    }
    Ok(())
}

/// Jet of a frame `A(t)` (a `kn x n` matrix curve) together with its
/// juxtaposed lift `(A | A' | ... | A^(k-1))`.
#[derive(Debug, Clone)]
pub struct FrameJet {
    k: usize,
    n: usize,
    jet: MatrixJet,
    juxtaposed: MatrixJet,
    juxtaposed_inverse: Option<MatrixJet>,
    condition: f64,
}

impl FrameJet {
    pub fn new(k: usize, n: usize, jet: MatrixJet) -> Result<Self> {
        Self::with_condition_limit(k, n, jet, DEFAULT_CONDITION_LIMIT)
    }

    pub fn with_condition_limit(k: usize, n: usize, jet: MatrixJet, limit: f64) -> Result<Self> {
        check_grassmannian(k, n)?;
        if jet.shape() != (k * n, n) {
            return Err(Error::ShapeMismatch {
                op: "frame jet",
                left: (k * n, n),
                right: jet.shape(),
            });
        }
        if jet.order() + 1 < k {
            return Err(Error::InsufficientOrder {
                needed: k - 1,
                available: jet.order(),
            });
        }
        let blocks = (0..k)
            .map(|j| jet.nth_derivative(j))
            .collect::<Result<Vec<_>>>()?;
        let juxtaposed = MatrixJet::hstack(&blocks)?;
        // columns are equilibrated first, so the fanning test does not
        // depend on the relative scale of the derivatives
        let scale = column_scaling(juxtaposed.value());
        let equilibrated = juxtaposed.right_mul(&scale)?;
        let condition = condition_number(equilibrated.value());
        let juxtaposed_inverse = if condition < limit {
            equilibrated
                .inverse_with_limit(limit)
                .and_then(|inv| inv.left_mul(&scale))
                .ok()
        } else {
            None
        };
        Ok(Self {
            k,
            n,
            jet,
            juxtaposed,
            juxtaposed_inverse,
            condition,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.jet.order()
    }

    pub fn base_time(&self) -> f64 {
        self.jet.base_time()
    }

    pub fn jet(&self) -> &MatrixJet {
        &self.jet
    }

    /// Jet of `(A | A' | ... | A^(k-1))`, of order `order - (k - 1)`.
    pub fn juxtaposed(&self) -> &MatrixJet {
        &self.juxtaposed
    }

    pub fn is_fanning(&self) -> bool {
        self.juxtaposed_inverse.is_some()
    }

    /// Condition number of the column-equilibrated juxtaposed matrix at the base time.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn require_fanning(&self) -> Result<()> {
        if self.is_fanning() {
            Ok(())
        } else {
            Err(Error::NotFanning {
                t: self.base_time(),
                condition: self.condition,
            })
        }
    }

    pub fn require_order(&self, needed: usize) -> Result<()> {
        if self.order() < needed {
            return Err(Error::InsufficientOrder {
                needed,
                available: self.order(),
            });
        }
        Ok(())
    }

    pub fn juxtaposed_inverse(&self) -> Result<&MatrixJet> {
        self.juxtaposed_inverse.as_ref().ok_or(Error::NotFanning {
            t: self.base_time(),
            condition: self.condition,
        })
    }

    /// Jet of `A^(j)`, of order `order - j`.
    pub fn derivative_jet(&self, j: usize) -> Result<MatrixJet> {
        self.jet.nth_derivative(j)
    }

    pub fn truncate(&self, order: usize) -> Result<Self> {
        Self::new(self.k, self.n, self.jet.truncate(order))
    }

    /// `T A(t)` for a constant `T` in `GL(kn)`.
    pub fn left_transform(&self, t: &Mat) -> Result<Self> {
        Self::new(self.k, self.n, self.jet.left_mul(t)?)
    }

    /// `A(t) X(t)` for an `n x n` jet `X` (truncated to the shorter order).
    pub fn right_act(&self, x: &MatrixJet) -> Result<Self> {
        Self::new(self.k, self.n, self.jet.mul(x)?)
    }
}

/// Polynomial with `rows x cols` matrix coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMatrix {
    coeffs: Vec<Mat>,
}

impl PolynomialMatrix {
    pub fn new(coeffs: Vec<Mat>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::InvalidCurve("polynomial needs at least one coefficient".into()));
        };
        if let Some(bad) = coeffs.iter().find(|c| c.shape() != first.shape()) {
            return Err(Error::ShapeMismatch {
                op: "polynomial",
                left: first.shape(),
                right: bad.shape(),
            });
        }
        Ok(Self { coeffs })
    }

    pub fn constant(value: Mat) -> Self {
        Self { coeffs: vec![value] }
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coeffs[0].shape()
    }

    pub fn eval(&self, t: f64) -> Mat {
        let mut acc = self.coeffs[self.degree()].clone();
        for c in self.coeffs[..self.degree()].iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn jet(&self, t: f64, order: usize) -> MatrixJet {
        MatrixJet::from_polynomial(&self.coeffs, t, order).expect("coefficients share one shape")
    }

    pub fn map(&self, f: impl Fn(&Mat) -> Mat) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Polynomial product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.shape().1 != other.shape().0 {
            return Err(Error::ShapeMismatch {
                op: "polynomial product",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut coeffs = vec![Mat::zeros(self.shape().0, other.shape().1); self.degree() + other.degree() + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(Self { coeffs })
    }
}

/// `A(t) = sum_d M_d t^d` with `kn x n` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFrameCurve {
    k: usize,
    n: usize,
    poly: PolynomialMatrix,
}

impl PolynomialFrameCurve {
    pub fn new(k: usize, n: usize, coeffs: Vec<Mat>) -> Result<Self> {
        check_grassmannian(k, n)?;
        let poly = PolynomialMatrix::new(coeffs)?;
        if poly.shape() != (k * n, n) {
            return Err(Error::ShapeMismatch {
                op: "polynomial frame curve",
                left: (k * n, n),
                right: poly.shape(),
            });
        }
        Ok(Self { k, n, poly })
    }

    /// `E_0 + t E_1 + ... + t^(k-1) E_(k-1)`, with `E_j` the `j`-th canonical block column.
    pub fn standard(k: usize, n: usize) -> Result<Self> {
        check_grassmannian(k, n)?;
        Self::new(k, n, (0..k).map(|j| canonical_block_column(k, n, j)).collect())
    }

    pub fn coeffs(&self) -> &[Mat] {
        self.poly.coeffs()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn eval(&self, t: f64) -> Mat {
        self.poly.eval(t)
    }

    pub fn left_transform(&self, t: &Mat) -> Result<Self> {
        Self::new(self.k, self.n, self.poly.coeffs().iter().map(|c| t * c).collect())
    }

    /// `A(t) X(t)` for a polynomial `X(t)`.
    pub fn right_multiply(&self, x: &PolynomialMatrix) -> Result<Self> {
        let product = self.poly.mul(x)?;
        Self::new(self.k, self.n, product.coeffs)
    }
}

impl FrameCurve for PolynomialFrameCurve {
    fn k(&self) -> usize {
        self.k
    }

    fn n(&self) -> usize {
        self.n
    }

    fn frame_jet(&self, t: f64, order: usize) -> Result<FrameJet> {
        if order + 1 < self.k {
            return Err(Error::InsufficientOrder {
                needed: self.k - 1,
                available: order,
            });
        }
        FrameJet::new(self.k, self.n, self.poly.jet(t, order))
    }
}

/// Frame curve defined as the solution of the order-`k` linear system with
/// polynomial coefficients `P_1..P_k` and juxtaposed initial data `A0` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeFrameCurve {
    k: usize,
    n: usize,
    p: Vec<PolynomialMatrix>,
    a0: Mat,
    settings: IntegratorSettings,
}

impl OdeFrameCurve {
    pub fn new(k: usize, n: usize, p: Vec<PolynomialMatrix>, a0: Mat) -> Result<Self> {
        Self::with_settings(k, n, p, a0, IntegratorSettings::default())
    }

    pub fn with_settings(
        k: usize,
        n: usize,
        p: Vec<PolynomialMatrix>,
        a0: Mat,
        settings: IntegratorSettings,
    ) -> Result<Self> {
        check_grassmannian(k, n)?;
        if p.len() != k {
            return Err(Error::InvalidCurve(format!(
                "expected {k} coefficient curves P_1..P_k, got {}",
                p.len()
            )));
        }
        if let Some(bad) = p.iter().find(|pi| pi.shape() != (n, n)) {
            return Err(Error::ShapeMismatch {
                op: "ODE coefficient",
                left: (n, n),
                right: bad.shape(),
            });
        }
        if a0.shape() != (k * n, k * n) {
            return Err(Error::ShapeMismatch {
                op: "ODE initial data",
                left: (k * n, k * n),
                right: a0.shape(),
            });
        }
        let condition = condition_number(&a0);
        if !(condition < DEFAULT_CONDITION_LIMIT) {
            return Err(Error::NotFanning { t: 0.0, condition });
        }
        Ok(Self {
            k,
            n,
            p,
            a0,
            settings,
        })
    }

    pub fn coefficients(&self) -> &[PolynomialMatrix] {
        &self.p
    }

    pub fn initial_juxtaposed(&self) -> &Mat {
        &self.a0
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    /// `𝐀' = 𝐀 C(t)`: identity blocks on the block subdiagonal and
    /// `-C(k, i) P_i` in block row `k - i` of the last block column.
    fn companion_from(&self, p_values: &[Mat]) -> Mat {
        let (k, n) = (self.k, self.n);
        let mut c = Mat::zeros(k * n, k * n);
        for j in 0..k - 1 {
            set_block(&mut c, j + 1, j, &Mat::identity(n, n));
        }
        for (idx, pi) in p_values.iter().enumerate() {
            let i = idx + 1;
            set_block(&mut c, k - i, k - 1, &(pi * -binomial(k, i)));
        }
        c
    }

    pub fn companion(&self, t: f64) -> Mat {
        let values: Vec<Mat> = self.p.iter().map(|pi| pi.eval(t)).collect();
        self.companion_from(&values)
    }

    fn companion_jet(&self, t: f64, order: usize) -> MatrixJet {
        let jets: Vec<MatrixJet> = self.p.iter().map(|pi| pi.jet(t, order)).collect();
        let coeffs = (0..=order)
            .map(|m| {
                let values: Vec<Mat> = jets.iter().map(|j| j.coeff(m).clone()).collect();
                let mut c = self.companion_from(&values);
                if m > 0 {
                    // the identity blocks are constant
                    for j in 0..self.k - 1 {
                        set_block(&mut c, j + 1, j, &Mat::zeros(self.n, self.n));
                    }
                }
                c
            })
            .collect();
        MatrixJet::new(t, coeffs).expect("companion coefficients share one shape")
    }

    /// Juxtaposed matrix `(A | ... | A^(k-1))` at `t`, integrated from `t = 0`.
    pub fn juxtaposed_at(&self, t: f64) -> Result<Mat> {
        ode::integrate(
            |s, y| Ok(y * self.companion(s)),
            0.0,
            &self.a0,
            t,
            &self.settings,
        )
    }

    /// `(T A(t)) X0`: left action by `T` and constant right frame change by `X0`.
    pub fn transformed(&self, t: &Mat, x0: &Mat) -> Result<Self> {
        let x0_inv = checked_inverse(x0, DEFAULT_CONDITION_LIMIT)?;
        let p = self.p.iter().map(|pi| pi.map(|c| &x0_inv * c * x0)).collect();
        let a0 = t * &self.a0 * block_diagonal(x0, self.k);
        Self::with_settings(self.k, self.n, p, a0, self.settings)
    }
}

impl FrameCurve for OdeFrameCurve {
    fn k(&self) -> usize {
        self.k
    }

    fn n(&self) -> usize {
        self.n
    }

    fn frame_jet(&self, t: f64, order: usize) -> Result<FrameJet> {
        integrate_ode_jet(self, t, order)
    }
}

/// Jet of an ODE-defined frame at `t`.
///
/// The state `(A, ..., A^(k-1))` is integrated from 0 to `t`; derivatives of
/// order `>= k` come from the Taylor recursion `(m+1) a_(m+1) = sum a_i c_(m-i)`
/// of `𝐀' = 𝐀 C(t)` using the polynomial jets of the coefficients.
pub fn integrate_ode_jet(curve: &OdeFrameCurve, t: f64, order: usize) -> Result<FrameJet> {
    let (k, n) = (curve.k, curve.n);
    if order + 1 < k {
        return Err(Error::InsufficientOrder {
            needed: k - 1,
            available: order,
        });
    }
    let value = curve.juxtaposed_at(t)?;
    let c = curve.companion_jet(t, order.saturating_sub(1));
    let mut coeffs = vec![value];
    for m in 0..order {
        let mut acc = Mat::zeros(k * n, k * n);
        for i in 0..=m {
            acc.gemm(1.0, &coeffs[i], c.coeff(m - i), 1.0);
        }
        coeffs.push(acc / (m + 1) as f64);
    }
    let juxtaposed = MatrixJet::new(t, coeffs)?;
    FrameJet::new(k, n, juxtaposed.columns(0, n))
}

/// Jet at 0 of `sum_(j<k) t^j / j! E_j`, whose juxtaposed value is the identity.
pub fn standard_jet(k: usize, n: usize, order: usize) -> Result<FrameJet> {
    check_grassmannian(k, n)?;
    if order + 1 < k {
        return Err(Error::InsufficientOrder {
            needed: k - 1,
            available: order,
        });
    }
    let coeffs = (0..=order)
        .map(|j| {
            if j < k {
                canonical_block_column(k, n, j) / factorial(j)
            } else {
                Mat::zeros(k * n, n)
            }
        })
        .collect();
    FrameJet::new(k, n, MatrixJet::new(0.0, coeffs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn standard_curve_juxtaposed_is_factorial_diagonal() {
        for (k, n) in [(2, 1), (3, 2), (4, 1), (5, 3)] {
            let curve = PolynomialFrameCurve::standard(k, n).unwrap();
            let fj = curve.frame_jet(0.0, k + 1).unwrap();
            assert!(fj.is_fanning());
            let mut expected = Mat::zeros(k * n, k * n);
            for j in 0..k {
                set_block(&mut expected, j, j, &(Mat::identity(n, n) * factorial(j)));
            }
            assert_eq!(fj.juxtaposed().value(), &expected);
        }
    }

    #[test]
    fn constant_curve_is_not_fanning() {
        let m0 = canonical_block_column(3, 2, 0);
        let curve = PolynomialFrameCurve::new(3, 2, vec![m0]).unwrap();
        let fj = curve.frame_jet(0.5, 3).unwrap();
        assert!(!fj.is_fanning());
        assert!(matches!(fj.require_fanning(), Err(Error::NotFanning { .. })));
    }

    #[test]
    fn order_below_k_minus_one_is_rejected() {
        let curve = PolynomialFrameCurve::standard(4, 1).unwrap();
        assert!(matches!(
            curve.frame_jet(0.0, 2),
            Err(Error::InsufficientOrder { needed: 3, .. })
        ));
    }

    #[test]
    fn invalid_grassmannian_parameters() {
        assert!(PolynomialFrameCurve::standard(1, 2).is_err());
        assert!(PolynomialFrameCurve::new(2, 2, vec![Mat::zeros(3, 2)]).is_err());
    }

    #[test]
    fn taylor_shift_matches_binomial_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (k, n) = (3, 2);
        let degree = k + 2;
        let coeffs: Vec<Mat> = (0..=degree).map(|_| random_mat(&mut rng, k * n, n)).collect();
        let curve = PolynomialFrameCurve::new(k, n, coeffs.clone()).unwrap();
        let t0: f64 = 0.3;
        let fj = curve.frame_jet(t0, degree).unwrap();
        // oracle: i-th derivative of sum M_d t^d is sum_d d!/(d-i)! M_d t^(d-i)
        for i in 0..=degree {
            let mut expected = Mat::zeros(k * n, n);
            for (d, m) in coeffs.iter().enumerate().skip(i) {
                expected += m * (factorial(d) / factorial(d - i) * t0.powi((d - i) as i32));
            }
            assert!(max_abs(&(fj.jet().deriv(i) - expected)) < 1e-12);
        }
    }

    #[test]
    fn standard_jet_examples() {
        let fj = standard_jet(2, 1, 3).unwrap();
        let coeffs: Vec<f64> = fj.jet().coeffs().iter().flat_map(|c| c.iter().cloned().collect::<Vec<_>>()).collect();
        assert_eq!(coeffs, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        for (k, n) in [(3, 1), (4, 2), (5, 3)] {
            let fj = standard_jet(k, n, k + 1).unwrap();
            assert_eq!(fj.juxtaposed().value(), &Mat::identity(k * n, k * n));
        }
    }

    #[test]
    fn fanning_is_invariant_under_left_and_right_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let (k, n) = (3, 2);
            let coeffs: Vec<Mat> = (0..=k + 1).map(|_| random_mat(&mut rng, k * n, n)).collect();
            let curve = PolynomialFrameCurve::new(k, n, coeffs).unwrap();
            let fj = curve.frame_jet(0.2, k + 1).unwrap();
            let t = random_mat(&mut rng, k * n, k * n) + Mat::identity(k * n, k * n) * 3.0;
            assert_eq!(fj.left_transform(&t).unwrap().is_fanning(), fj.is_fanning());
            let x = PolynomialMatrix::new(vec![
                Mat::identity(n, n) * 2.0 + random_mat(&mut rng, n, n) * 0.3,
                random_mat(&mut rng, n, n),
                random_mat(&mut rng, n, n),
            ])
            .unwrap();
            let moved = curve.right_multiply(&x).unwrap().frame_jet(0.2, k + 1).unwrap();
            assert_eq!(moved.is_fanning(), fj.is_fanning());
        }
    }

    #[test]
    fn free_ode_reproduces_standard_curve() {
        for (k, n) in [(2, 1), (3, 2), (4, 1)] {
            let p = vec![PolynomialMatrix::constant(Mat::zeros(n, n)); k];
            let curve = OdeFrameCurve::new(k, n, p, Mat::identity(k * n, k * n)).unwrap();
            let fj = curve.frame_jet(0.7, k + 2).unwrap();
            // A(t) = sum t^j / j! E_j
            let poly: Vec<Mat> = (0..k).map(|j| canonical_block_column(k, n, j) / factorial(j)).collect();
            let exact = MatrixJet::from_polynomial(&poly, 0.7, k + 2).unwrap();
            assert!(fj.jet().sub(&exact).unwrap().max_abs() < 1e-10);
            assert!(max_abs(&fj.jet().deriv(k)) < 1e-12);
        }
    }

    #[test]
    fn harmonic_oscillator_solution() {
        let omega: f64 = 1.7;
        let p = vec![
            PolynomialMatrix::constant(Mat::zeros(1, 1)),
            PolynomialMatrix::constant(Mat::from_element(1, 1, omega * omega)),
        ];
        let a0 = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, omega]);
        let curve = OdeFrameCurve::new(2, 1, p, a0).unwrap();
        for &t in &[0.0, 0.4, 1.3, -0.8] {
            let fj = curve.frame_jet(t, 4).unwrap();
            for i in 0..=4 {
                // derivatives of (cos wt, sin wt)
                let phase = i as f64 * std::f64::consts::FRAC_PI_2;
                let scale = omega.powi(i as i32);
                let expected = [scale * (omega * t + phase).cos(), scale * (omega * t + phase).sin()];
                let got = fj.jet().deriv(i);
                assert!((got[(0, 0)] - expected[0]).abs() < 1e-8);
                assert!((got[(1, 0)] - expected[1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn singular_initial_data_is_rejected() {
        let p = vec![PolynomialMatrix::constant(Mat::zeros(1, 1)); 2];
        assert!(matches!(
            OdeFrameCurve::new(2, 1, p, Mat::zeros(2, 2)),
            Err(Error::NotFanning { .. })
        ));
    }
}
