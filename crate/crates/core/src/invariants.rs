//! Differential invariants of fanning frames: ODE coefficients, the matrix
//! Schwarzian and the higher invariants `h_j`, normal frames, and the
//! fundamental endomorphism with everything derived from it.

use crate::curves::{FrameCurve, FrameJet};
use crate::error::{Error, Result};
use crate::linalg::{binomial, checked_inverse, equilibrated_inverse, max_abs, numerical_rank, set_block, shift_nilpotent, Mat};
use crate::matjet::{MatrixJet, DEFAULT_CONDITION_LIMIT};
use crate::ode::{self, IntegratorSettings};

/// Relative threshold used for rank decisions on eigenstructure checks.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// A frame counts as normal when `|P_1| < NORMALITY_TOLERANCE * (1 + |P_2|)`.
pub const NORMALITY_TOLERANCE: f64 = 1e-8;

/// Coefficients `P_1..P_k` of the frame equation together with the
/// Schwarzian-type invariants `kappa` and `h_1..h_(k-2)`, all as jets.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub p: Vec<MatrixJet>,
    pub kappa: MatrixJet,
    pub h: Vec<MatrixJet>,
}

impl CoefficientSet {
    /// `P_i` for `1 <= i <= k`.
    pub fn p(&self, i: usize) -> &MatrixJet {
        &self.p[i - 1]
    }

    /// `h_j` for `1 <= j <= k - 2`.
    pub fn h(&self, j: usize) -> &MatrixJet {
        &self.h[j - 1]
    }

    /// `kappa, h_1, ..., h_(k-2)` evaluated at the base time.
    pub fn invariant_values(&self) -> Vec<Mat> {
        std::iter::once(self.kappa.value().clone())
            .chain(self.h.iter().map(|h| h.value().clone()))
            .collect()
    }
}

/// Solves `A^(k) + sum_i C(k,i) A^(k-i) P_i = 0` for `P_1..P_k` at jet level.
///
/// The coefficient jets have order `order - k`.
pub fn ode_coefficients(fj: &FrameJet) -> Result<Vec<MatrixJet>> {
    let (k, n) = (fj.k(), fj.n());
    fj.require_order(k)?;
    let inverse = fj.juxtaposed_inverse()?;
    let top = fj.derivative_jet(k)?;
    // block i of S is C(k, k-i) P_(k-i)
    let s = inverse.mul(&top)?.scale(-1.0);
    Ok((1..=k)
        .map(|i| s.rows_range((k - i) * n, n).scale(1.0 / binomial(k, i)))
        .collect())
}

/// `A^(k) + sum_i C(k,i) A^(k-i) P_i`, which vanishes for the true coefficients.
pub fn ode_residual(fj: &FrameJet, p: &[MatrixJet]) -> Result<MatrixJet> {
    let k = fj.k();
    let mut acc = fj.derivative_jet(k)?;
    for (idx, pi) in p.iter().enumerate() {
        let i = idx + 1;
        let term = fj.derivative_jet(k - i)?.mul(pi)?.scale(binomial(k, i));
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// `{A, t} = 2 (P_2 - P_1^2 - P_1')`, as a jet of order `order - k - 1`.
pub fn schwarzian(fj: &FrameJet) -> Result<MatrixJet> {
    fj.require_order(fj.k() + 1)?;
    let p = ode_coefficients(fj)?;
    schwarzian_from_coefficients(&p)
}

pub fn schwarzian_from_coefficients(p: &[MatrixJet]) -> Result<MatrixJet> {
    let (p1, p2) = (&p[0], &p[1]);
    let inner = p2.sub(&p1.mul(p1)?)?.sub(&p1.derivative()?)?;
    Ok(inner.scale(2.0))
}

/// `W_0 = I`, `W_(m+1) = -P_1 W_m + W_m'` for `m < count`.
fn w_sequence(p1: &MatrixJet, count: usize) -> Result<Vec<MatrixJet>> {
    let n = p1.rows();
    let mut w = vec![MatrixJet::identity(p1.base_time(), n, p1.order())];
    if count == 0 {
        return Ok(w);
    }
    // W_0 is constant, so W_1 = -P_1 keeps the full order
    w.push(p1.scale(-1.0));
    for m in 1..count {
        let next = w[m].derivative()?.sub(&p1.mul(&w[m])?)?;
        w.push(next);
    }
    Ok(w)
}

/// `h_(j-2) = sum_(i=0..j) C(j,i) W_(j-i) P_i` with `P_0 = I`, for `j = 2..=last`.
///
/// The entry for `j = 2` is `kappa`. `h_(j-2)` has order `order(P) - j + 1`.
fn recursion_invariants(p: &[MatrixJet], last: usize) -> Result<Vec<MatrixJet>> {
    let p1 = &p[0];
    let w = w_sequence(p1, last)?;
    (2..=last)
        .map(|j| {
            let mut acc = w[j].clone();
            for i in 1..=j {
                acc = acc.add(&w[j - i].mul(&p[i - 1])?.scale(binomial(j, i)))?;
            }
            Ok(acc)
        })
        .collect()
}

/// Frame order needed for `h_j` as a value: `k + j + 1` (`j = 0` is `kappa`).
pub fn required_order_for_h(k: usize, j: usize) -> usize {
    k + j + 1
}

/// `kappa` and all `h_1..h_(k-2)`; needs frame order `2k - 1`.
pub fn wilczynski_invariants(fj: &FrameJet) -> Result<CoefficientSet> {
    let k = fj.k();
    fj.require_order(required_order_for_h(k, k - 2))?;
    let p = ode_coefficients(fj)?;
    coefficient_set_from(p)
}

/// Builds the invariants from coefficient jets of order at least `k - 1`.
pub fn coefficient_set_from(p: Vec<MatrixJet>) -> Result<CoefficientSet> {
    let k = p.len();
    let mut all = recursion_invariants(&p, k)?;
    let h = all.split_off(1);
    let kappa = all.pop().expect("kappa is always produced");
    Ok(CoefficientSet { p, kappa, h })
}

/// Normality defect `|P_1| / (1 + |P_2|)` over the whole coefficient jets.
pub fn normality_defect(p: &[MatrixJet]) -> f64 {
    p[0].max_abs() / (1.0 + p[1].max_abs())
}

/// Coefficients of a frame that must be normal, or a `NotNormal` error.
pub fn require_normal(fj: &FrameJet) -> Result<Vec<MatrixJet>> {
    let p = ode_coefficients(fj)?;
    let defect = normality_defect(&p);
    if !(defect < NORMALITY_TOLERANCE) {
        return Err(Error::NotNormal {
            residual: defect,
            threshold: NORMALITY_TOLERANCE,
        });
    }
    Ok(p)
}

/// Frame `B = A Y` where `Y' = P_1 Y`, `Y(t0) = y0`.
///
/// `Y` is determined through order `order - k + 1` by the equation; higher
/// coefficients are set to zero, which keeps `B` an honest frame of the same
/// curve whose `P_1` vanishes to the available order.
pub fn renormalize_jet(fj: &FrameJet, y0: &Mat) -> Result<(FrameJet, MatrixJet)> {
    let k = fj.k();
    fj.require_order(k)?;
    let p1 = ode_coefficients(fj)?.swap_remove(0);
    let mut y = vec![y0.clone()];
    for q in 0..=p1.order() {
        let mut acc = Mat::zeros(y0.nrows(), y0.ncols());
        for i in 0..=q {
            acc.gemm(1.0, p1.coeff(i), &y[q - i], 1.0);
        }
        y.push(acc / (q + 1) as f64);
    }
    let y = MatrixJet::new(fj.base_time(), y)?.pad_zeros(fj.order());
    Ok((fj.right_act(&y)?, y))
}

/// Normal frame jet `B = A Y` with `Y(t0) = I`.
pub fn normal_frame_jet(fj: &FrameJet) -> Result<FrameJet> {
    let n = fj.n();
    Ok(renormalize_jet(fj, &Mat::identity(n, n))?.0)
}

/// Normal frame of a curve along a grid.
#[derive(Debug, Clone)]
pub struct NormalizationRecord {
    pub times: Vec<f64>,
    /// `X` with `X' = -X P_1` and `X = I` at the first grid time.
    pub x: Vec<Mat>,
    /// Normal frame values `B = A X^-1`.
    pub b: Vec<Mat>,
    /// `Q_2..Q_k` per grid time, `Q_j = X h_(j-2) X^-1`.
    pub q: Vec<Vec<Mat>>,
    /// Normality defect of `B` at each grid time.
    pub p1_residual: Vec<f64>,
}

/// Condition limit for the normal frame used in the normality diagnostic.
pub const DEFECT_CONDITION_LIMIT: f64 = 1e14;

/// Integrates `X' = -X P_1` along `grid` (first point is the reference time).
pub fn normal_frame<C: FrameCurve + ?Sized>(
    curve: &C,
    grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<NormalizationRecord> {
    let (k, n) = (curve.k(), curve.n());
    if grid.is_empty() {
        return Err(Error::DegenerateSamples { count: 0 });
    }
    let rhs = |t: f64, x: &Mat| -> Result<Mat> {
        let fj = curve.frame_jet(t, k)?;
        let p1 = ode_coefficients(&fj)?.swap_remove(0);
        Ok(-(x * p1.value()))
    };
    let x = ode::integrate_through(rhs, grid, &Mat::identity(n, n), settings)?;
    let order = required_order_for_h(k, k - 2);
    let mut record = NormalizationRecord {
        times: grid.to_vec(),
        x: Vec::with_capacity(grid.len()),
        b: Vec::with_capacity(grid.len()),
        q: Vec::with_capacity(grid.len()),
        p1_residual: Vec::with_capacity(grid.len()),
    };
    for (&t, xt) in grid.iter().zip(x) {
        let fj = curve.frame_jet(t, order)?;
        fj.require_fanning()?;
        let x_inv = checked_inverse(&xt, DEFAULT_CONDITION_LIMIT)?;
        let invariants = wilczynski_invariants(&fj)?;
        let q = invariants
            .invariant_values()
            .iter()
            .map(|h| &xt * h * &x_inv)
            .collect();
        let (b_jet, _) = renormalize_jet(&fj, &x_inv)?;
        // X can drift far from orthogonal along the grid, so the juxtaposed
        // normal frame may be much worse conditioned than the input; the defect
        // is a diagnostic and is computed under a looser limit
        let b_loose = FrameJet::with_condition_limit(k, n, b_jet.jet().clone(), DEFECT_CONDITION_LIMIT)?;
        let defect = normality_defect(&ode_coefficients(&b_loose)?);
        record.b.push(b_jet.jet().value().clone());
        record.x.push(xt);
        record.q.push(q);
        record.p1_residual.push(defect);
    }
    Ok(record)
}

/// `F = 𝐀 N 𝐀^-1` as a jet of order `jet_order`.
pub fn fundamental_endomorphism(fj: &FrameJet, jet_order: usize) -> Result<MatrixJet> {
    let (k, n) = (fj.k(), fj.n());
    fj.require_order(k - 1 + jet_order)?;
    let inverse = fj.juxtaposed_inverse()?;
    let f = fj
        .juxtaposed()
        .right_mul(&shift_nilpotent(k, n))?
        .mul(inverse)?;
    Ok(f.truncate(jet_order))
}

/// Everything derived from the fundamental endomorphism at the base time.
#[derive(Debug, Clone)]
pub struct EndomorphismBundle {
    pub f: MatrixJet,
    /// Reflection `D = (2F' - (k-2) I) / k`.
    pub d: Mat,
    /// Projection `(I - D) / 2` onto the vertical space.
    pub pproj: Mat,
    /// `P' = -F'' / k`.
    pub pproj_dot: Mat,
    /// Horizontal derivative `A^(k-1) - F A^(k) / k`, as a jet.
    pub h: MatrixJet,
    /// Horizontal derivative from `sum_i C(k-1,i) A^(k-1-i) P_i`.
    pub h_from_coefficients: MatrixJet,
    /// Jacobi endomorphism `K = P'^2`.
    pub k: Mat,
    /// `(A | A' | ... | A^(k-2) | H)` at the base time.
    pub moving_frame: Mat,
    pub n: Mat,
    /// Multiplicities of the eigenvalues `-1` and `+1` of `D`.
    pub d_spectrum: (usize, usize),
}

pub fn endomorphism_bundle(fj: &FrameJet) -> Result<EndomorphismBundle> {
    let (k, n) = (fj.k(), fj.n());
    fj.require_order(k + 1)?;
    let f = fundamental_endomorphism(fj, fj.order() + 1 - k)?;
    let size = k * n;
    let id = Mat::identity(size, size);
    let kf = k as f64;
    let d = (f.deriv(1) * 2.0 - &id * (kf - 2.0)) / kf;
    let pproj = (&id - &d) / 2.0;
    let pproj_dot = -f.deriv(2) / kf;
    let kmat = &pproj_dot * &pproj_dot;

    let h = fj
        .derivative_jet(k - 1)?
        .sub(&f.mul(&fj.derivative_jet(k)?)?.scale(1.0 / kf))?;
    let p = ode_coefficients(fj)?;
    let mut h_from_coefficients = fj.derivative_jet(k - 1)?;
    for i in 1..k {
        let term = fj.derivative_jet(k - 1 - i)?.mul(&p[i - 1])?.scale(binomial(k - 1, i));
        h_from_coefficients = h_from_coefficients.add(&term)?;
    }

    let mut moving_frame = fj.juxtaposed().value().clone();
    moving_frame.columns_mut((k - 1) * n, n).copy_from(h.value());

    let scale = max_abs(&d).max(1.0);
    let minus = size - numerical_rank(&(&d + &id), RANK_TOLERANCE * scale);
    let plus = size - numerical_rank(&(&d - &id), RANK_TOLERANCE * scale);

    Ok(EndomorphismBundle {
        f,
        d,
        pproj,
        pproj_dot,
        h,
        h_from_coefficients,
        k: kmat,
        moving_frame,
        n: shift_nilpotent(k, n),
        d_spectrum: (minus, plus),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobiKind {
    /// The Jacobi endomorphism `K`.
    K,
    /// The derivative of the vertical projection.
    Pdot,
}

/// `g_1 = kappa`, `g_i = h_(i-1) - h_(i-2)'` (with `h_0 = kappa`) at the base
/// time of a normal frame, for `i = 1..k-1`.
fn jacobi_entries(p: &[MatrixJet]) -> Vec<Mat> {
    let k = p.len();
    // for a normal frame kappa = P_2 and h_j = P_(j+2)
    let mut g = vec![p[1].value().clone()];
    for i in 2..k {
        g.push(p[i].value() - p[i - 1].deriv(1));
    }
    g
}

/// Matrix of `K` (or `P'`) in the basis `(A | ... | A^(k-2) | H)` from the
/// closed-form layout in terms of `kappa, h_j` and their first derivatives.
pub fn jacobi_matrix(fj: &FrameJet, which: JacobiKind) -> Result<Mat> {
    let (k, n) = (fj.k(), fj.n());
    fj.require_order(k + 1)?;
    let p = require_normal(fj)?;
    let g = jacobi_entries(&p);
    let mut out = Mat::zeros(k * n, k * n);
    let column = match which {
        JacobiKind::K => k - 2,
        JacobiKind::Pdot => k - 1,
    };
    for (idx, gi) in g.iter().enumerate() {
        let i = idx + 1;
        set_block(&mut out, k - 1 - i, column, &(gi * binomial(k - 1, i)));
    }
    match which {
        JacobiKind::K => set_block(&mut out, k - 1, k - 1, &(&g[0] * (k - 1) as f64)),
        JacobiKind::Pdot => set_block(&mut out, k - 1, k - 2, &Mat::identity(n, n)),
    }
    Ok(out)
}

/// The same matrix by direct change of basis `M^-1 K M` (or `M^-1 P' M`).
pub fn jacobi_matrix_direct(fj: &FrameJet, which: JacobiKind) -> Result<Mat> {
    fj.require_order(fj.k() + 1)?;
    require_normal(fj)?;
    let bundle = endomorphism_bundle(fj)?;
    let m_inv = equilibrated_inverse(&bundle.moving_frame, DEFAULT_CONDITION_LIMIT)?;
    let target = match which {
        JacobiKind::K => &bundle.k,
        JacobiKind::Pdot => &bundle.pproj_dot,
    };
    Ok(m_inv * target * &bundle.moving_frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lift {
    /// `(A | ... | A^(k-2) | H)`.
    WithH,
    /// `(A | ... | A^(k-2) | A^(k-1))`.
    WithKthDerivative,
}

/// `L^-1 L'` at the base time for the chosen lift `L` of a normal frame.
pub fn maurer_cartan_pullback(fj: &FrameJet, lift: Lift) -> Result<Mat> {
    let k = fj.k();
    fj.require_order(k + 1)?;
    require_normal(fj)?;
    let lifted = match lift {
        Lift::WithKthDerivative => fj.juxtaposed().clone(),
        Lift::WithH => {
            let bundle = endomorphism_bundle(fj)?;
            let mut parts = (0..k - 1)
                .map(|j| fj.derivative_jet(j))
                .collect::<Result<Vec<_>>>()?;
            parts.push(bundle.h);
            MatrixJet::hstack(&parts)?
        }
    };
    let inverse = equilibrated_inverse(lifted.value(), DEFAULT_CONDITION_LIMIT)?;
    Ok(inverse * lifted.deriv(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{standard_jet, OdeFrameCurve, PolynomialFrameCurve, PolynomialMatrix};
    use crate::linalg::{canonical_block_column, factorial, scaled_diff};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_curve(rng: &mut ChaCha8Rng, k: usize, n: usize, degree: usize) -> PolynomialFrameCurve {
        let coeffs = (0..=degree)
            .map(|d| {
                let base = if d < k {
                    canonical_block_column(k, n, d) / factorial(d)
                } else {
                    Mat::zeros(k * n, n)
                };
                base + random_mat(rng, k * n, n) * 0.3
            })
            .collect();
        PolynomialFrameCurve::new(k, n, coeffs).unwrap()
    }

    #[test]
    fn standard_curve_has_vanishing_coefficients() {
        for (k, n) in [(2, 1), (3, 2), (4, 1)] {
            let fj = PolynomialFrameCurve::standard(k, n).unwrap().frame_jet(0.3, 2 * k).unwrap();
            for p in ode_coefficients(&fj).unwrap() {
                assert!(p.max_abs() < 1e-12);
            }
            assert!(schwarzian(&fj).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_satisfy_the_frame_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (k, n) in [(2, 2), (3, 1), (4, 2)] {
            let fj = random_curve(&mut rng, k, n, k + 1).frame_jet(0.1, k + 3).unwrap();
            let p = ode_coefficients(&fj).unwrap();
            assert!(ode_residual(&fj, &p).unwrap().max_abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_oscillator_schwarzian() {
        let omega: f64 = 0.8;
        let p = vec![
            PolynomialMatrix::constant(Mat::zeros(1, 1)),
            PolynomialMatrix::constant(Mat::from_element(1, 1, omega * omega)),
        ];
        let curve = OdeFrameCurve::new(2, 1, p, Mat::identity(2, 2)).unwrap();
        let s = schwarzian(&curve.frame_jet(0.6, 4).unwrap()).unwrap();
        assert!((s.value()[(0, 0)] - 2.0 * omega * omega).abs() < 1e-8);
    }

    #[test]
    fn recursion_reproduces_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let fj = random_curve(&mut rng, 3, 2, 5).frame_jet(0.2, 5).unwrap();
        let set = wilczynski_invariants(&fj).unwrap();
        let s = schwarzian(&fj).unwrap();
        assert!(set.kappa.scale(2.0).sub(&s).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn normal_frame_jet_is_normal_and_reads_off_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (k, n) in [(2, 1), (3, 2), (4, 1)] {
            let fj = random_curve(&mut rng, k, n, k + 2).frame_jet(0.0, 2 * k).unwrap();
            let nf = normal_frame_jet(&fj).unwrap();
            let p = require_normal(&nf).unwrap();
            let set = wilczynski_invariants(&nf).unwrap();
            assert!(scaled_diff(set.kappa.value(), p[1].value()) < 1e-8);
            for j in 1..=k - 2 {
                assert!(scaled_diff(set.h(j).value(), p[j + 1].value()) < 1e-8);
            }
            // Y(t0) = I, so invariants at the base time are unchanged
            let original = wilczynski_invariants(&fj).unwrap();
            for (a, b) in original.invariant_values().iter().zip(set.invariant_values()) {
                assert!(scaled_diff(&b, a) < 1e-8);
            }
        }
    }

    #[test]
    fn fundamental_endomorphism_of_standard_jet_is_n() {
        for (k, n) in [(2, 1), (3, 2), (5, 1)] {
            let fj = standard_jet(k, n, k + 2).unwrap();
            let f = fundamental_endomorphism(&fj, 2).unwrap();
            assert!(max_abs(&(f.value() - shift_nilpotent(k, n))) < 1e-14);
            let bundle = endomorphism_bundle(&fj).unwrap();
            let mut expected_d = -Mat::identity(k * n, k * n);
            set_block(&mut expected_d, k - 1, k - 1, &Mat::identity(n, n));
            assert!(max_abs(&(&bundle.d - expected_d)) < 1e-14);
            assert!(max_abs(&bundle.k) < 1e-14);
            assert_eq!(bundle.d_spectrum, ((k - 1) * n, n));
        }
    }

    #[test]
    fn defining_relations_of_f() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let (k, n) = (4, 2);
        let fj = random_curve(&mut rng, k, n, k + 3).frame_jet(0.4, k + 1).unwrap();
        let f = fundamental_endomorphism(&fj, 0).unwrap();
        assert!(max_abs(&(f.value() * fj.jet().deriv(0))) < 1e-9);
        for i in 1..k {
            let lhs = f.value() * fj.jet().deriv(i);
            assert!(max_abs(&(lhs - fj.jet().deriv(i - 1) * i as f64)) < 1e-9);
        }
        let mut power = Mat::identity(k * n, k * n);
        for _ in 0..k - 1 {
            power = &power * f.value();
        }
        assert_eq!(numerical_rank(&power, 1e-8), n);
        assert!(max_abs(&(power * f.value())) < 1e-9);
    }

    #[test]
    fn bundle_identities_on_random_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for (k, n) in [(2, 2), (3, 1), (4, 2)] {
            let fj = random_curve(&mut rng, k, n, k + 3).frame_jet(0.3, k + 2).unwrap();
            let b = endomorphism_bundle(&fj).unwrap();
            let size = k * n;
            assert!(max_abs(&(&b.d * &b.d - Mat::identity(size, size))) < 1e-9);
            assert_eq!(b.d_spectrum, ((k - 1) * n, n));
            assert!(b.h.sub(&b.h_from_coefficients).unwrap().max_abs() < 1e-9);
            assert!(max_abs(&(&b.k - &b.pproj_dot * &b.pproj_dot)) < 1e-12);
            let f2 = b.f.deriv(2);
            assert!(max_abs(&(&b.k - &f2 * &f2 / (k * k) as f64)) < 1e-9);
            // P' kills A, ..., A^(k-3) and sends A^(k-2) to H
            for i in 0..k.saturating_sub(2) {
                assert!(max_abs(&(&b.pproj_dot * fj.jet().deriv(i))) < 1e-9);
            }
            let sent = &b.pproj_dot * fj.jet().deriv(k - 2);
            assert!(max_abs(&(sent - b.h.value())) < 1e-9);
            // F' F = -F
            let f0 = b.f.value();
            assert!(max_abs(&(b.f.deriv(1) * f0 + f0)) < 1e-9);
        }
    }

    #[test]
    fn jacobi_matrix_formula_matches_change_of_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for (k, n) in [(2, 1), (3, 1), (3, 2), (4, 2), (5, 1)] {
            let fj = random_curve(&mut rng, k, n, k + 3).frame_jet(0.0, k + 2).unwrap();
            let nf = normal_frame_jet(&fj).unwrap();
            for which in [JacobiKind::K, JacobiKind::Pdot] {
                let formula = jacobi_matrix(&nf, which).unwrap();
                let direct = jacobi_matrix_direct(&nf, which).unwrap();
                let d = scaled_diff(&formula, &direct);
                assert!(d < 1e-8, "k={k} n={n} {which:?} {d:e}\n{formula:.4}{direct:.4}");
            }
        }
    }

    #[test]
    fn jacobi_matrix_refuses_non_normal_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let fj = random_curve(&mut rng, 3, 1, 5).frame_jet(0.0, 4).unwrap();
        assert!(matches!(
            jacobi_matrix(&fj, JacobiKind::K),
            Err(Error::NotNormal { .. })
        ));
    }

    #[test]
    fn standard_jet_jacobi_and_maurer_cartan() {
        for (k, n) in [(2, 1), (3, 2), (4, 1)] {
            let fj = standard_jet(k, n, k + 1).unwrap();
            assert!(max_abs(&jacobi_matrix(&fj, JacobiKind::K).unwrap()) < 1e-14);
            let pdot = jacobi_matrix(&fj, JacobiKind::Pdot).unwrap();
            let mut expected = Mat::zeros(k * n, k * n);
            set_block(&mut expected, k - 1, k - 2, &Mat::identity(n, n));
            assert_eq!(pdot, expected);
            for lift in [Lift::WithH, Lift::WithKthDerivative] {
                let mc = maurer_cartan_pullback(&fj, lift).unwrap();
                let mut sub = Mat::zeros(k * n, k * n);
                for j in 1..k {
                    set_block(&mut sub, j, j - 1, &Mat::identity(n, n));
                }
                assert!(max_abs(&(mc - sub)) < 1e-14);
            }
        }
    }

    #[test]
    fn normal_frame_along_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let curve = random_curve(&mut rng, 3, 2, 5);
        let grid: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let record = normal_frame(&curve, &grid, &IntegratorSettings::default()).unwrap();
        assert!(max_abs(&(&record.x[0] - Mat::identity(2, 2))) < 1e-15);
        for r in &record.p1_residual {
            assert!(*r < 1e-7);
        }
        // B = A X^-1
        for (i, &t) in grid.iter().enumerate() {
            let expected = curve.eval(t) * record.x[i].clone().try_inverse().unwrap();
            assert!(max_abs(&(&record.b[i] - expected)) < 1e-12);
        }
    }

    #[test]
    fn already_normal_curve_has_identity_x() {
        // P_1 = 0, so the ODE solution is already a normal frame
        let mut p = vec![PolynomialMatrix::constant(Mat::zeros(1, 1)); 3];
        p[1] = PolynomialMatrix::new(vec![Mat::from_element(1, 1, 0.5), Mat::from_element(1, 1, 0.2)]).unwrap();
        let curve = OdeFrameCurve::new(3, 1, p, Mat::identity(3, 3)).unwrap();
        let record = normal_frame(&curve, &[0.0, 0.2, 0.5], &IntegratorSettings::default()).unwrap();
        for x in &record.x {
            assert!(max_abs(&(x - Mat::identity(1, 1))) < 1e-12);
        }
    }

    #[test]
    fn frame_change_by_constant_conjugates_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (k, n) = (4, 2);
        let curve = random_curve(&mut rng, k, n, k + 2);
        let x0 = random_mat(&mut rng, n, n) + Mat::identity(n, n) * 2.0;
        let moved = curve.right_multiply(&PolynomialMatrix::constant(x0.clone())).unwrap();
        let a = wilczynski_invariants(&curve.frame_jet(0.3, 2 * k - 1).unwrap()).unwrap();
        let b = wilczynski_invariants(&moved.frame_jet(0.3, 2 * k - 1).unwrap()).unwrap();
        let x_inv = x0.clone().try_inverse().unwrap();
        for (ha, hb) in a.invariant_values().iter().zip(b.invariant_values()) {
            assert!(max_abs(&(&x_inv * ha * &x0 - hb)) < 1e-9);
        }
    }
}
