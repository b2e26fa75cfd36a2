//! Congruence of fanning curves under `GL(kn)`, canonical jets and orbit
//! coordinates.
//!
//! Two curves are congruent exactly when their normal-frame invariants
//! `kappa, h_1, ..., h_(k-2)` are simultaneously conjugate by one constant
//! matrix. The conjugator is found from the nullspace of the linear maps
//! `X -> M X - X N`; the ambient transformation is then rebuilt from the
//! juxtaposed normal frames at the first sample and checked on every sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curves::{FrameCurve, FrameJet};
use crate::error::{Error, Result};
use crate::invariants::{normal_frame, normal_frame_jet, ode_coefficients};
use crate::linalg::{binomial, block_diagonal, condition_number, equilibrated_inverse, max_abs, subspace_distance, Mat};
use crate::matjet::DEFAULT_CONDITION_LIMIT;
use crate::ode::IntegratorSettings;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceSettings {
    /// Acceptance bound for conjugation residuals and span distances.
    pub tol: f64,
    /// Singular values below `rank_threshold * sigma_max` span the nullspace.
    pub rank_threshold: f64,
    /// Random nullspace combinations tried before giving up.
    pub attempts: usize,
    pub seed: u64,
    /// Candidates at or above this condition number make the verdict inconclusive.
    pub condition_limit: f64,
    pub integrator: IntegratorSettings,
}

impl Default for CongruenceSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            rank_threshold: 1e-9,
            attempts: 20,
            seed: 0,
            condition_limit: DEFAULT_CONDITION_LIMIT,
            integrator: IntegratorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConjugatorOutcome {
    /// `X` with `M_i X = X N_i` for all pairs, scaled to unit max-abs entry.
    Found { x: Mat, condition: f64, nullity: usize },
    /// Solutions exist but every candidate tried was ill-conditioned.
    IllConditioned { x: Mat, condition: f64, nullity: usize },
    NoSolution,
}

/// `vec(M X - X N) = (I (x) M - N^T (x) I) vec(X)` for column-major `vec`.
fn sylvester_operator(m: &Mat, n_mat: &Mat) -> Mat {
    let n = m.nrows();
    let id = Mat::identity(n, n);
    id.kronecker(m) - n_mat.transpose().kronecker(&id)
}

/// Largest conjugation residual `max_i |M_i X - X N_i|`.
pub fn conjugation_residual(pairs: &[(Mat, Mat)], x: &Mat) -> f64 {
    pairs
        .iter()
        .map(|(m, n)| max_abs(&(m * x - x * n)))
        .fold(0.0, f64::max)
}

/// Searches for an invertible `X` with `M_i X = X N_i` for every pair.
pub fn solve_conjugator(pairs: &[(Mat, Mat)], settings: &CongruenceSettings) -> ConjugatorOutcome {
    let Some((first, _)) = pairs.first() else {
        return ConjugatorOutcome::NoSolution;
    };
    let n = first.nrows();
    let size = n * n;
    let mut stacked = Mat::zeros(pairs.len() * size, size);
    for (i, (m, nm)) in pairs.iter().enumerate() {
        stacked
            .view_mut((i * size, 0), (size, size))
            .copy_from(&sylvester_operator(m, nm));
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let mut null: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] <= settings.rank_threshold * sigma_max)
        .collect();
    if null.is_empty() {
        // the smallest direction is still a candidate; the residual check decides
        null.push(sigma.len() - 1);
    }
    let nullity = null.len();

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut best: Option<(Mat, f64)> = None;
    for _ in 0..settings.attempts.max(1) {
        let mut v = nalgebra::DVector::<f64>::zeros(size);
        for &i in &null {
            let c: f64 = if nullity == 1 { 1.0 } else { rng.random_range(-1.0..1.0) };
            v += v_t.row(i).transpose() * c;
        }
        let mut x = Mat::from_column_slice(n, n, v.as_slice());
        let scale = max_abs(&x);
        if scale == 0.0 {
            continue;
        }
        x /= scale;
        if conjugation_residual(pairs, &x) >= settings.tol {
            return ConjugatorOutcome::NoSolution;
        }
        let condition = condition_number(&x);
        if condition < settings.condition_limit {
            return ConjugatorOutcome::Found { x, condition, nullity };
        }
        if best.as_ref().is_none_or(|(_, c)| condition < *c) {
            best = Some((x, condition));
        }
        if nullity == 1 {
            break;
        }
    }
    match best {
        Some((x, condition)) => ConjugatorOutcome::IllConditioned { x, condition, nullity },
        None => ConjugatorOutcome::NoSolution,
    }
}

/// Invertible simultaneous conjugator, if one exists within `tol`.
pub fn simultaneous_conjugator(pairs: &[(Mat, Mat)], tol: f64) -> Option<Mat> {
    let settings = CongruenceSettings {
        tol,
        ..Default::default()
    };
    match solve_conjugator(pairs, &settings) {
        ConjugatorOutcome::Found { x, .. } => Some(x),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Congruent,
    NotCongruent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Congruent => "congruent",
            Verdict::NotCongruent => "not_congruent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CongruenceWitness {
    pub verdict: Verdict,
    /// Constant conjugator of the normal-frame invariants.
    pub x: Option<Mat>,
    /// Ambient transformation with `T A(t)` spanning `B(t)`.
    pub t: Option<Mat>,
    pub samples: Vec<f64>,
    /// Per-sample conjugation residual of the invariants.
    pub residuals: Vec<f64>,
    /// Per-sample distance between `span(T A)` and `span(B)`.
    pub span_distances: Vec<f64>,
    pub nullity: usize,
    pub condition: Option<f64>,
}

/// Equispaced samples, `2k + 3` of them by default.
pub fn default_samples(k: usize, start: f64, end: f64) -> Vec<f64> {
    equispaced(start, end, 2 * k + 3)
}

pub fn equispaced(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Decides whether `curve_b` is `T curve_a` (as curves in the Grassmannian).
pub fn are_congruent<A, B>(
    curve_a: &A,
    curve_b: &B,
    samples: &[f64],
    settings: &CongruenceSettings,
) -> Result<CongruenceWitness>
where
    A: FrameCurve + ?Sized,
    B: FrameCurve + ?Sized,
{
    let (k, n) = (curve_a.k(), curve_a.n());
    if (curve_b.k(), curve_b.n()) != (k, n) {
        return Err(Error::InvalidCurve(format!(
            "curves live in different Grassmannians: (k, n) = ({k}, {n}) vs ({}, {})",
            curve_b.k(),
            curve_b.n()
        )));
    }
    if samples.len() < 2 {
        return Err(Error::DegenerateSamples { count: samples.len() });
    }
    let record_a = normal_frame(curve_a, samples, &settings.integrator)?;
    let record_b = normal_frame(curve_b, samples, &settings.integrator)?;
    let pairs: Vec<(Mat, Mat)> = record_a
        .q
        .iter()
        .zip(&record_b.q)
        .flat_map(|(qa, qb)| qa.iter().cloned().zip(qb.iter().cloned()))
        .collect();
    let per_sample = |x: &Mat| -> Vec<f64> {
        record_a
            .q
            .iter()
            .zip(&record_b.q)
            .map(|(qa, qb)| {
                qa.iter()
                    .zip(qb)
                    .map(|(a, b)| max_abs(&(a * x - x * b)))
                    .fold(0.0, f64::max)
            })
            .collect()
    };

    let mut witness = CongruenceWitness {
        verdict: Verdict::NotCongruent,
        x: None,
        t: None,
        samples: samples.to_vec(),
        residuals: vec![],
        span_distances: vec![],
        nullity: 0,
        condition: None,
    };
    let (x, condition, nullity) = match solve_conjugator(&pairs, settings) {
        ConjugatorOutcome::Found { x, condition, nullity } => (x, condition, nullity),
        ConjugatorOutcome::IllConditioned { x, condition, nullity } => {
            witness.verdict = Verdict::Inconclusive;
            witness.residuals = per_sample(&x);
            witness.x = Some(x);
            witness.condition = Some(condition);
            witness.nullity = nullity;
            return Ok(witness);
        }
        ConjugatorOutcome::NoSolution => return Ok(witness),
    };
    witness.residuals = per_sample(&x);
    witness.condition = Some(condition);
    witness.nullity = nullity;

    // normal frames agree with B_B = T B_A X, so T is fixed by the juxtaposed
    // normal frames at the first sample (where both X's are the identity)
    let t0 = samples[0];
    let lift_a = normal_frame_jet(&curve_a.frame_jet(t0, k + 1)?)?;
    let lift_b = normal_frame_jet(&curve_b.frame_jet(t0, k + 1)?)?;
    let moved = lift_a.juxtaposed().value() * block_diagonal(&x, k);
    let t = lift_b.juxtaposed().value() * equilibrated_inverse(&moved, settings.condition_limit)?;

    witness.span_distances = samples
        .iter()
        .map(|&s| {
            let a = curve_a.frame_jet(s, k - 1)?.jet().value().clone();
            let b = curve_b.frame_jet(s, k - 1)?.jet().value().clone();
            Ok(subspace_distance(&(&t * a), &b))
        })
        .collect::<Result<Vec<_>>>()?;
    if witness.span_distances.iter().all(|d| *d < settings.tol) {
        witness.verdict = Verdict::Congruent;
    }
    witness.x = Some(x);
    witness.t = Some(t);
    Ok(witness)
}

/// A jet moved to standard position together with the transformation used.
#[derive(Debug, Clone)]
pub struct Canonicalization {
    /// Normal frame jet with juxtaposed value `I`.
    pub jet: FrameJet,
    /// `T` with `jet = T (A Y)` for the normalizing frame change `Y`.
    pub t: Mat,
}

/// Normalizes the frame (with `Y(t0) = I`) and maps its juxtaposed value to `I`.
pub fn canonicalize_jet(fj: &FrameJet) -> Result<Canonicalization> {
    fj.require_order(fj.k() + 1)?;
    fj.require_fanning()?;
    let normal = normal_frame_jet(fj)?;
    let t = equilibrated_inverse(normal.juxtaposed().value(), DEFAULT_CONDITION_LIMIT)?;
    Ok(Canonicalization {
        jet: normal.left_transform(&t)?,
        t,
    })
}

#[derive(Debug, Clone)]
pub struct OrbitCoordinates {
    pub base_time: f64,
    /// `(k-1) kappa, C(k-1,2)(h_1 - kappa'), ..., h_(k-2) - h_(k-3)'`.
    pub entries: Vec<Mat>,
}

/// Entries of the Jacobi-matrix column of the canonicalized jet.
pub fn orbit_coordinates(fj: &FrameJet) -> Result<OrbitCoordinates> {
    let k = fj.k();
    let canonical = canonicalize_jet(fj)?;
    let p = ode_coefficients(&canonical.jet)?;
    // normal frame: kappa = P_2, h_j = P_(j+2)
    let entries = (1..k)
        .map(|i| {
            let g = if i == 1 {
                p[1].value().clone()
            } else {
                p[i].value() - p[i - 1].deriv(1)
            };
            g * binomial(k - 1, i)
        })
        .collect();
    Ok(OrbitCoordinates {
        base_time: fj.base_time(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::standard_jet;
    use crate::fixtures::{random_fanning_curve, random_gl, random_matrix, tan_curve, transform_curve};
    use crate::linalg::scaled_diff;

    #[test]
    fn identical_pairs_admit_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = random_matrix(&mut rng, 3, 3);
        let x = simultaneous_conjugator(&[(m.clone(), m.clone())], 1e-9).unwrap();
        assert!(max_abs(&(&m * &x - &x * &m)) < 1e-9);
    }

    #[test]
    fn recovers_a_planted_conjugator() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let n = 3;
        let x0 = random_gl(&mut rng, n);
        let x0_inv = x0.clone().try_inverse().unwrap();
        let pairs: Vec<(Mat, Mat)> = (0..2)
            .map(|_| {
                let m = random_matrix(&mut rng, n, n);
                (&x0 * &m * &x0_inv, m)
            })
            .collect();
        let x = simultaneous_conjugator(&pairs, 1e-9).unwrap();
        // the joint commutant of two generic matrices is scalar
        let ratio = &x * &x0_inv;
        let c = ratio[(0, 0)];
        assert!(max_abs(&(ratio - Mat::identity(n, n) * c)) < 1e-9);
    }

    #[test]
    fn perturbed_pair_has_no_conjugator() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let m = random_matrix(&mut rng, 3, 3);
        let mut e = Mat::zeros(3, 3);
        e[(0, 1)] = 1.0;
        let n = &m + e;
        let other = random_matrix(&mut rng, 3, 3);
        assert!(simultaneous_conjugator(&[(m, n), (other.clone(), other)], 1e-7).is_none());
    }

    #[test]
    fn transformed_curve_is_congruent() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for (k, n) in [(2, 1), (3, 2)] {
            let a = random_fanning_curve(&mut rng, k, n, k + 2, 0.2).unwrap();
            let t = random_gl(&mut rng, k * n);
            let x0 = random_gl(&mut rng, n);
            let b = transform_curve(&a, &t, &x0).unwrap();
            let samples = default_samples(k, 0.0, 1.0);
            let w = are_congruent(&a, &b, &samples, &CongruenceSettings::default()).unwrap();
            assert_eq!(w.verdict, Verdict::Congruent, "{w:?}");
            assert!(w.span_distances.iter().all(|d| *d < 1e-7));
        }
    }

    #[test]
    fn curve_is_congruent_to_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let a = random_fanning_curve(&mut rng, 3, 1, 5, 0.2).unwrap();
        let w = are_congruent(&a, &a, &default_samples(3, 0.0, 1.0), &CongruenceSettings::default()).unwrap();
        assert_eq!(w.verdict, Verdict::Congruent);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let a = random_fanning_curve(&mut rng, 2, 1, 3, 0.2).unwrap();
        assert!(matches!(
            are_congruent(&a, &a, &[0.0], &CongruenceSettings::default()),
            Err(Error::DegenerateSamples { count: 1 })
        ));
    }

    #[test]
    fn canonical_form_is_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for (k, n) in [(2, 2), (3, 1), (4, 2)] {
            let a = random_fanning_curve(&mut rng, k, n, k + 3, 0.2).unwrap();
            let c = canonicalize_jet(&a.frame_jet(0.4, k + 1).unwrap()).unwrap();
            assert!(max_abs(&(c.jet.juxtaposed().value() - Mat::identity(k * n, k * n))) < 1e-10);
            assert!(ode_coefficients(&c.jet).unwrap()[0].max_abs() < 1e-9);
        }
        let fj = standard_jet(3, 2, 4).unwrap();
        let c = canonicalize_jet(&fj).unwrap();
        assert_eq!(c.t, Mat::identity(6, 6));
        assert_eq!(c.jet.jet(), fj.jet());
    }

    #[test]
    fn orbit_coordinates_examples() {
        let fj = standard_jet(4, 2, 5).unwrap();
        for e in orbit_coordinates(&fj).unwrap().entries {
            assert_eq!(max_abs(&e), 0.0);
        }
        let tan = tan_curve(41).frame_jet(0.0, 3).unwrap();
        let coords = orbit_coordinates(&tan).unwrap();
        assert!((coords.entries[0][(0, 0)] - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let a = random_fanning_curve(&mut rng, 3, 2, 6, 0.2).unwrap();
        let t = random_gl(&mut rng, 6);
        let fj = a.frame_jet(0.2, 4).unwrap();
        let base = orbit_coordinates(&fj).unwrap();
        let moved = orbit_coordinates(&fj.left_transform(&t).unwrap()).unwrap();
        for (x, y) in base.entries.iter().zip(&moved.entries) {
            assert!(scaled_diff(y, x) < 1e-8);
        }
    }
}
