//! Subcommand implementations. Each returns a report and an exit status.

use std::path::Path;

use fanning::congruence::default_samples;
use fanning::fixtures::random_gl;
use fanning::invariants::{
    endomorphism_bundle, fundamental_endomorphism, jacobi_matrix, maurer_cartan_pullback, normal_frame,
    normal_frame_jet, schwarzian, wilczynski_invariants, JacobiKind, Lift,
};
use fanning::linalg::{max_abs, scaled_diff};
use fanning::{
    are_congruent, canonicalize_jet, orbit_coordinates, CongruenceSettings, Curve, FrameCurve, FrameJet,
    IntegratorSettings, Mat, Verdict,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Grid, MaurerCartan};
use crate::report::{Fields, Report, Sample};
use crate::Failure;

/// Default threshold for the identities checked by `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-8;

pub struct Outcome {
    pub report: Report,
    pub status: u8,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Self { report, status: 0 }
    }
}

pub fn load_curve(path: &Path) -> Result<Curve, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Curve::from_json(&text)?)
}

/// Jet order that covers every quantity reported per time.
fn report_order(k: usize) -> usize {
    2 * k
}

fn fanning_jet(curve: &Curve, t: f64) -> Result<FrameJet, Failure> {
    let fj = curve.frame_jet(t, report_order(curve.k()))?;
    fj.require_fanning()?;
    Ok(fj)
}

fn push_curve_shape(report: &mut Report, curve: &Curve) {
    report.meta.push("k", curve.k());
    report.meta.push("n", curve.n());
}

pub fn invariants(path: &Path, grid: &Grid, jacobi: bool, mc: Option<MaurerCartan>) -> Result<Outcome, Failure> {
    let curve = load_curve(path)?;
    let k = curve.k();
    let mut report = Report::new("invariants");
    push_curve_shape(&mut report, &curve);
    for &t in &grid.0 {
        let fj = fanning_jet(&curve, t)?;
        let set = wilczynski_invariants(&fj)?;
        let bundle = endomorphism_bundle(&fj)?;
        let size = bundle.d.nrows();
        let mut fields = Fields::default();
        fields.push("condition", fj.condition());
        fields.push("schwarzian", schwarzian(&fj)?.value().clone());
        fields.push("kappa", set.kappa.value().clone());
        for j in 1..=k - 2 {
            fields.push(format!("h{j}"), set.h(j).value().clone());
        }
        fields.push("d_minus_multiplicity", bundle.d_spectrum.0);
        fields.push("d_plus_multiplicity", bundle.d_spectrum.1);
        fields.push("d_square_residual", max_abs(&(&bundle.d * &bundle.d - Mat::identity(size, size))));
        if jacobi || mc.is_some() {
            let normal = normal_frame_jet(&fj)?;
            if jacobi {
                fields.push("jacobi_k", jacobi_matrix(&normal, JacobiKind::K)?);
                fields.push("jacobi_pdot", jacobi_matrix(&normal, JacobiKind::Pdot)?);
            }
            if let Some(lift) = mc {
                let lift = match lift {
                    MaurerCartan::H => Lift::WithH,
                    MaurerCartan::Kderiv => Lift::WithKthDerivative,
                };
                fields.push("maurer_cartan", maurer_cartan_pullback(&normal, lift)?);
            }
        }
        report.samples.push(Sample { t, fields });
    }
    Ok(Outcome::ok(report))
}

pub fn congruent(a: &Path, b: &Path, grid: Option<&Grid>, tol: f64) -> Result<Outcome, Failure> {
    let curve_a = load_curve(a)?;
    let curve_b = load_curve(b)?;
    let samples = match grid {
        Some(g) => g.0.clone(),
        None => default_samples(curve_a.k(), 0.0, 1.0),
    };
    let settings = CongruenceSettings {
        tol,
        ..CongruenceSettings::default()
    };
    let w = are_congruent(&curve_a, &curve_b, &samples, &settings)?;
    let mut report = Report::new("congruent");
    push_curve_shape(&mut report, &curve_a);
    report.meta.push("verdict", w.verdict.as_str());
    report.meta.push("tolerance", tol);
    report.meta.push("nullity", w.nullity);
    report.meta.push("conjugator_condition", w.condition);
    report.meta.push("x", w.x.clone());
    report.meta.push("t", w.t.clone());
    for (i, &t) in w.samples.iter().enumerate() {
        let mut fields = Fields::default();
        if let Some(r) = w.residuals.get(i) {
            fields.push("conjugation_residual", *r);
        }
        if let Some(d) = w.span_distances.get(i) {
            fields.push("span_distance", *d);
        }
        report.samples.push(Sample { t, fields });
    }
    let status = match w.verdict {
        Verdict::Congruent => 0,
        Verdict::NotCongruent => 1,
        Verdict::Inconclusive => 5,
    };
    Ok(Outcome { report, status })
}

pub fn canonicalize(path: &Path, t: f64) -> Result<Outcome, Failure> {
    let curve = load_curve(path)?;
    let fj = fanning_jet(&curve, t)?;
    let canonical = canonicalize_jet(&fj)?;
    let coords = orbit_coordinates(&fj)?;
    let mut report = Report::new("canonicalize");
    push_curve_shape(&mut report, &curve);
    report.meta.push("base_time", t);
    report.meta.push("t", canonical.t.clone());
    let mut fields = Fields::default();
    for j in 0..=curve.k() {
        fields.push(format!("derivative_{j}"), canonical.jet.jet().deriv(j));
    }
    for (i, e) in coords.entries.into_iter().enumerate() {
        fields.push(format!("orbit_coordinate_{}", i + 1), e);
    }
    report.samples.push(Sample { t, fields });
    Ok(Outcome::ok(report))
}

pub fn normal_frame_report(path: &Path, grid: &Grid) -> Result<Outcome, Failure> {
    let curve = load_curve(path)?;
    let record = normal_frame(&curve, &grid.0, &IntegratorSettings::default())?;
    let mut report = Report::new("normal-frame");
    push_curve_shape(&mut report, &curve);
    for (i, &t) in record.times.iter().enumerate() {
        let mut fields = Fields::default();
        fields.push("x", record.x[i].clone());
        fields.push("b", record.b[i].clone());
        for (j, q) in record.q[i].iter().enumerate() {
            fields.push(format!("q{}", j + 2), q.clone());
        }
        fields.push("p1_residual", record.p1_residual[i]);
        report.samples.push(Sample { t, fields });
    }
    Ok(Outcome::ok(report))
}

/// Largest residual of each identity over the grid.
struct Check {
    name: &'static str,
    worst: f64,
}

pub fn verify(path: &Path, grid: &Grid, seed: u64, tol: f64) -> Result<Outcome, Failure> {
    let curve = load_curve(path)?;
    let (k, n) = (curve.k(), curve.n());
    let size = k * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_mat = random_gl(&mut rng, size);
    let t_inv = t_mat.clone().try_inverse().expect("random group elements are invertible");
    let mut checks = [
        "reflection",
        "eigenstructure",
        "nilpotency",
        "equivariance",
        "horizontal_derivative",
        "jacobi",
    ]
    .map(|name| Check { name, worst: 0.0 });

    let mut report = Report::new("verify");
    push_curve_shape(&mut report, &curve);
    for &t in &grid.0 {
        let fj = fanning_jet(&curve, t)?;
        let bundle = endomorphism_bundle(&fj)?;
        let id = Mat::identity(size, size);
        let f = fundamental_endomorphism(&fj, 0)?.value().clone();
        let f_power = (0..k).fold(id.clone(), |acc, _| acc * &f);

        let moved = fj.left_transform(&t_mat)?;
        let base_values = wilczynski_invariants(&fj)?.invariant_values();
        let moved_values = wilczynski_invariants(&moved)?.invariant_values();
        let mut equivariance = base_values
            .iter()
            .zip(&moved_values)
            .map(|(a, b)| scaled_diff(b, a))
            .fold(0.0, f64::max);
        let moved_f = fundamental_endomorphism(&moved, 0)?.value().clone();
        equivariance = equivariance.max(scaled_diff(&moved_f, &(&t_mat * &f * &t_inv)));

        let normal = normal_frame_jet(&fj)?;
        let normal_bundle = endomorphism_bundle(&normal)?;
        let kappa = wilczynski_invariants(&normal)?.kappa.value().clone();
        let h = normal_bundle.h.value();
        let jacobi = scaled_diff(&(&normal_bundle.k * h), &(h * &kappa * (k - 1) as f64));

        let spectrum_ok = bundle.d_spectrum == ((k - 1) * n, n);
        let residuals = [
            max_abs(&(&bundle.d * &bundle.d - &id)),
            if spectrum_ok { 0.0 } else { 1.0 },
            max_abs(&f_power) / (1.0 + max_abs(&f)).powi(k as i32),
            equivariance,
            scaled_diff(bundle.h.value(), bundle.h_from_coefficients.value()),
            jacobi,
        ];
        let mut fields = Fields::default();
        for (check, r) in checks.iter_mut().zip(residuals) {
            check.worst = check.worst.max(r);
            fields.push(check.name, r);
        }
        report.samples.push(Sample { t, fields });
    }
    report.meta.push("seed", seed as usize);
    report.meta.push("tolerance", tol);
    let mut all_pass = true;
    for check in &checks {
        let pass = check.worst < tol;
        all_pass &= pass;
        report.meta.push(format!("{}_max", check.name), check.worst);
        report.meta.push(format!("{}_pass", check.name), pass);
    }
    report.meta.push("passed", all_pass);
    Ok(Outcome {
        report,
        status: if all_pass { 0 } else { 1 },
    })
}

/// `T A(t) X0` for a seeded random `T` and `X0`.
pub fn transform(path: &Path, seed: u64) -> Result<Curve, Failure> {
    let curve = load_curve(path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_gl(&mut rng, curve.k() * curve.n());
    let x0 = random_gl(&mut rng, curve.n());
    Ok(curve.transformed(&t, &x0)?)
}
