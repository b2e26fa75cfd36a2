//! Adaptive Dormand–Prince 5(4) integration of matrix-valued ODEs.

use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; zero picks one from the interval length.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 0.0,
            min_step: 1e-14,
            max_steps: 200_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// fifth-order weights (also the last stage row, FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// difference between fifth- and fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<F>(mut f: F, t0: f64, y0: &Mat, t1: f64, settings: &IntegratorSettings) -> Result<Mat>
where
    F: FnMut(f64, &Mat) -> Result<Mat>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0.clone());
    }
    let dir = span.signum();
    let mut h = if settings.initial_step > 0.0 {
        settings.initial_step.min(span.abs())
    } else {
        (span.abs() / 100.0).min(0.01)
    } * dir;

    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y)?;
    let mut steps = 0;

    while (t1 - t) * dir > 0.0 {
        if steps >= settings.max_steps {
            return Err(Error::IntegratorFailure { t, step: h.abs() });
        }
        steps += 1;
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        let k2 = f(t + C2 * h, &(&y + &k1 * (A21 * h)))?;
        let k3 = f(t + C3 * h, &(&y + (&k1 * A31 + &k2 * A32) * h))?;
        let k4 = f(t + C4 * h, &(&y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h))?;
        let k5 = f(
            t + C5 * h,
            &(&y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h),
        )?;
        let k6 = f(
            t + h,
            &(&y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h),
        )?;
        let y_new = &y + (&k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * h;
        let k7 = f(t + h, &y_new)?;
        let err = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;

        let mut norm = 0.0_f64;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y_new.iter()) {
            let scale = settings.atol + settings.rtol * a.abs().max(b.abs());
            norm = norm.max((e / scale).abs());
        }

        if norm <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
        }
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= if norm <= 1.0 { factor } else { factor.min(1.0) };
        if h.abs() < settings.min_step && (t1 - t) * dir > settings.min_step {
            return Err(Error::IntegratorFailure { t, step: h.abs() });
        }
    }
    Ok(y)
}

/// Integrates through an ordered list of times, returning the state at each.
///
/// The initial condition is imposed at `times[0]`.
pub fn integrate_through<F>(mut f: F, times: &[f64], y0: &Mat, settings: &IntegratorSettings) -> Result<Vec<Mat>>
where
    F: FnMut(f64, &Mat) -> Result<Mat>,
{
    let mut out = Vec::with_capacity(times.len());
    let Some(&first) = times.first() else {
        return Ok(out);
    };
    let mut y = y0.clone();
    let mut t = first;
    out.push(y.clone());
    for &next in &times[1..] {
        y = integrate(&mut f, t, &y, next, settings)?;
        t = next;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y0 = Mat::from_element(1, 1, 1.0);
        let y = integrate(|_, y| Ok(y.clone()), 0.0, &y0, 1.0, &IntegratorSettings::default()).unwrap();
        assert!((y[(0, 0)] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_rotation() {
        // y' = y J with J the rotation generator; y(t) = exp(tJ)
        let j = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let y0 = Mat::identity(2, 2);
        let y = integrate(|_, y| Ok(y * &j), 0.0, &y0, -2.0, &IntegratorSettings::default()).unwrap();
        let t: f64 = -2.0;
        let expected = Mat::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!(crate::linalg::max_abs(&(y - expected)) < 1e-9);
    }

    #[test]
    fn step_budget_exhaustion_is_reported() {
        let settings = IntegratorSettings {
            max_steps: 3,
            ..Default::default()
        };
        let y0 = Mat::from_element(1, 1, 1.0);
        let res = integrate(|_, y| Ok(y * 50.0), 0.0, &y0, 10.0, &settings);
        assert!(matches!(res, Err(Error::IntegratorFailure { .. })));
    }
}
