//! JSON curve files.
//!
//! ```json
//! { "kind": "polynomial", "k": 2, "n": 1,
//!   "coefficients": [ [[1.0], [0.0]], [[0.0], [1.0]] ] }
//! { "kind": "ode", "k": 2, "n": 1,
//!   "P": [ {"degree": 0, "coefficients": [[[0.0]]]},
//!          {"degree": 0, "coefficients": [[[1.0]]]} ],
//!   "A0": [[1.0, 0.0], [0.0, 1.0]] }
//! ```
//!
//! Matrices are nested row-major arrays; polynomial coefficients ascend in degree.

use serde::{Deserialize, Serialize};

use crate::curves::{FrameCurve, FrameJet, OdeFrameCurve, PolynomialFrameCurve, PolynomialMatrix};
use crate::error::{Error, Result};
use crate::linalg::Mat;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialEntry {
    pub degree: usize,
    pub coefficients: Vec<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveFile {
    Polynomial {
        k: usize,
        n: usize,
        coefficients: Vec<Rows>,
    },
    Ode {
        k: usize,
        n: usize,
        #[serde(rename = "P")]
        p: Vec<PolynomialEntry>,
        #[serde(rename = "A0")]
        a0: Rows,
    },
}

fn to_mat(rows: &Rows, shape: (usize, usize), what: &str) -> Result<Mat> {
    let (r, c) = shape;
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse(format!("{what} must be {r}x{c}")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_rows(m: &Mat) -> Rows {
    m.row_iter().map(|row| row.iter().cloned().collect()).collect()
}

/// A parsed curve of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Polynomial(PolynomialFrameCurve),
    Ode(OdeFrameCurve),
}

impl Curve {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CurveFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &CurveFile) -> Result<Self> {
        match file {
            CurveFile::Polynomial { k, n, coefficients } => {
                let (k, n) = (*k, *n);
                let coeffs = coefficients
                    .iter()
                    .enumerate()
                    .map(|(d, rows)| to_mat(rows, (k * n, n), &format!("coefficient {d}")))
                    .collect::<Result<Vec<_>>>()?;
                if coeffs.is_empty() {
                    return Err(Error::Parse("polynomial curve needs coefficients".into()));
                }
                Ok(Curve::Polynomial(PolynomialFrameCurve::new(k, n, coeffs)?))
            }
            CurveFile::Ode { k, n, p, a0 } => {
                let (k, n) = (*k, *n);
                let polys = p
                    .iter()
                    .enumerate()
                    .map(|(i, entry)| {
                        if entry.coefficients.len() != entry.degree + 1 {
                            return Err(Error::Parse(format!(
                                "P_{} declares degree {} but lists {} coefficients",
                                i + 1,
                                entry.degree,
                                entry.coefficients.len()
                            )));
                        }
                        let coeffs = entry
                            .coefficients
                            .iter()
                            .map(|rows| to_mat(rows, (n, n), &format!("P_{} coefficient", i + 1)))
                            .collect::<Result<Vec<_>>>()?;
                        PolynomialMatrix::new(coeffs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let a0 = to_mat(a0, (k * n, k * n), "A0")?;
                Ok(Curve::Ode(OdeFrameCurve::new(k, n, polys, a0)?))
            }
        }
    }

    pub fn to_file(&self) -> CurveFile {
        match self {
            Curve::Polynomial(c) => CurveFile::Polynomial {
                k: c.k(),
                n: c.n(),
                coefficients: c.coeffs().iter().map(to_rows).collect(),
            },
            Curve::Ode(c) => CurveFile::Ode {
                k: c.k(),
                n: c.n(),
                p: c
                    .coefficients()
                    .iter()
                    .map(|pi| PolynomialEntry {
                        degree: pi.degree(),
                        coefficients: pi.coeffs().iter().map(to_rows).collect(),
                    })
                    .collect(),
                a0: to_rows(c.initial_juxtaposed()),
            },
        }
    }

    /// `(T A(t)) X0`.
    pub fn transformed(&self, t: &Mat, x0: &Mat) -> Result<Self> {
        match self {
            Curve::Polynomial(c) => Ok(Curve::Polynomial(
                c.left_transform(t)?
                    .right_multiply(&PolynomialMatrix::constant(x0.clone()))?,
            )),
            Curve::Ode(c) => Ok(Curve::Ode(c.transformed(t, x0)?)),
        }
    }
}

impl FrameCurve for Curve {
    fn k(&self) -> usize {
        match self {
            Curve::Polynomial(c) => c.k(),
            Curve::Ode(c) => c.k(),
        }
    }

    fn n(&self) -> usize {
        match self {
            Curve::Polynomial(c) => c.n(),
            Curve::Ode(c) => c.n(),
        }
    }

    fn frame_jet(&self, t: f64, order: usize) -> Result<FrameJet> {
        match self {
            Curve::Polynomial(c) => c.frame_jet(t, order),
            Curve::Ode(c) => c.frame_jet(t, order),
        }
    }
}
