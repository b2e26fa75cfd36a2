//! Differential invariants of fanning curves in the Grassmannian `Gr(n, kn)`
//! and a decision procedure for `GL(kn)`-congruence.
//!
//! A curve is represented by a frame `A(t)`, a `kn x n` matrix whose columns
//! span the point of the Grassmannian. All derivatives are handled through
//! truncated Taylor jets ([`MatrixJet`]).

pub mod congruence;
pub mod curve_file;
pub mod curves;
pub mod error;
pub mod fixtures;
pub mod invariants;
pub mod linalg;
pub mod matjet;
pub mod ode;

pub use congruence::{are_congruent, canonicalize_jet, orbit_coordinates, CongruenceSettings, CongruenceWitness, Verdict};
pub use curve_file::{Curve, CurveFile};
pub use curves::{standard_jet, FrameCurve, FrameJet, OdeFrameCurve, PolynomialFrameCurve, PolynomialMatrix};
pub use error::{Error, Result};
pub use linalg::Mat;
pub use matjet::MatrixJet;
pub use ode::IntegratorSettings;
