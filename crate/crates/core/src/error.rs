use thiserror::Error;

/// Errors raised by jet arithmetic, curve evaluation and invariant computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("jets are expanded at different base times ({left} vs {right})")]
    BaseTimeMismatch { left: f64, right: f64 },

    #[error("leading coefficient is singular or ill-conditioned (condition {condition:.3e}, limit {limit:.1e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("curve is not fanning at t = {t} (condition of juxtaposed matrix {condition:.3e})")]
    NotFanning { t: f64, condition: f64 },

    #[error("insufficient jet order: {needed} required, {available} available")]
    InsufficientOrder { needed: usize, available: usize },

    #[error("frame is not normal (|P1| = {residual:.3e}, threshold {threshold:.3e})")]
    NotNormal { residual: f64, threshold: f64 },

    #[error("integrator failed at t = {t}: step size {step:.3e} underflowed")]
    IntegratorFailure { t: f64, step: f64 },

    #[error("could not parse curve file: {0}")]
    Parse(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("need at least 2 samples, got {count}")]
    DegenerateSamples { count: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
