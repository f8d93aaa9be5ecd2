use thiserror::Error;

use crate::model::Basis;

pub type Result<T> = std::result::Result<T, LzsmError>;

#[derive(Debug, Error)]
pub enum LzsmError {
    /// A scalar argument fell outside the domain of the operation.
    #[error("{name} = {value} is outside the allowed domain ({requirement})")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// Δ = ε = 0: the adiabatic basis direction is undefined.
    #[error("degenerate point: both bias and gap are zero")]
    DegeneratePoint,

    #[error("basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    #[error("spinor is not normalized: |a0|^2 + |a1|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("matrix is not unitary: max |M^dag M - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("invalid drive segment: {0}")]
    InvalidSegment(String),

    #[error(
        "integration failed at t = {t}: {reason} (steps = {steps}, last step = {step:e})"
    )]
    IntegrationFailure {
        t: f64,
        steps: usize,
        step: f64,
        reason: &'static str,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LzsmError {
    pub(crate) fn domain(name: &'static str, value: f64, requirement: &'static str) -> Self {
        LzsmError::Domain {
            name,
            value,
            requirement,
        }
    }
}
