pub mod plan;
pub mod simulate;
pub mod solve;
pub mod sweep;
pub mod validate;
pub mod window;

use std::str::FromStr;

use lzsm_core::aim::ZetaMode;
use lzsm_core::control;

use crate::error::{CliError, CliResult};

/// `--phi` value: a number in radians or a named phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiSpec {
    Value(f64),
    Constructive,
    Destructive,
    Zero,
    Returning,
}

impl FromStr for PhiSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constructive" => Ok(PhiSpec::Constructive),
            "destructive" => Ok(PhiSpec::Destructive),
            "zero" => Ok(PhiSpec::Zero),
            "returning" | "transitionless" => Ok(PhiSpec::Returning),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(PhiSpec::Value)
                .ok_or_else(|| format!("expected a number or constructive|destructive|zero|returning, got {s:?}")),
        }
    }
}

impl PhiSpec {
    /// Concrete phase for a symmetric passage starting at `-tau_a`.
    pub fn resolve(self, alpha: f64, delta: f64, tau_a: f64, mode: ZetaMode) -> CliResult<f64> {
        let tau_i = -tau_a;
        let sol = match self {
            PhiSpec::Value(v) => return Ok(v),
            PhiSpec::Constructive => control::constructive_phase(alpha, delta, tau_i, mode)?,
            PhiSpec::Destructive => control::destructive_phase(alpha, delta, tau_i, mode)?,
            PhiSpec::Zero => control::phi_zero_interference_with_mode(delta, tau_i, mode)?,
            PhiSpec::Returning => control::transitionless_phase_with_mode(alpha, delta, tau_i, mode)?,
        };
        sol.phi_i.ok_or_else(|| {
            CliError::usage(format!(
                "no returning phase exists for alpha2 = {} at delta = {delta}",
                alpha * alpha
            ))
        })
    }
}
