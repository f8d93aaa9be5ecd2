use clap::Args;
use lzsm_core::control::{self, LocalizationKind};
use serde::Serialize;

use crate::args::{Physics, Population};
use crate::error::CliResult;
use crate::error::Outcome;
use crate::output;

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct WindowArgs {
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub population: Population,
}

#[derive(Serialize)]
struct Report {
    alpha2: f64,
    delta: f64,
    p_min: f64,
    p_max: f64,
    width: f64,
    /// Largest width at this δ over all initial occupations.
    width_max: f64,
    /// Largest δ with a returning phase; `null` when unbounded.
    delta_returning_max: Option<f64>,
    delta_dcl: Option<f64>,
    delta_ccl: Option<f64>,
}

pub fn run(args: &WindowArgs) -> CliResult<Outcome> {
    let alpha = args.population.alpha()?;
    let delta = args.physics.params()?.adiabaticity();
    let w = control::interference_window(alpha, delta)?;
    let bound = control::delta_feasibility_bound(alpha)?;
    let report = Report {
        alpha2: alpha * alpha,
        delta,
        p_min: w.p_min,
        p_max: w.p_max,
        width: w.width,
        width_max: control::width_max_over_alpha(delta)?,
        delta_returning_max: bound.is_finite().then_some(bound),
        delta_dcl: control::delta_complete_localization(alpha, LocalizationKind::Destructive).ok(),
        delta_ccl: control::delta_complete_localization(alpha, LocalizationKind::Constructive).ok(),
    };
    output::print_json(&report)?;
    Ok(Outcome::Success)
}
