use std::f64::consts::PI;

use clap::Args;
use log::info;
use lzsm_core::aim::ZetaMode;
use lzsm_core::ode::{self, Frame, IntegratorConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{FrameArg, Grid, HalfWidth, ZetaArg};
use crate::error::{CliResult, Outcome};
use crate::output;

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct ValidateArgs {
    #[arg(long, default_value = "0,0.1,0.36,0.5,0.75,1")]
    pub alpha2: Grid,
    /// Defaults to 8 evenly spaced phases in [0, 2π).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<Grid>,
    #[arg(long, default_value = "0,0.05,0.110318,0.5,1,2")]
    pub delta: Grid,
    #[command(flatten)]
    pub half_width: HalfWidth,
    /// Largest accepted |P_AIM − P_ODE|.
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value = "eigen")]
    pub frame: FrameArg,
    #[arg(long, value_enum, default_value = "exact")]
    pub zeta: ZetaArg,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Case {
    alpha2: f64,
    phi: f64,
    delta: f64,
    p_aim: f64,
    p_ode: f64,
    error: f64,
}

#[derive(Serialize)]
struct Report {
    cases: usize,
    tolerance: f64,
    tau_a: f64,
    frame: Frame,
    max_error: f64,
    mean_error: f64,
    violations: usize,
    worst: Case,
    passed: bool,
}

pub fn run(args: &ValidateArgs) -> CliResult<Outcome> {
    let tau_a = args.half_width.tau_a_unit()?;
    for &a2 in &args.alpha2.0 {
        crate::args::check_unit("alpha2", a2)?;
    }
    let phis = match &args.phi {
        Some(g) => g.0.clone(),
        None => (0..8).map(|k| k as f64 * PI / 4.0).collect(),
    };
    let frame: Frame = args.frame.into();
    let mode: ZetaMode = args.zeta.into();
    let config = IntegratorConfig::endpoints_only();

    let mut grid = Vec::new();
    for &alpha2 in &args.alpha2.0 {
        for &phi in &phis {
            for &delta in &args.delta.0 {
                grid.push((alpha2, phi, delta));
            }
        }
    }
    let cases = grid
        .par_iter()
        .map(|&(alpha2, phi, delta)| {
            let r = ode::compare_aim_vs_ode_with(alpha2.sqrt(), phi, delta, tau_a, frame, mode, &config)?;
            Ok(Case {
                alpha2,
                phi,
                delta,
                p_aim: r.p_aim,
                p_ode: r.p_ode,
                error: r.error,
            })
        })
        .collect::<lzsm_core::Result<Vec<Case>>>()?;

    let worst = *cases
        .iter()
        .max_by(|a, b| a.error.total_cmp(&b.error))
        .expect("grids are non-empty");
    let violations = cases.iter().filter(|c| c.error.is_nan() || c.error > args.tolerance).count();
    let report = Report {
        cases: cases.len(),
        tolerance: args.tolerance,
        tau_a,
        frame,
        max_error: worst.error,
        mean_error: cases.iter().map(|c| c.error).sum::<f64>() / cases.len() as f64,
        violations,
        worst,
        passed: violations == 0,
    };
    info!("validated {} cases, max error {:.3e}", report.cases, report.max_error);
    output::print_json(&report)?;
    if violations > 0 {
        eprintln!(
            "error: {violations} case(s) exceed {}; worst alpha2={} phi={} delta={} error={:.3e}",
            args.tolerance, worst.alpha2, worst.phi, worst.delta, worst.error
        );
        return Ok(Outcome::Violation);
    }
    Ok(Outcome::Success)
}
