use std::path::PathBuf;

use clap::Args;
use lzsm_core::ode::IntegratorConfig;
use lzsm_core::sequence::{self, Geometry, PlanResult, WaitBias};
use serde::Serialize;

use crate::args::{check_unit, FrameArg, HalfWidth, Physics, ZetaArg};
use crate::error::{CliError, CliResult, Outcome};
use crate::output;

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct PlanArgs {
    /// Initial occupation of |0⟩.
    #[arg(long)]
    pub p_initial: f64,
    /// Desired final occupation of |0⟩.
    #[arg(long)]
    pub p_target: f64,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub half_width: HalfWidth,
    /// Wait bias as a multiple of the gap.
    #[arg(long, default_value_t = 20.0)]
    pub wait_multiple: f64,
    /// Wait at the bias where the first sweep ends instead.
    #[arg(long, conflicts_with = "wait_multiple")]
    pub wait_at_sweep_end: bool,
    /// Whole wait periods added to the shortest wait.
    #[arg(long, default_value_t = 0)]
    pub extra_periods: u32,
    #[arg(long, value_enum, default_value = "eigen")]
    pub frame: FrameArg,
    #[arg(long, value_enum, default_value = "exact")]
    pub zeta: ZetaArg,
    /// Integrate the planned program and report the achieved occupation.
    #[arg(long)]
    pub verify: bool,
    /// Write the pulse program (JSON) here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Verification {
    p_ode: f64,
    error: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    plan: &'a PlanResult,
    verification: Option<Verification>,
}

pub fn run(args: &PlanArgs) -> CliResult<Outcome> {
    check_unit("p_initial", args.p_initial)?;
    check_unit("p_target", args.p_target)?;
    let params = args.physics.params()?;
    if params.delta_gap() == 0.0 {
        return Err(CliError::usage("planning needs a non-zero gap"));
    }
    let geometry = Geometry {
        tau_a: args.half_width.tau_a(&params)?,
        velocity: params.velocity(),
        wait_bias: if args.wait_at_sweep_end {
            WaitBias::SweepEnd
        } else {
            WaitBias::GapMultiple {
                multiple: args.wait_multiple,
            }
        },
        zeta_mode: args.zeta.into(),
        frame: args.frame.into(),
        extra_periods: args.extra_periods,
    };
    let plan = sequence::plan_two_passage(args.p_initial, args.p_target, params.adiabaticity(), &geometry)?;

    let verification = if args.verify && plan.feasible {
        let (out, _) = sequence::simulate_sequence_ode(
            &plan.initial_spinor()?,
            &plan.sequence,
            geometry.frame,
            &IntegratorConfig::endpoints_only(),
        )?;
        Some(Verification {
            p_ode: out.p0(),
            error: (out.p0() - args.p_target).abs(),
        })
    } else {
        None
    };

    if let (Some(path), true) = (&args.output, plan.feasible) {
        output::write_atomic(path, |w| Ok(plan.sequence.write_json(w)?))?;
    }
    output::print_json(&Report {
        plan: &plan,
        verification,
    })?;
    Ok(if plan.feasible { Outcome::Success } else { Outcome::Infeasible })
}
