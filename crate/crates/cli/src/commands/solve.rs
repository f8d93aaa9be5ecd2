use clap::{Args, ValueEnum};
use lzsm_core::aim::ZetaMode;
use lzsm_core::control::{self, LocalizationKind, PhaseSolution};

use crate::args::{check_unit, HalfWidth, Physics, Population, ZetaArg};
use crate::error::{CliError, CliResult, Outcome};
use crate::output;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Phase at which the interference term vanishes.
    Zero,
    Constructive,
    Destructive,
    /// Phase giving the final occupation `--target`.
    Target,
    /// Phase giving back the initial occupation.
    Returning,
    /// Complete localization in the lower state: δ and phase.
    Dcl,
    /// Complete localization in the upper state: δ and phase.
    Ccl,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisArg {
    Diabatic,
    Adiabatic,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub mode: SolveMode,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub half_width: HalfWidth,
    #[command(flatten)]
    pub population: Population,
    /// Target final occupation of |0⟩ for `--mode target`.
    #[arg(long)]
    pub target: Option<f64>,
    /// Basis of the returning condition (`--mode returning` only).
    #[arg(long, value_enum, default_value = "diabatic")]
    pub basis: BasisArg,
    #[arg(long, value_enum, default_value = "exact")]
    pub zeta: ZetaArg,
}

pub fn run(args: &SolveArgs) -> CliResult<Outcome> {
    let sol = solve(args)?;
    output::print_json(&sol)?;
    Ok(if sol.feasible { Outcome::Success } else { Outcome::Infeasible })
}

fn solve(args: &SolveArgs) -> CliResult<PhaseSolution> {
    let mode: ZetaMode = args.zeta.into();
    if args.target.is_some() && args.mode != SolveMode::Target {
        return Err(CliError::usage("--target only applies to --mode target"));
    }
    if args.basis == BasisArg::Adiabatic && args.mode != SolveMode::Returning {
        return Err(CliError::usage("--basis adiabatic only applies to --mode returning"));
    }
    let zero_needs_no_alpha = args.mode == SolveMode::Zero;
    let alpha = if zero_needs_no_alpha {
        0.0
    } else {
        args.population.alpha()?
    };

    if matches!(args.mode, SolveMode::Dcl | SolveMode::Ccl) {
        if args.physics.is_set() {
            return Err(CliError::usage("dcl and ccl determine delta; drop --delta/--gap"));
        }
        let kind = if args.mode == SolveMode::Dcl {
            LocalizationKind::Destructive
        } else {
            LocalizationKind::Constructive
        };
        let tau_a = args.half_width.tau_a_unit()?;
        return Ok(control::complete_localization(alpha, kind, -tau_a, mode)?);
    }

    let params = args.physics.params()?;
    let delta = params.adiabaticity();
    let tau_a = args.half_width.tau_a(&params)?;
    let tau_i = -tau_a;
    Ok(match args.mode {
        SolveMode::Zero => control::phi_zero_interference_with_mode(delta, tau_i, mode)?,
        SolveMode::Constructive => control::constructive_phase(alpha, delta, tau_i, mode)?,
        SolveMode::Destructive => control::destructive_phase(alpha, delta, tau_i, mode)?,
        SolveMode::Target => {
            let target = args.target.ok_or_else(|| CliError::usage("--mode target needs --target"))?;
            check_unit("target", target)?;
            control::solve_phase_for_target_with_mode(alpha, delta, tau_i, target, mode)?
        }
        SolveMode::Returning => match args.basis {
            BasisArg::Diabatic => control::transitionless_phase_with_mode(alpha, delta, tau_i, mode)?,
            BasisArg::Adiabatic => control::transitionless_phase_adiabatic_with_mode(alpha, delta, tau_a, mode)?,
        },
        SolveMode::Dcl | SolveMode::Ccl => unreachable!("handled above"),
    })
}
