use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use log::info;
use lzsm_core::aim::ZetaMode;
use lzsm_core::ode::{self, DriveSegment, IntegratorConfig, Stepping, Trajectory};
use lzsm_core::sequence::{self, AimOptions, BoundaryState, PulseSequence};
use lzsm_core::{Basis, Spinor, SystemParams};
use serde::Serialize;

use super::PhiSpec;
use crate::args::{FrameArg, HalfWidth, Physics, Population, ZetaArg};
use crate::error::{CliError, CliResult, Outcome};
use crate::output::{self, Format};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Aim,
    Ode,
    Both,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub half_width: HalfWidth,
    #[command(flatten)]
    pub population: Population,
    /// Initial relative phase (radians) or constructive|destructive|zero|returning.
    #[arg(long, default_value = "0")]
    pub phi: PhiSpec,
    /// Pulse program (JSON) to run instead of a single symmetric sweep.
    #[arg(long, conflicts_with_all = ["delta", "gap", "velocity", "tau", "time"])]
    pub pulse: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub engine: Engine,
    /// Frame in which the initial and final states are expressed.
    #[arg(long, value_enum, default_value = "eigen")]
    pub frame: FrameArg,
    #[arg(long, value_enum, default_value = "exact")]
    pub zeta: ZetaArg,
    /// Record every n-th integrator step (0: segment boundaries only).
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Integrate with this constant step instead of adaptively.
    #[arg(long)]
    pub fixed_step: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Trajectory file (ODE samples, or boundary states for the AIM engine).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Serialize)]
struct Summary {
    engine: &'static str,
    frame: lzsm_core::ode::Frame,
    delta_gap: f64,
    segments: usize,
    alpha2: f64,
    phi: f64,
    p0_aim: Option<f64>,
    p0_ode: Option<f64>,
    difference: Option<f64>,
    accepted_steps: Option<usize>,
    rejected_steps: Option<usize>,
    max_norm_drift: Option<f64>,
    renormalizations: Option<usize>,
    runtime_s: f64,
    output: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let alpha = args.population.alpha()?;
    let mode: ZetaMode = args.zeta.into();
    let frame: ode::Frame = args.frame.into();

    let (seq, phi) = match &args.pulse {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let seq = PulseSequence::from_json(BufReader::new(file)).map_err(|e| CliError::usage(e.to_string()))?;
            seq.validate()?;
            let PhiSpec::Value(phi) = args.phi else {
                return Err(CliError::usage("named --phi values need a single sweep; give a number with --pulse"));
            };
            (seq, phi)
        }
        None => {
            let params = args.physics.params()?;
            let tau_a = args.half_width.tau_a(&params)?;
            let phi = args.phi.resolve(alpha, params.adiabaticity(), tau_a, mode)?;
            (single_sweep(&params, tau_a), phi)
        }
    };
    let psi = Spinor::from_amplitude_phase(alpha, phi, Basis::Diabatic)?;

    let config = integrator_config(args)?;
    let run_aim = args.engine != Engine::Ode;
    let run_ode = args.engine != Engine::Aim;

    let aim = if run_aim {
        let opts = AimOptions { frame, zeta_mode: mode };
        Some(sequence::simulate_sequence_aim_with(&psi, &seq, &opts)?)
    } else {
        None
    };
    let ode_run = if run_ode {
        Some(sequence::simulate_sequence_ode(&psi, &seq, frame, &config)?)
    } else {
        None
    };

    let format = Format::resolve(args.format, args.output.as_deref());
    if let Some(path) = &args.output {
        match (&ode_run, &aim) {
            (Some((_, traj)), aim) => {
                let overlay = aim.as_ref().map(|(_, states)| aim_overlay(&psi, states, traj));
                output::write_atomic(path, |w| write_trajectory(w, traj, overlay.as_deref(), format))?;
            }
            (None, Some((_, states))) => {
                output::write_atomic(path, |w| write_boundaries(w, &psi, seq.start_time(), states, format))?;
            }
            (None, None) => unreachable!("at least one engine runs"),
        }
        info!("wrote {}", path.display());
    }

    let p0_aim = aim.as_ref().map(|(s, _)| s.p0());
    let p0_ode = ode_run.as_ref().map(|(s, _)| s.p0());
    let traj = ode_run.as_ref().map(|(_, t)| t);
    let summary = Summary {
        engine: match args.engine {
            Engine::Aim => "aim",
            Engine::Ode => "ode",
            Engine::Both => "both",
        },
        frame,
        delta_gap: seq.delta_gap,
        segments: seq.segments.len(),
        alpha2: alpha * alpha,
        phi,
        p0_aim,
        p0_ode,
        difference: p0_aim.zip(p0_ode).map(|(a, b)| (a - b).abs()),
        accepted_steps: traj.map(|t| t.accepted_steps),
        rejected_steps: traj.map(|t| t.rejected_steps),
        max_norm_drift: traj.map(Trajectory::max_norm_drift),
        renormalizations: traj.map(|t| t.renormalizations.len()),
        runtime_s: started.elapsed().as_secs_f64(),
        output: args.output.clone(),
    };
    output::print_json(&summary)?;
    Ok(Outcome::Success)
}

pub fn single_sweep(params: &SystemParams, tau_a: f64) -> PulseSequence {
    PulseSequence::new(params.delta_gap()).with(DriveSegment::sweep_tau(params.velocity(), -tau_a, tau_a))
}

fn integrator_config(args: &SimulateArgs) -> CliResult<IntegratorConfig> {
    let mut config = IntegratorConfig::default().with_stride(args.stride);
    if let Some(step) = args.fixed_step {
        config.stepping = Stepping::Fixed { step };
    }
    config = config.with_tolerances(args.rtol.unwrap_or(config.rtol), args.atol.unwrap_or(config.atol));
    config.validate()?;
    Ok(config)
}

/// AIM |a0|² held constant between segment boundaries, aligned with the samples.
fn aim_overlay(psi: &Spinor, states: &[BoundaryState], traj: &Trajectory) -> Vec<f64> {
    traj.samples
        .iter()
        .map(|s| {
            states
                .iter()
                .take_while(|b| b.t <= s.t + 1e-12 * b.t.abs().max(1.0))
                .last()
                .map_or(psi.p0(), |b| b.spinor.p0())
        })
        .collect()
}

fn write_trajectory(w: &mut dyn Write, traj: &Trajectory, overlay: Option<&[f64]>, format: Format) -> CliResult<()> {
    match format {
        Format::Csv => traj.write_csv_with(w, overlay.map(|o| ("p0_aim", o)))?,
        Format::Json => traj.write_json(w)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundaryRow {
    segment: Option<usize>,
    t: f64,
    re_a0: f64,
    im_a0: f64,
    re_a1: f64,
    im_a1: f64,
    p0: f64,
    p1: f64,
    wait_phase: f64,
}

fn boundary_rows(psi: &Spinor, t0: f64, states: &[BoundaryState]) -> Vec<BoundaryRow> {
    let row = |segment, t, s: &Spinor, wait_phase| BoundaryRow {
        segment,
        t,
        re_a0: s.a0().re,
        im_a0: s.a0().im,
        re_a1: s.a1().re,
        im_a1: s.a1().im,
        p0: s.p0(),
        p1: s.p1(),
        wait_phase,
    };
    std::iter::once(row(None, t0, psi, 0.0))
        .chain(states.iter().map(|b| row(Some(b.segment), b.t, &b.spinor, b.wait_phase)))
        .collect()
}

fn write_boundaries(w: &mut dyn Write, psi: &Spinor, t0: f64, states: &[BoundaryState], format: Format) -> CliResult<()> {
    let rows = boundary_rows(psi, t0, states);
    match format {
        Format::Csv => {
            writeln!(w, "# lzsm-boundaries v1")?;
            let mut out = csv::Writer::from_writer(w);
            for r in &rows {
                out.serialize(r)?;
            }
            out.flush()?;
        }
        Format::Json => serde_json::to_writer_pretty(w, &rows)?,
    }
    Ok(())
}
