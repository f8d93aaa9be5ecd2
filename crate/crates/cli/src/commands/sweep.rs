use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use lzsm_core::aim::{self, ZetaMode};
use lzsm_core::ode::{self, Frame, IntegratorConfig};
use lzsm_core::{Basis, Spinor};
use rayon::prelude::*;
use serde::Serialize;

use super::simulate::Engine;
use crate::args::{FrameArg, Grid, HalfWidth, ZetaArg};
use crate::error::{CliError, CliResult, Outcome};
use crate::output;

pub const SWEEP_CSV_HEADER: &str = "# lzsm-sweep v1";

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// Initial occupations: `start:stop:count`, a comma list, or one value.
    #[arg(long)]
    pub alpha2: Grid,
    /// Initial phases, same syntax.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub phi: Grid,
    /// Adiabaticities, same syntax.
    #[arg(long)]
    pub delta: Grid,
    #[command(flatten)]
    pub half_width: HalfWidth,
    #[arg(long, value_enum, default_value = "aim")]
    pub engine: Engine,
    #[arg(long, value_enum, default_value = "eigen")]
    pub frame: FrameArg,
    #[arg(long, value_enum, default_value = "exact")]
    pub zeta: ZetaArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Row {
    alpha2: f64,
    phi: f64,
    delta: f64,
    p_aim: Option<f64>,
    p_ode: Option<f64>,
    error: Option<f64>,
}

pub fn run(args: &SweepArgs) -> CliResult<Outcome> {
    let (alpha2s, phis, deltas) = (&args.alpha2.0, &args.phi.0, &args.delta.0);
    for &a2 in alpha2s {
        crate::args::check_unit("alpha2", a2)?;
    }
    if let Some(&d) = deltas.iter().find(|d| d.is_nan() || **d < 0.0) {
        return Err(CliError::usage(format!("delta must be non-negative, got {d}")));
    }
    let tau_a = args.half_width.tau_a_unit()?;
    let mode: ZetaMode = args.zeta.into();
    let frame: Frame = args.frame.into();
    let config = IntegratorConfig::endpoints_only();

    let mut points = Vec::with_capacity(alpha2s.len() * phis.len() * deltas.len());
    for &a2 in alpha2s {
        for &phi in phis {
            for &delta in deltas {
                points.push((a2, phi, delta));
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|&(alpha2, phi, delta)| {
            let alpha = alpha2.sqrt();
            let p_aim = match args.engine {
                Engine::Ode => None,
                _ => Some(aim::final_probability_diabatic_with_mode(alpha, phi, delta, -tau_a, mode)?),
            };
            let p_ode = match args.engine {
                Engine::Aim => None,
                _ => {
                    let psi = Spinor::from_amplitude_phase(alpha, phi, Basis::Diabatic)?;
                    Some(ode::evolve_sweep(&psi, delta, -tau_a, tau_a, frame, &config)?.p0())
                }
            };
            Ok(Row {
                alpha2,
                phi,
                delta,
                p_aim,
                p_ode,
                error: p_aim.zip(p_ode).map(|(a, b)| (a - b).abs()),
            })
        })
        .collect::<lzsm_core::Result<Vec<Row>>>()?;

    output::write_to(args.output.as_deref(), |w: &mut dyn Write| {
        writeln!(w, "{SWEEP_CSV_HEADER}")?;
        let mut out = csv::Writer::from_writer(w);
        for r in &rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(Outcome::Success)
}
