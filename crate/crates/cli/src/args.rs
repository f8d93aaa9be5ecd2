//! Argument groups shared by several subcommands.

use clap::{Args, ValueEnum};
use lzsm_core::aim::ZetaMode;
use lzsm_core::model::DimensionlessTime;
use lzsm_core::ode::Frame;
use lzsm_core::SystemParams;

use crate::error::{CliError, CliResult};

pub const DEFAULT_TAU_A: f64 = 20.0;

/// Drive parameters, as δ or as (Δ, v).
#[derive(Args, Debug, Clone, Default)]
pub struct Physics {
    /// Adiabaticity δ = Δ²/(4v).
    #[arg(long, conflicts_with = "gap")]
    pub delta: Option<f64>,
    /// Gap Δ (ħ = 1).
    #[arg(long)]
    pub gap: Option<f64>,
    /// Sweep velocity v [default: 2, for which t = τ].
    #[arg(long)]
    pub velocity: Option<f64>,
}

impl Physics {
    pub fn is_set(&self) -> bool {
        self.delta.is_some() || self.gap.is_some() || self.velocity.is_some()
    }

    pub fn params(&self) -> CliResult<SystemParams> {
        let v = self.velocity.unwrap_or(SystemParams::UNIT_TIME_VELOCITY);
        match (self.delta, self.gap) {
            (Some(d), None) => Ok(SystemParams::from_adiabaticity(d, v)?),
            (None, Some(g)) => Ok(SystemParams::new(g, v)?),
            _ => Err(CliError::usage("give either --delta or --gap")),
        }
    }
}

/// Sweep half-width, dimensionless or physical.
#[derive(Args, Debug, Clone, Default)]
pub struct HalfWidth {
    /// Sweep half-width in dimensionless time τ [default: 20].
    #[arg(long, conflicts_with = "time")]
    pub tau: Option<f64>,
    /// Sweep half-width in physical time t.
    #[arg(long)]
    pub time: Option<f64>,
}

impl HalfWidth {
    pub fn tau_a(&self, params: &SystemParams) -> CliResult<f64> {
        let tau = match (self.tau, self.time) {
            (Some(t), _) => t,
            (None, Some(t)) => params.to_dimensionless(t).tau(),
            (None, None) => DEFAULT_TAU_A,
        };
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CliError::usage(format!("sweep half-width must be positive, got tau = {tau}")));
        }
        Ok(tau)
    }

    /// Half-width at velocity 2 when no drive parameters are involved.
    pub fn tau_a_unit(&self) -> CliResult<f64> {
        let v = SystemParams::UNIT_TIME_VELOCITY;
        let tau = match (self.tau, self.time) {
            (Some(t), _) => t,
            (None, Some(t)) => DimensionlessTime::from_physical(t, v).tau(),
            (None, None) => DEFAULT_TAU_A,
        };
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CliError::usage(format!("sweep half-width must be positive, got tau = {tau}")));
        }
        Ok(tau)
    }
}

/// Initial occupation of |0⟩.
#[derive(Args, Debug, Clone, Default)]
pub struct Population {
    /// Initial occupation |a0|².
    #[arg(long, conflicts_with = "alpha")]
    pub alpha2: Option<f64>,
    /// Initial amplitude |a0|.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl Population {
    pub fn alpha(&self) -> CliResult<f64> {
        let a = match (self.alpha2, self.alpha) {
            (Some(a2), _) => {
                check_unit("alpha2", a2)?;
                a2.sqrt()
            }
            (None, Some(a)) => a,
            (None, None) => return Err(CliError::usage("give --alpha2 or --alpha")),
        };
        check_unit("alpha", a)?;
        Ok(a)
    }
}

pub fn check_unit(name: &str, x: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(CliError::usage(format!("{name} must lie in [0, 1], got {x}")))
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameArg {
    /// Endpoint eigenstates labeled by the diabatic state they continue.
    Eigen,
    /// Raw diabatic amplitudes.
    Diabatic,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Eigen => Frame::Eigen,
            FrameArg::Diabatic => Frame::Diabatic,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaArg {
    Exact,
    Asymptotic,
}

impl From<ZetaArg> for ZetaMode {
    fn from(z: ZetaArg) -> Self {
        match z {
            ZetaArg::Exact => ZetaMode::Exact,
            ZetaArg::Asymptotic => ZetaMode::Asymptotic,
        }
    }
}

/// A parsed value grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_grid(s).map(Grid)
    }
}

/// `a:b:n` (n points, both ends included), `x,y,z`, or a single value.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("range {s:?} must be start:stop:count"));
        };
        let (a, b) = (parse(a)?, parse(b)?);
        let n: usize = n.trim().parse().map_err(|e| format!("bad count in {s:?}: {e}"))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(parse).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(format!("grid {s:?} is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("grid {s:?} has non-finite values"));
    }
    Ok(values)
}
