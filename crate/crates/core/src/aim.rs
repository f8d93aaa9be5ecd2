//! Adiabatic-impulse model of a single linear passage.
//!
//! A passage from `τ_i < 0` to `τ_f > 0` is split into adiabatic phase
//! accumulation, an instantaneous transition at the crossing, and adiabatic
//! phase accumulation again:
//!
//! ```text
//! Ñ = U_ad(τ_f, 0) · N · U_ad(0, τ_i)
//! U_ad(0, τ_i) = diag(e^{−iζ_i}, e^{iζ_i}),   U_ad(τ_f, 0) = diag(e^{iζ_f}, e^{−iζ_f})
//! N = [[√𝒫, √(1−𝒫) e^{iφ_S}], [−√(1−𝒫) e^{−iφ_S}, √𝒫]]
//! ```
//!
//! `ζ` is always evaluated at `|τ|` (`ζ_i = ζ(|τ_i|) ≥ 0`), and `√T` carries half
//! of the phase of `T = (1 − 𝒫) e^{2iφ_S}`.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LzsmError, Result};
use crate::matrix::TransferMatrix;
use crate::model::{self, Basis, Spinor, SystemParams};

/// Below this |τ| the large-time expansions behind the model lose accuracy.
pub const ASYMPTOTIC_GUARD: f64 = 5.0;

/// Which expression is used for the adiabatic phase ζ(τ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZetaMode {
    /// Closed-form integral `∫₀^τ √(2δ + s²) ds`.
    #[default]
    Exact,
    /// Four-term large-τ expansion.
    Asymptotic,
}

/// `ζ(τ) = ∫₀^τ √(2δ + s²) ds` in closed form; odd in τ. Requires δ ≥ 0.
pub fn zeta_exact(tau: f64, delta: f64) -> f64 {
    let t = tau.abs();
    let value = if delta == 0.0 {
        0.5 * t * t
    } else {
        let two_delta = 2.0 * delta;
        0.5 * (t * (two_delta + t * t).sqrt() + two_delta * (t / two_delta.sqrt()).asinh())
    };
    value.copysign(tau)
}

/// `τ_a²/2 + δ/2 − (δ/2) ln δ + δ ln(√2 τ_a)`, accurate to O(δ²/τ_a²).
pub fn zeta_asymptotic(tau_a: f64, delta: f64) -> Result<f64> {
    if !(tau_a.is_finite() && tau_a > 0.0) {
        return Err(LzsmError::domain("tau_a", tau_a, "tau_a > 0"));
    }
    model::check_adiabaticity(delta)?;
    let mut z = 0.5 * tau_a * tau_a;
    if delta > 0.0 {
        z += 0.5 * delta - 0.5 * delta * delta.ln() + delta * (SQRT_2 * tau_a).ln();
    }
    Ok(z)
}

/// ζ(|τ|) in the requested mode.
pub fn zeta(tau: f64, delta: f64, mode: ZetaMode) -> Result<f64> {
    let t = tau.abs();
    match mode {
        ZetaMode::Exact => {
            model::check_adiabaticity(delta)?;
            Ok(zeta_exact(t, delta))
        }
        ZetaMode::Asymptotic => zeta_asymptotic(t, delta),
    }
}

/// The LZSM transition matrix `N` at the crossing.
pub fn lzsm_transfer_matrix(delta: f64) -> Result<TransferMatrix> {
    let p = model::lz_probability(delta)?;
    let phi_s = model::stokes_phase(delta)?;
    let r = Complex64::new(p.sqrt(), 0.0);
    let t = Complex64::from_polar((1.0 - p).sqrt(), phi_s);
    Ok(TransferMatrix::from_raw([[r, t], [-t.conj(), r]], Basis::Diabatic))
}

/// One linear passage through the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageConfig {
    pub params: SystemParams,
    /// Dimensionless start time, negative.
    pub tau_i: f64,
    /// Dimensionless end time, positive.
    pub tau_f: f64,
    #[serde(default)]
    pub zeta_mode: ZetaMode,
}

impl PassageConfig {
    pub fn new(params: SystemParams, tau_i: f64, tau_f: f64) -> Result<Self> {
        let cfg = PassageConfig {
            params,
            tau_i,
            tau_f,
            zeta_mode: ZetaMode::Exact,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `τ_i = −τ_a`, `τ_f = τ_a`.
    pub fn symmetric(params: SystemParams, tau_a: f64) -> Result<Self> {
        Self::new(params, -tau_a, tau_a)
    }

    pub fn with_zeta_mode(mut self, mode: ZetaMode) -> Self {
        self.zeta_mode = mode;
        self
    }

    pub fn adiabaticity(&self) -> f64 {
        self.params.adiabaticity()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_i.is_finite() && self.tau_i < 0.0) {
            return Err(LzsmError::domain("tau_i", self.tau_i, "tau_i < 0"));
        }
        if !(self.tau_f.is_finite() && self.tau_f > 0.0) {
            return Err(LzsmError::domain("tau_f", self.tau_f, "tau_f > 0"));
        }
        warn_if_short(self.tau_i);
        warn_if_short(self.tau_f);
        Ok(())
    }
}

fn warn_if_short(tau: f64) {
    if tau.abs() < ASYMPTOTIC_GUARD {
        warn!(
            "|tau| = {} is below {}; adiabatic-impulse accuracy degrades",
            tau.abs(),
            ASYMPTOTIC_GUARD
        );
    }
}

/// Dressed single-passage matrix `Ñ = U_ad(τ_f, 0) N U_ad(0, τ_i)`.
pub fn single_passage_matrix(config: &PassageConfig) -> Result<TransferMatrix> {
    config.validate()?;
    let delta = config.adiabaticity();
    let p = model::lz_probability(delta)?;
    let phi_s = model::stokes_phase(delta)?;
    let zi = zeta(config.tau_i, delta, config.zeta_mode)?;
    let zf = zeta(config.tau_f, delta, config.zeta_mode)?;

    let n11 = Complex64::from_polar(p.sqrt(), zf - zi);
    let n12 = Complex64::from_polar((1.0 - p).sqrt(), zf + zi + phi_s);
    Ok(TransferMatrix::from_raw(
        [[n11, n12], [-n12.conj(), n11.conj()]],
        Basis::Diabatic,
    ))
}

/// Applies a propagator to a spinor of the same basis.
pub fn propagate(spinor: &Spinor, matrix: &TransferMatrix) -> Result<Spinor> {
    matrix.apply(spinor)
}

/// Interference phase θ(δ, τ_a, φ_i), with its additive parts kept.
///
/// `value = pi_quarter + arg_gamma + quadratic + logarithmic + finite_time + initial_phase`.
/// `finite_time` is `2ζ_exact(τ_a) − 2ζ_asymptotic(τ_a)` in exact mode and zero
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub value: f64,
    pub pi_quarter: f64,
    pub arg_gamma: f64,
    /// τ_a²
    pub quadratic: f64,
    /// 2δ ln(√2 τ_a)
    pub logarithmic: f64,
    pub finite_time: f64,
    pub initial_phase: f64,
}

impl Theta {
    /// θ without the initial phase.
    pub fn base(&self) -> f64 {
        self.value - self.initial_phase
    }
}

/// θ with the asymptotic ζ; `τ_a = |tau_i|`.
pub fn theta(delta: f64, tau_i: f64, phi_i: f64) -> Result<Theta> {
    theta_with_mode(delta, tau_i, phi_i, ZetaMode::Asymptotic)
}

pub fn theta_with_mode(delta: f64, tau_i: f64, phi_i: f64, mode: ZetaMode) -> Result<Theta> {
    model::check_adiabaticity(delta)?;
    let tau_a = tau_i.abs();
    if !(tau_a.is_finite() && tau_a > 0.0) {
        return Err(LzsmError::domain("tau_i", tau_i, "tau_i != 0"));
    }
    let arg_gamma = model::arg_gamma_one_minus_i_delta(delta)?;
    let quadratic = tau_a * tau_a;
    let logarithmic = if delta > 0.0 {
        2.0 * delta * (SQRT_2 * tau_a).ln()
    } else {
        0.0
    };
    let finite_time = match mode {
        ZetaMode::Asymptotic => 0.0,
        ZetaMode::Exact => 2.0 * (zeta_exact(tau_a, delta) - zeta_asymptotic(tau_a, delta)?),
    };
    Ok(Theta {
        value: FRAC_PI_4 + arg_gamma + quadratic + logarithmic + finite_time + phi_i,
        pi_quarter: FRAC_PI_4,
        arg_gamma,
        quadratic,
        logarithmic,
        finite_time,
        initial_phase: phi_i,
    })
}

/// Non-interference part and interference amplitude of the diabatic final
/// probability: `P = a + b cos θ`.
pub(crate) fn diabatic_coefficients(alpha_i: f64, delta: f64) -> Result<(f64, f64)> {
    check_unit_interval("alpha_i", alpha_i)?;
    let p = model::lz_probability(delta)?;
    let a2 = alpha_i * alpha_i;
    let beta = (1.0 - a2).max(0.0).sqrt();
    let base = a2 * p + (1.0 - a2) * (1.0 - p);
    let amp = 2.0 * alpha_i * beta * p.sqrt() * (1.0 - p).sqrt();
    Ok((base, amp))
}

/// Long-time occupation of |0⟩ after one passage started from
/// `α_i|0⟩ + √(1−α_i²) e^{iφ_i}|1⟩` at `τ_i`. Uses the asymptotic θ.
pub fn final_probability_diabatic(alpha_i: f64, phi_i: f64, delta: f64, tau_i: f64) -> Result<f64> {
    final_probability_diabatic_with_mode(alpha_i, phi_i, delta, tau_i, ZetaMode::Asymptotic)
}

pub fn final_probability_diabatic_with_mode(
    alpha_i: f64,
    phi_i: f64,
    delta: f64,
    tau_i: f64,
    mode: ZetaMode,
) -> Result<f64> {
    let (base, amp) = diabatic_coefficients(alpha_i, delta)?;
    let th = theta_with_mode(delta, tau_i, phi_i, mode)?;
    Ok((base + amp * th.value.cos()).clamp(0.0, 1.0))
}

/// Symmetric-passage matrix in the adiabatic basis (excited, ground), far
/// from the crossing on both ends.
pub fn adiabatic_transfer_matrix(delta: f64, tau_a: f64) -> Result<TransferMatrix> {
    adiabatic_transfer_matrix_with_mode(delta, tau_a, ZetaMode::Asymptotic)
}

pub fn adiabatic_transfer_matrix_with_mode(
    delta: f64,
    tau_a: f64,
    mode: ZetaMode,
) -> Result<TransferMatrix> {
    if !(tau_a.is_finite() && tau_a > 0.0) {
        return Err(LzsmError::domain("tau_a", tau_a, "tau_a > 0"));
    }
    let p = model::lz_probability(delta)?;
    let phase = 2.0 * zeta(tau_a, delta, mode)? + model::stokes_phase(delta)?;
    let t = Complex64::from_polar((1.0 - p).sqrt(), phase);
    let r = Complex64::new(p.sqrt(), 0.0);
    Ok(TransferMatrix::from_raw([[t.conj(), -r], [r, t]], Basis::Adiabatic))
}

/// Occupation `P₊ = |b_1f|²` after a symmetric passage started from
/// `b_1i |+⟩ + √(1 − b_1i²) e^{iφ_i} |−⟩` (adiabatic basis).
///
/// The interference term enters with a minus sign relative to the diabatic
/// formula; this is the sign produced by [`adiabatic_transfer_matrix`].
pub fn final_probability_adiabatic(b1_i: f64, phi_i: f64, delta: f64, tau_a: f64) -> Result<f64> {
    final_probability_adiabatic_with_mode(b1_i, phi_i, delta, tau_a, ZetaMode::Asymptotic)
}

pub fn final_probability_adiabatic_with_mode(
    b1_i: f64,
    phi_i: f64,
    delta: f64,
    tau_a: f64,
    mode: ZetaMode,
) -> Result<f64> {
    let (base, amp) = adiabatic_coefficients(b1_i, delta)?;
    let th = theta_with_mode(delta, tau_a, phi_i, mode)?;
    Ok((base - amp * th.value.cos()).clamp(0.0, 1.0))
}

/// `P₊ = base − amp cos θ`.
pub(crate) fn adiabatic_coefficients(b1_i: f64, delta: f64) -> Result<(f64, f64)> {
    check_unit_interval("b1_i", b1_i)?;
    let p = model::lz_probability(delta)?;
    let b1 = b1_i * b1_i;
    let base = (1.0 - p) * b1 + p * (1.0 - b1);
    let amp = 2.0 * (p * (1.0 - p)).sqrt() * b1_i * (1.0 - b1).max(0.0).sqrt();
    Ok((base, amp))
}

/// Three-stage evolution `diag(e^{iζ₂}, e^{−iζ₂}) · N · diag(e^{−iζ₁}, e^{iζ₁})`
/// for an arbitrary unitary transition matrix `N`.
///
/// Returns the propagated spinor and the closed-form occupation of |0⟩,
/// `|N₁₁|²α² + |N₁₂|²(1 − α²) + 2α√(1−α²)|N₁₁||N₁₂| cos(2ζ₁ + φ_i + φ₁₂ − φ₁₁)`,
/// where `α = |a0|` and `φ_i = arg a1 − arg a0` of the input.
pub fn generalized_composition(
    n_generic: &TransferMatrix,
    zeta1: f64,
    zeta2: f64,
    spinor: &Spinor,
) -> Result<(Spinor, f64)> {
    let dev = n_generic.unitarity_deviation();
    if dev > TransferMatrix::UNITARY_TOLERANCE {
        return Err(LzsmError::NotUnitary { deviation: dev });
    }
    let basis = n_generic.basis();
    let before = TransferMatrix::phases(-zeta1, zeta1, basis);
    let after = TransferMatrix::phases(zeta2, -zeta2, basis);
    let out = after.compose(n_generic)?.compose(&before)?.apply(spinor)?;

    let (alpha, phi_i) = spinor.amplitude_phase();
    let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
    let n11 = n_generic.get(0, 0);
    let n12 = n_generic.get(0, 1);
    let interference = 2.0 * alpha * beta * n11.norm() * n12.norm();
    let prob = n11.norm_sqr() * alpha * alpha
        + n12.norm_sqr() * beta * beta
        + interference * (2.0 * zeta1 + phi_i + n12.arg() - n11.arg()).cos();
    Ok((out, prob))
}

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(LzsmError::domain(name, x, "0 <= x <= 1"))
    }
}
