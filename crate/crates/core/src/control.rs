//! Initial-phase and adiabaticity solvers for interference objectives.
//!
//! The single-passage occupation of |0⟩ is `P = A + B cos θ(φ_i)` with
//! `θ = θ_base + φ_i`. Every solver here works on that form; feasibility is the
//! primitive condition `|cos θ| ≤ 1`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::aim::{self, ZetaMode};
use crate::error::{LzsmError, Result};
use crate::model;

/// Slack allowed when testing a target against the window or `|cos θ| ≤ 1`.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ZeroInterference,
    Constructive,
    Destructive,
    TargetProbability,
    Transitionless,
    Dcl,
    Ccl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizationKind {
    Destructive,
    Constructive,
}

/// Condition on δ attached to a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaConstraint {
    /// Feasible iff δ ≤ value.
    AtMost { value: f64 },
    /// Feasible iff δ ≥ value.
    AtLeast { value: f64 },
    /// The objective fixes δ.
    Exact { value: f64 },
}

/// Reachable range of final probabilities at fixed (α_i, δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceWindow {
    pub p_min: f64,
    pub p_max: f64,
    pub width: f64,
}

impl InterferenceWindow {
    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_min - FEASIBILITY_SLACK && p <= self.p_max + FEASIBILITY_SLACK
    }

    /// Signed distance to the nearest edge; negative outside.
    pub fn margin(&self, p: f64) -> f64 {
        (p - self.p_min).min(self.p_max - p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSolution {
    pub objective: Objective,
    pub feasible: bool,
    /// Principal value in (−π, π]; `None` when infeasible.
    pub phi_i: Option<f64>,
    /// Other arccos branch, when distinct.
    pub phi_i_alternate: Option<f64>,
    pub constraint: Option<DeltaConstraint>,
    pub delta: f64,
    pub window: InterferenceWindow,
    /// Closed-form final probability at `phi_i`.
    pub predicted_probability: Option<f64>,
    /// Any multiple of this may be added to `phi_i`.
    pub period: f64,
}

/// Reduces an angle to (−π, π].
pub fn principal(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Reduces an angle to [0, 2π).
pub fn positive(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn theta_base(delta: f64, tau_i: f64, mode: ZetaMode) -> Result<f64> {
    Ok(aim::theta_with_mode(delta, tau_i, 0.0, mode)?.base())
}

pub fn interference_window(alpha_i: f64, delta: f64) -> Result<InterferenceWindow> {
    check_unit("alpha_i", alpha_i)?;
    let p = model::lz_probability(delta)?;
    let beta = (1.0 - alpha_i * alpha_i).max(0.0).sqrt();
    let stay = alpha_i * p.sqrt();
    let cross = beta * (1.0 - p).sqrt();
    Ok(InterferenceWindow {
        p_min: (stay - cross).powi(2),
        p_max: (stay + cross).powi(2).min(1.0),
        width: 4.0 * stay * cross,
    })
}

/// Largest window width at fixed δ, reached at α_i = 1/√2.
pub fn width_max_over_alpha(delta: f64) -> Result<f64> {
    let p = model::lz_probability(delta)?;
    Ok(2.0 * p.sqrt() * (1.0 - p).sqrt())
}

pub fn phi_zero_interference(delta: f64, tau_i: f64) -> Result<PhaseSolution> {
    phi_zero_interference_with_mode(delta, tau_i, ZetaMode::Asymptotic)
}

/// φ_i with θ = π/2, so the interference term vanishes. The window reported is
/// the one of α_i = 1/√2 (zero interference does not depend on α_i).
pub fn phi_zero_interference_with_mode(delta: f64, tau_i: f64, mode: ZetaMode) -> Result<PhaseSolution> {
    let phi = principal(FRAC_PI_2 - theta_base(delta, tau_i, mode)?);
    let window = interference_window(std::f64::consts::FRAC_1_SQRT_2, delta)?;
    Ok(PhaseSolution {
        objective: Objective::ZeroInterference,
        feasible: true,
        phi_i: Some(phi),
        phi_i_alternate: Some(principal(phi + PI)),
        constraint: None,
        delta,
        window,
        predicted_probability: Some(0.5),
        period: TAU,
    })
}

pub fn constructive_phase(alpha_i: f64, delta: f64, tau_i: f64, mode: ZetaMode) -> Result<PhaseSolution> {
    extremal_phase(alpha_i, delta, tau_i, mode, Objective::Constructive)
}

pub fn destructive_phase(alpha_i: f64, delta: f64, tau_i: f64, mode: ZetaMode) -> Result<PhaseSolution> {
    extremal_phase(alpha_i, delta, tau_i, mode, Objective::Destructive)
}

fn extremal_phase(
    alpha_i: f64,
    delta: f64,
    tau_i: f64,
    mode: ZetaMode,
    objective: Objective,
) -> Result<PhaseSolution> {
    let window = interference_window(alpha_i, delta)?;
    let phi0 = FRAC_PI_2 - theta_base(delta, tau_i, mode)?;
    let (phi, p) = match objective {
        Objective::Constructive => (phi0 - FRAC_PI_2, window.p_max),
        _ => (phi0 + FRAC_PI_2, window.p_min),
    };
    Ok(PhaseSolution {
        objective,
        feasible: true,
        phi_i: Some(principal(phi)),
        phi_i_alternate: None,
        constraint: None,
        delta,
        window,
        predicted_probability: Some(p),
        period: TAU,
    })
}

pub fn solve_phase_for_target(alpha_i: f64, delta: f64, tau_i: f64, p_target: f64) -> Result<PhaseSolution> {
    solve_phase_for_target_with_mode(alpha_i, delta, tau_i, p_target, ZetaMode::Asymptotic)
}

/// Both arccos branches of `A + B cos θ = p_target`; `phi_i` is the branch of
/// smaller magnitude.
pub fn solve_phase_for_target_with_mode(
    alpha_i: f64,
    delta: f64,
    tau_i: f64,
    p_target: f64,
    mode: ZetaMode,
) -> Result<PhaseSolution> {
    check_unit("p_target", p_target)?;
    let window = interference_window(alpha_i, delta)?;
    let (base, amp) = aim::diabatic_coefficients(alpha_i, delta)?;
    let th = theta_base(delta, tau_i, mode)?;
    let mut sol = PhaseSolution {
        objective: Objective::TargetProbability,
        feasible: false,
        phi_i: None,
        phi_i_alternate: None,
        constraint: None,
        delta,
        window,
        predicted_probability: None,
        period: TAU,
    };
    let Some(acos) = required_arccos(p_target - base, amp) else {
        return Ok(sol);
    };
    let (phi, alt) = branches(acos, th);
    sol.feasible = true;
    sol.phi_i = Some(phi);
    sol.phi_i_alternate = alt;
    sol.predicted_probability = Some(aim::final_probability_diabatic_with_mode(
        alpha_i, phi, delta, tau_i, mode,
    )?);
    Ok(sol)
}

/// arccos of `numerator / amp`, or `None` when |ratio| > 1 beyond the slack.
/// With `amp = 0` any phase works iff the numerator vanishes (θ = π/2 is returned).
fn required_arccos(numerator: f64, amp: f64) -> Option<f64> {
    if amp <= FEASIBILITY_SLACK {
        return (numerator.abs() <= FEASIBILITY_SLACK).then_some(FRAC_PI_2);
    }
    let c = numerator / amp;
    if c.abs() > 1.0 + FEASIBILITY_SLACK / amp {
        return None;
    }
    Some(c.clamp(-1.0, 1.0).acos())
}

fn branches(acos: f64, theta_base: f64) -> (f64, Option<f64>) {
    let a = principal(acos - theta_base);
    let b = principal(-acos - theta_base);
    let (first, second) = if a.abs() <= b.abs() { (a, b) } else { (b, a) };
    let distinct = (principal(first - second)).abs() > 1e-15;
    (first, distinct.then_some(second))
}

/// −(1/π) ln|2α_i² − 1|; infinite at α_i² = 1/2.
pub fn delta_feasibility_bound(alpha_i: f64) -> Result<f64> {
    check_unit("alpha_i", alpha_i)?;
    let x = (2.0 * alpha_i * alpha_i - 1.0).abs();
    // α_i = 1/√2 in floating point leaves |2α² − 1| at a few ulps.
    if x <= 4.0 * f64::EPSILON {
        return Ok(f64::INFINITY);
    }
    Ok((-x.ln() / PI).max(0.0))
}

pub fn transitionless_phase(alpha_i: f64, delta: f64, tau_i: f64) -> Result<PhaseSolution> {
    transitionless_phase_with_mode(alpha_i, delta, tau_i, ZetaMode::Asymptotic)
}

/// Phase that returns the initial occupation, `P_f = α_i²`.
pub fn transitionless_phase_with_mode(
    alpha_i: f64,
    delta: f64,
    tau_i: f64,
    mode: ZetaMode,
) -> Result<PhaseSolution> {
    let mut sol = solve_phase_for_target_with_mode(alpha_i, delta, tau_i, alpha_i * alpha_i, mode)?;
    sol.objective = Objective::Transitionless;
    sol.constraint = Some(DeltaConstraint::AtMost {
        value: delta_feasibility_bound(alpha_i)?,
    });
    Ok(sol)
}

/// δ at which the window touches 0 (destructive) or 1 (constructive).
pub fn delta_complete_localization(alpha_i: f64, kind: LocalizationKind) -> Result<f64> {
    if !(alpha_i > 0.0 && alpha_i < 1.0) {
        return Err(LzsmError::domain("alpha_i", alpha_i, "0 < alpha_i < 1"));
    }
    Ok(match kind {
        LocalizationKind::Destructive => -(1.0 - alpha_i * alpha_i).ln() / (2.0 * PI),
        LocalizationKind::Constructive => -alpha_i.ln() / PI,
    })
}

/// δ from [`delta_complete_localization`] together with the matching
/// destructive or constructive phase.
pub fn complete_localization(
    alpha_i: f64,
    kind: LocalizationKind,
    tau_i: f64,
    mode: ZetaMode,
) -> Result<PhaseSolution> {
    let delta = delta_complete_localization(alpha_i, kind)?;
    let mut sol = match kind {
        LocalizationKind::Destructive => destructive_phase(alpha_i, delta, tau_i, mode)?,
        LocalizationKind::Constructive => constructive_phase(alpha_i, delta, tau_i, mode)?,
    };
    sol.objective = match kind {
        LocalizationKind::Destructive => Objective::Dcl,
        LocalizationKind::Constructive => Objective::Ccl,
    };
    sol.constraint = Some(DeltaConstraint::Exact { value: delta });
    Ok(sol)
}

pub fn transitionless_phase_adiabatic(b1_i: f64, delta: f64, tau_a: f64) -> Result<PhaseSolution> {
    transitionless_phase_adiabatic_with_mode(b1_i, delta, tau_a, ZetaMode::Asymptotic)
}

/// Phase that returns the initial excited-state occupation in the adiabatic
/// basis, `P₊ = b_1i²`. Feasible iff 𝒫 ≤ 4b_1i²(1 − b_1i²).
pub fn transitionless_phase_adiabatic_with_mode(
    b1_i: f64,
    delta: f64,
    tau_a: f64,
    mode: ZetaMode,
) -> Result<PhaseSolution> {
    if !(b1_i > 0.0 && b1_i < 1.0) {
        return Err(LzsmError::domain("b1_i", b1_i, "0 < b1_i < 1"));
    }
    let (base, amp) = aim::adiabatic_coefficients(b1_i, delta)?;
    let b2 = 1.0 - b1_i * b1_i;
    let p = model::lz_probability(delta)?;
    let stay = (1.0 - p).sqrt() * b1_i;
    let cross = p.sqrt() * b2.sqrt();
    let window = InterferenceWindow {
        p_min: (stay - cross).powi(2),
        p_max: (stay + cross).powi(2).min(1.0),
        width: 4.0 * stay * cross,
    };
    let bound = -(4.0 * b1_i * b1_i * b2).ln() / (2.0 * PI);
    let mut sol = PhaseSolution {
        objective: Objective::Transitionless,
        feasible: false,
        phi_i: None,
        phi_i_alternate: None,
        constraint: Some(DeltaConstraint::AtLeast { value: bound.max(0.0) }),
        delta,
        window,
        predicted_probability: None,
        period: TAU,
    };
    // P₊ = base − amp cos θ  ⇒  cos θ = (base − b₁²) / amp.
    let Some(acos) = required_arccos(base - b1_i * b1_i, amp) else {
        return Ok(sol);
    };
    let (phi, alt) = branches(acos, theta_base(delta, tau_a, mode)?);
    sol.feasible = true;
    sol.phi_i = Some(phi);
    sol.phi_i_alternate = alt;
    sol.predicted_probability = Some(aim::final_probability_adiabatic_with_mode(
        b1_i, phi, delta, tau_a, mode,
    )?);
    Ok(sol)
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(LzsmError::domain(name, x, "0 <= x <= 1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    /// ln2 / 2π (= ln√2 / π), where 𝒫 = 1/2.
    const D_HALF: f64 = LN_2 / (2.0 * PI);

    fn p_at(alpha: f64, phi: f64, delta: f64, tau_i: f64) -> f64 {
        aim::final_probability_diabatic(alpha, phi, delta, tau_i).unwrap()
    }

    #[test]
    fn principal_range() {
        assert_eq!(principal(PI), PI);
        assert_eq!(principal(-PI), PI);
        assert_abs_diff_eq!(principal(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_eq!(principal(0.0), 0.0);
    }

    #[test]
    fn zero_interference_kills_cos() {
        for &(d, t) in &[(0.1, -20.0), (1.3, -7.0), (0.02, -35.5)] {
            let s = phi_zero_interference(d, t).unwrap();
            let th = aim::theta(d, t, s.phi_i.unwrap()).unwrap();
            assert!(th.value.cos().abs() < 1e-12);
        }
    }

    #[test]
    fn zero_interference_small_delta() {
        // δ → 0, τ_i = −√(π/4): π/4 − τ² = 0.
        let s = phi_zero_interference(0.0, -(PI / 4.0).sqrt()).unwrap();
        assert_abs_diff_eq!(s.phi_i.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn window_examples() {
        let w = interference_window(0.6, D_HALF).unwrap();
        assert_abs_diff_eq!(w.p_max, 0.98, epsilon = 1e-12);
        assert_abs_diff_eq!(w.p_min, 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(w.width, 0.96, epsilon = 1e-12);

        // 𝒫 = 1/2: p = (0.1 ± √0.99)² / 2.
        let w = interference_window(0.1, D_HALF).unwrap();
        let r = 0.99f64.sqrt();
        assert_abs_diff_eq!(w.p_max, (0.1 + r).powi(2) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.p_min, (0.1 - r).powi(2) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.p_max, 0.5995, epsilon = 1e-4);
        assert_abs_diff_eq!(w.p_min, 0.4006, epsilon = 2e-4);

        let w = interference_window(FRAC_1_SQRT_2, D_HALF).unwrap();
        assert_abs_diff_eq!(w.width, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.p_min, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.p_max, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn width_max_examples() {
        assert_abs_diff_eq!(width_max_over_alpha(D_HALF).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(width_max_over_alpha(0.0).unwrap(), 0.0);
        assert!(width_max_over_alpha(20.0).unwrap() < 1e-20);
        for &d in &[0.01, 0.3, 2.0] {
            let w = interference_window(FRAC_1_SQRT_2, d).unwrap().width;
            assert_abs_diff_eq!(width_max_over_alpha(d).unwrap(), w, epsilon = 1e-14);
        }
        // Grid search for the maximizing δ.
        let best = (1..4000)
            .map(|i| i as f64 * 1e-4)
            .max_by(|a, b| width_max_over_alpha(*a).unwrap().total_cmp(&width_max_over_alpha(*b).unwrap()))
            .unwrap();
        assert_abs_diff_eq!(best, D_HALF, epsilon = 1e-4);
    }

    #[test]
    fn extremal_phases() {
        let c = constructive_phase(0.6, D_HALF, -20.0, ZetaMode::Asymptotic).unwrap();
        let d = destructive_phase(0.6, D_HALF, -20.0, ZetaMode::Asymptotic).unwrap();
        assert_abs_diff_eq!(p_at(0.6, c.phi_i.unwrap(), D_HALF, -20.0), 0.98, epsilon = 1e-12);
        assert_abs_diff_eq!(p_at(0.6, d.phi_i.unwrap(), D_HALF, -20.0), 0.02, epsilon = 1e-12);
        let z = phi_zero_interference(D_HALF, -20.0).unwrap().phi_i.unwrap();
        assert_abs_diff_eq!(principal(z - FRAC_PI_2 - c.phi_i.unwrap()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn target_at_p_max_is_constructive() {
        let w = interference_window(0.6, 0.3).unwrap();
        let s = solve_phase_for_target(0.6, 0.3, -20.0, w.p_max).unwrap();
        let c = constructive_phase(0.6, 0.3, -20.0, ZetaMode::Asymptotic).unwrap();
        assert!(s.feasible);
        assert_abs_diff_eq!(principal(s.phi_i.unwrap() - c.phi_i.unwrap()), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn target_round_trip_and_infeasible() {
        let s = solve_phase_for_target(0.6, D_HALF, -20.0, 0.5).unwrap();
        assert!(s.feasible);
        for phi in [s.phi_i.unwrap(), s.phi_i_alternate.unwrap()] {
            assert_abs_diff_eq!(p_at(0.6, phi, D_HALF, -20.0), 0.5, epsilon = 1e-10);
        }
        let s = solve_phase_for_target(0.1, D_HALF, -20.0, 1.0).unwrap();
        assert!(!s.feasible);
        assert!(s.phi_i.is_none());
        assert_abs_diff_eq!(s.window.p_max, 0.5995, epsilon = 1e-4);
    }

    #[test]
    fn transitionless_examples() {
        let s = transitionless_phase(FRAC_1_SQRT_2, 3.0, -20.0).unwrap();
        assert!(s.feasible);
        let z = phi_zero_interference(3.0, -20.0).unwrap();
        let same = principal(s.phi_i.unwrap() - z.phi_i.unwrap()).abs() < 1e-9
            || principal(s.phi_i_alternate.unwrap() - z.phi_i.unwrap()).abs() < 1e-9;
        assert!(same);

        let a = 0.75f64.sqrt();
        let s = transitionless_phase(a, 0.05, -20.0).unwrap();
        assert!(s.feasible);
        assert_abs_diff_eq!(p_at(a, s.phi_i.unwrap(), 0.05, -20.0), 0.75, epsilon = 1e-10);
        let t = solve_phase_for_target(a, 0.05, -20.0, 0.75).unwrap();
        assert_eq!(t.phi_i, s.phi_i);

        assert!(!transitionless_phase(a, 0.5, -20.0).unwrap().feasible);
    }

    #[test]
    fn feasibility_bound_examples() {
        assert_eq!(delta_feasibility_bound(FRAC_1_SQRT_2).unwrap(), f64::INFINITY);
        assert_eq!(delta_feasibility_bound(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(delta_feasibility_bound(0.75f64.sqrt()).unwrap(), LN_2 / PI, epsilon = 1e-15);
    }

    #[test]
    fn feasibility_bound_matches_scan() {
        for a2 in [0.6, 0.75, 0.9] {
            let a = f64::sqrt(a2);
            let step = 1e-4;
            let last_ok = (0..20000)
                .map(|i| i as f64 * step)
                .take_while(|&d| transitionless_phase(a, d, -20.0).unwrap().feasible)
                .last()
                .unwrap();
            let bound = delta_feasibility_bound(a).unwrap();
            assert!((last_ok - bound).abs() <= step, "{a2}: {last_ok} vs {bound}");
        }
    }

    #[test]
    fn localization_examples() {
        let h = FRAC_1_SQRT_2;
        assert_abs_diff_eq!(delta_complete_localization(h, LocalizationKind::Destructive).unwrap(), D_HALF, epsilon = 1e-15);
        assert_abs_diff_eq!(delta_complete_localization(h, LocalizationKind::Constructive).unwrap(), D_HALF, epsilon = 1e-15);
        assert_abs_diff_eq!(
            delta_complete_localization(0.1, LocalizationKind::Constructive).unwrap(),
            -(0.1f64).ln() / PI,
            epsilon = 1e-15
        );
        assert!(delta_complete_localization(0.0, LocalizationKind::Destructive).is_err());
        assert!(delta_complete_localization(1.0, LocalizationKind::Constructive).is_err());
    }

    #[test]
    fn localization_windows_on_grid() {
        for i in 1..100 {
            let a = i as f64 / 100.0;
            let dd = delta_complete_localization(a, LocalizationKind::Destructive).unwrap();
            let dc = delta_complete_localization(a, LocalizationKind::Constructive).unwrap();
            assert!(interference_window(a, dd).unwrap().p_min <= 1e-12);
            assert!(interference_window(a, dc).unwrap().p_max >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn adiabatic_transitionless() {
        let s = transitionless_phase_adiabatic(FRAC_1_SQRT_2, 0.01, 20.0).unwrap();
        assert!(s.feasible);

        let b = 0.9f64.sqrt();
        let edge = -(0.36f64).ln() / (2.0 * PI);
        assert_abs_diff_eq!(edge, 0.1626, epsilon = 1e-4);
        assert!(!transitionless_phase_adiabatic(b, edge - 1e-3, 20.0).unwrap().feasible);
        let s = transitionless_phase_adiabatic(b, edge + 1e-3, 20.0).unwrap();
        assert!(s.feasible);
        let p = aim::final_probability_adiabatic(b, s.phi_i.unwrap(), edge + 1e-3, 20.0).unwrap();
        assert_abs_diff_eq!(p, 0.9, epsilon = 1e-10);
        // Diabatic counterpart at the same α is feasible only for small δ.
        assert!(transitionless_phase(b, 0.05, -20.0).unwrap().feasible);
        assert!(!transitionless_phase(b, 1.0, -20.0).unwrap().feasible);
        assert!(transitionless_phase_adiabatic(b, 1.0, 20.0).unwrap().feasible);
    }
}
