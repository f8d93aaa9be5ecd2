//! Property checks shared by the proptest suite and the acceptance run.
//! Each returns the observed deviation so callers can compare it to a tolerance.
#![allow(dead_code)]

use std::f64::consts::PI;

use lzsm_core::aim::{self, PassageConfig, ZetaMode};
use lzsm_core::matrix::TransferMatrix;
use lzsm_core::model::{self, BasisDirection};
use lzsm_core::ode::{self, IntegratorConfig};
use lzsm_core::{Basis, Spinor, SystemParams};
use num_complex::Complex64;
use rand::Rng;

pub fn spinor(alpha: f64, phi: f64) -> Spinor {
    Spinor::from_amplitude_phase(alpha, phi, Basis::Diabatic).unwrap()
}

/// Haar-like random SU(2)·U(1) element from four angles.
pub fn unitary(a: f64, b: f64, c: f64, g: f64) -> TransferMatrix {
    let (s, co) = a.sin_cos();
    let u = Complex64::from_polar(co, b);
    let v = Complex64::from_polar(s, c);
    let ph = Complex64::from_polar(1.0, g);
    TransferMatrix::new([[ph * u, ph * v], [-ph * v.conj(), ph * u.conj()]], Basis::Diabatic).unwrap()
}

pub fn random_unitary<R: Rng>(rng: &mut R) -> TransferMatrix {
    let a = rng.gen::<f64>().sqrt().asin();
    unitary(a, rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
}

/// Largest unitarity deviation over the matrices built for one parameter set.
pub fn unitarity(delta: f64, tau_i: f64, tau_f: f64, eps: f64, gap: f64, t: f64) -> f64 {
    let params = SystemParams::from_adiabaticity(delta, 2.0).unwrap();
    let single = aim::single_passage_matrix(&PassageConfig::new(params, tau_i, tau_f).unwrap()).unwrap();
    let lz = aim::lzsm_transfer_matrix(delta).unwrap();
    let adiabatic = aim::adiabatic_transfer_matrix(delta, tau_f).unwrap();
    let wait = ode::constant_propagator(eps, gap, t);
    let frame = ode::eigenframe(eps, gap).unwrap();
    [single, lz, adiabatic, wait, frame, single.compose(&wait).unwrap()]
        .iter()
        .map(TransferMatrix::unitarity_deviation)
        .fold(0.0, f64::max)
}

/// |P0 + P1 − 1| with P0 from the closed form and P1 from the propagated state.
pub fn probability_sum(alpha: f64, phi: f64, delta: f64, tau_a: f64) -> f64 {
    let p0 = aim::final_probability_diabatic_with_mode(alpha, phi, delta, -tau_a, ZetaMode::Exact).unwrap();
    let params = SystemParams::from_adiabaticity(delta, 2.0).unwrap();
    let n = aim::single_passage_matrix(&PassageConfig::symmetric(params, tau_a).unwrap()).unwrap();
    let p1 = n.apply(&spinor(alpha, phi)).unwrap().p1();
    (p0 + p1 - 1.0).abs()
}

/// Norm drift of an adaptive integration across one sweep and a wait.
pub fn ode_norm_drift(alpha: f64, phi: f64, delta: f64) -> f64 {
    let gap = SystemParams::from_adiabaticity(delta, 2.0).unwrap().delta_gap();
    let drive = [ode::DriveSegment::sweep(2.0, -8.0, 8.0), ode::DriveSegment::wait(16.0, 1.3)];
    let (out, traj) = ode::evolve(&spinor(alpha, phi), gap, &drive, &IntegratorConfig::default()).unwrap();
    traj.max_norm_drift().max((out.norm_sqr() - 1.0).abs())
}

/// Diabatic → adiabatic → diabatic, plus orthogonality of the basis matrix and γ₊² + γ₋² = 1.
pub fn basis_round_trip(alpha: f64, phi: f64, eps: f64, gap: f64) -> f64 {
    let psi = spinor(alpha, phi);
    let ad = model::basis_transform(&psi, eps, gap, BasisDirection::DiabaticToAdiabatic).unwrap();
    let back = model::basis_transform(&ad, eps, gap, BasisDirection::AdiabaticToDiabatic).unwrap();
    let trip = (back.a0() - psi.a0()).norm().max((back.a1() - psi.a1()).norm());
    let norm = (ad.norm_sqr() - 1.0).abs();

    let m = model::basis_matrix(eps, gap).unwrap();
    let mut orth: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dot = m[0][i] * m[0][j] + m[1][i] * m[1][j];
            orth = orth.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let (gp, gm) = model::gamma_pm(eps, gap).unwrap();
    let gamma = (gp * gp + gm * gm - 1.0).abs();
    let bloch = (psi.bloch().norm() - 1.0).abs();
    trip.max(norm).max(orth).max(gamma).max(bloch)
}

/// |ζ_exact − ζ_asymptotic| divided by the bound 10 δ²/τ_a² (≤ 1 passes).
pub fn zeta_bound_ratio(delta: f64, tau_a: f64) -> f64 {
    let diff = (aim::zeta_exact(tau_a, delta) - aim::zeta_asymptotic(tau_a, delta).unwrap()).abs();
    let bound = 10.0 * delta * delta / (tau_a * tau_a);
    if bound == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / bound
    }
}

/// Closed-form three-stage probability vs the explicit matrix product.
pub fn composition_gap(n: &TransferMatrix, zeta1: f64, zeta2: f64, alpha: f64, phi: f64) -> f64 {
    let psi = spinor(alpha, phi);
    let (out, closed) = aim::generalized_composition(n, zeta1, zeta2, &psi).unwrap();
    let before = TransferMatrix::phases(-zeta1, zeta1, Basis::Diabatic);
    let after = TransferMatrix::phases(zeta2, -zeta2, Basis::Diabatic);
    let product = after.apply(&n.apply(&before.apply(&psi).unwrap()).unwrap()).unwrap();
    (closed - product.p0()).abs().max((out.p0() - product.p0()).abs())
}

/// Closed-form occupation vs |Ñψ|² for one symmetric passage.
pub fn closed_form_vs_matrix(alpha: f64, phi: f64, delta: f64, tau_a: f64) -> f64 {
    let params = SystemParams::from_adiabaticity(delta, 2.0).unwrap();
    let cfg = PassageConfig::symmetric(params, tau_a).unwrap();
    let n = aim::single_passage_matrix(&cfg).unwrap();
    let p_matrix = n.apply(&spinor(alpha, phi)).unwrap().p0();
    let p_closed = aim::final_probability_diabatic_with_mode(alpha, phi, delta, -tau_a, ZetaMode::Exact).unwrap();
    (p_matrix - p_closed).abs()
}

/// Spread of the final occupation over end times, start time fixed.
pub fn tau_f_spread(alpha: f64, phi: f64, delta: f64, tau_i: f64, tau_fs: &[f64]) -> f64 {
    let params = SystemParams::from_adiabaticity(delta, 2.0).unwrap();
    let ps: Vec<f64> = tau_fs
        .iter()
        .map(|&tf| {
            let n = aim::single_passage_matrix(&PassageConfig::new(params, tau_i, tf).unwrap()).unwrap();
            n.apply(&spinor(alpha, phi)).unwrap().p0()
        })
        .collect();
    let lo = ps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Extrema of the closed form: best of `n` evenly spaced phases, then refined
/// by golden-section search over the neighboring grid interval.
pub fn scanned_extrema(alpha: f64, delta: f64, tau_a: f64, n: usize) -> (f64, f64) {
    let p = |phi: f64| aim::final_probability_diabatic(alpha, phi, delta, -tau_a).unwrap();
    let h = 2.0 * PI / n as f64;
    let grid: Vec<(f64, f64)> = (0..n).map(|k| -PI + h * k as f64).map(|phi| (phi, p(phi))).collect();
    let lo = grid.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let hi = grid.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    (golden(p, lo - h, lo + h), -golden(|x: f64| -p(x), hi - h, hi + h))
}

/// Minimum of a unimodal function on [a, b].
pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Smallest δ on a grid of step `h` at which |cos θ| ≤ 1 fails for the
/// returning objective, or `None` if it never fails below `delta_max`.
pub fn scanned_feasibility_edge(alpha: f64, h: f64, delta_max: f64) -> Option<f64> {
    let a2 = alpha * alpha;
    let mut d = h;
    while d <= delta_max {
        let p = (-2.0 * PI * d).exp();
        let base = a2 * p + (1.0 - a2) * (1.0 - p);
        let amp = 2.0 * alpha * (1.0 - a2).sqrt() * (p * (1.0 - p)).sqrt();
        if ((a2 - base) / amp).abs() > 1.0 {
            return Some(d);
        }
        d += h;
    }
    None
}
