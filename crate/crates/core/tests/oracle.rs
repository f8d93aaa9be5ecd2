//! Closed-form and sequencer predictions checked against direct integration.

mod common;

use std::f64::consts::{LN_2, PI};

use lzsm_core::aim::ZetaMode;
use lzsm_core::control;
use lzsm_core::ode::{self, DriveSegment, Frame, IntegratorConfig};
use lzsm_core::sequence::{self, AimOptions, Geometry, PlanRequest, PulseSequence, WaitBias};
use lzsm_core::SystemParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const D_HALF: f64 = LN_2 / (2.0 * PI);

fn grid_errors(tau_a: f64) -> Vec<f64> {
    let cfg = IntegratorConfig::endpoints_only();
    let mut errs = Vec::new();
    for &delta in &[0.05, 0.110318, 0.3, 0.8, 1.5] {
        for &a2 in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            for k in 0..8 {
                let phi = -PI + PI * k as f64 / 4.0;
                let r = ode::compare_aim_vs_ode(f64::sqrt(a2), phi, delta, tau_a, &cfg).unwrap();
                errs.push(r.error);
            }
        }
    }
    errs
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn grid_agrees_and_improves_with_sweep_width() {
    let e10 = grid_errors(10.0);
    let e20 = grid_errors(20.0);
    let e40 = grid_errors(40.0);
    let worst = e20.iter().cloned().fold(0.0, f64::max);
    assert_eq!(e20.len(), 200);
    assert!(worst <= 1e-2, "worst {worst}");
    assert!(mean(&e10) > mean(&e20) && mean(&e20) > mean(&e40), "{} {} {}", mean(&e10), mean(&e20), mean(&e40));
}

#[test]
fn adiabatic_limit_agrees() {
    let cfg = IntegratorConfig::endpoints_only();
    for &(a2, phi) in &[(0.2, 0.3), (0.5, -2.0), (0.9, 1.4)] {
        let r = ode::compare_aim_vs_ode(f64::sqrt(a2), phi, 3.0, 20.0, &cfg).unwrap();
        assert!(r.error <= 1e-2, "{r:?}");
    }
}

#[test]
fn sudden_limit_is_exact() {
    let cfg = IntegratorConfig::endpoints_only();
    for &(a2, phi) in &[(0.3, 0.0), (0.7, 2.0)] {
        let r = ode::compare_aim_vs_ode(f64::sqrt(a2), phi, 0.0, 20.0, &cfg).unwrap();
        assert!(r.error <= 1e-6, "{r:?}");
    }
}

#[test]
fn solved_phases_hold_under_integration() {
    let cfg = IntegratorConfig::endpoints_only();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..12 {
        let alpha = rng.gen_range(0.05..0.95f64);
        let delta = rng.gen_range(0.02..1.0);
        let w = control::interference_window(alpha, delta).unwrap();
        let target = w.p_min + rng.gen::<f64>() * w.width;
        let sol = control::solve_phase_for_target_with_mode(alpha, delta, -20.0, target, ZetaMode::Exact).unwrap();
        let r = ode::compare_aim_vs_ode(alpha, sol.phi_i.unwrap(), delta, 20.0, &cfg).unwrap();
        assert!((r.p_ode - target).abs() <= 1e-2, "alpha {alpha} delta {delta}: {r:?}");
    }
}

#[test]
fn return_sweep_is_validated_against_integration() {
    let gap = SystemParams::from_adiabaticity(0.2, 2.0).unwrap().delta_gap();
    let seq = PulseSequence::new(gap)
        .with(DriveSegment::sweep_tau(2.0, -20.0, 20.0))
        .with(DriveSegment::wait(20.0 * gap, 0.9))
        .with(DriveSegment::sweep_tau(-2.0, -20.0, 20.0));
    let psi = common::spinor(0.4, 1.1);
    let (aim, _) = sequence::simulate_sequence_aim(&psi, &seq).unwrap();
    let (num, _) = sequence::simulate_sequence_ode(&psi, &seq, Frame::Eigen, &IntegratorConfig::endpoints_only()).unwrap();
    assert!((aim.p0() - num.p0()).abs() <= 1e-3, "{} vs {}", aim.p0(), num.p0());
}

#[test]
fn wait_phase_agrees_with_exact_wait_after_next_passage() {
    let delta = 0.3;
    let gap = SystemParams::from_adiabaticity(delta, 2.0).unwrap().delta_gap();
    let psi = common::spinor(0.5, 0.2);
    for &m in &[10.0, 14.0, 20.0] {
        let eps = m * gap;
        for &t in &[0.1, 0.77, 2.3] {
            let seq = PulseSequence::new(gap)
                .with(DriveSegment::sweep_tau(2.0, -20.0, 20.0))
                .with(DriveSegment::wait(eps, t))
                .with(DriveSegment::sweep_tau(-2.0, -20.0, 20.0));
            let (pure, _) = sequence::simulate_sequence_aim(&psi, &seq).unwrap();

            // Same program with the wait carried by the exact constant-bias propagator.
            let first = PulseSequence::new(gap).with(seq.segments[0].segment);
            let (mid, _) = sequence::simulate_sequence_aim(&psi, &first).unwrap();
            let end_bias = first.end_bias().unwrap();
            let d = ode::from_frame(&mid, Frame::Eigen, end_bias, gap).unwrap();
            let d = ode::evolve_constant(&d, eps, gap, t).unwrap();
            let start_bias = seq.segments[2].segment.epsilon(seq.segments[2].segment.local_start());
            let f = ode::to_frame(&d, Frame::Eigen, start_bias, gap).unwrap();
            let last = PulseSequence::new(gap).with(seq.segments[2].segment);
            let (exact, _) = sequence::simulate_sequence_aim(&f, &last).unwrap();
            assert!((pure.p0() - exact.p0()).abs() <= 1e-4, "m {m} t {t}: {} vs {}", pure.p0(), exact.p0());
        }
    }
}

#[test]
fn planned_programs_hold_under_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let requests: Vec<PlanRequest> = (0..10)
        .map(|_| PlanRequest {
            p_initial: rng.gen_range(0.0..1.0),
            p_target: rng.gen_range(0.0..1.0),
            delta: rng.gen_range(0.05..0.5),
        })
        .collect();
    let cfg = IntegratorConfig::endpoints_only();
    for geometry in [Geometry::default(), Geometry { wait_bias: WaitBias::SweepEnd, ..Geometry::default() }] {
        let mut feasible = 0;
        for (req, plan) in requests.iter().zip(sequence::plan_batch(&requests, &geometry)) {
            let plan = plan.unwrap();
            if !plan.feasible {
                assert!(!plan.reachable.contains(req.p_target) || plan.reachable.margin(req.p_target) < 1e-6);
                continue;
            }
            feasible += 1;
            let psi = plan.initial_spinor().unwrap();
            let (out, _) = sequence::simulate_sequence_ode(&psi, &plan.sequence, geometry.frame, &cfg).unwrap();
            assert!((out.p0() - req.p_target).abs() <= 2e-2, "{req:?}: {}", out.p0());
            let aim_opts = AimOptions { frame: geometry.frame, zeta_mode: geometry.zeta_mode };
            let (aim, _) = sequence::simulate_sequence_aim_with(&psi, &plan.sequence, &aim_opts).unwrap();
            assert!((aim.p0() - plan.predicted_probability.unwrap()).abs() <= 1e-9);
        }
        assert!(feasible >= 5, "only {feasible} feasible plans");
    }
}

#[test]
fn two_passage_example_reaches_one() {
    let plan = sequence::plan_two_passage(0.01, 1.0, D_HALF, &Geometry::default()).unwrap();
    assert!(plan.feasible);
    assert!((plan.intermediate_probabilities[0] - 0.5).abs() < 1e-6);
    let (out, _) = sequence::simulate_sequence_ode(
        &plan.initial_spinor().unwrap(),
        &plan.sequence,
        Frame::Eigen,
        &IntegratorConfig::endpoints_only(),
    )
    .unwrap();
    assert!(out.p0() >= 1.0 - 2e-2, "{}", out.p0());

    let single = control::interference_window(0.1, D_HALF).unwrap();
    assert!(!single.contains(1.0));
}
