//! Multi-passage pulse programs and two-passage planning.
//!
//! A program is a list of sweeps and constant-bias waits. The adiabatic-impulse
//! simulation carries the state in the frame selected by [`Frame`]: with
//! [`Frame::Eigen`] the components are amplitudes on the instantaneous
//! eigenstates at the current bias, a wait is an exact pair of phases, and a
//! jump of the bias between segments is an exact real rotation of the frame.
//! Return sweeps (negative velocity) use `σx Ñ σx`.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aim::{self, PassageConfig, ZetaMode};
use crate::control::{self, InterferenceWindow, PhaseSolution, FEASIBILITY_SLACK};
use crate::error::{LzsmError, Result};
use crate::matrix::TransferMatrix;
use crate::model::{Basis, DimensionlessTime, Spinor, SystemParams};
use crate::ode::{self, DriveSegment, Frame, IntegratorConfig, Trajectory};

pub const PULSE_SCHEMA_VERSION: u32 = 1;

/// Waits at `|ε₀| ≥ PURE_PHASE_MIN_RATIO · Δ` use the pure-phase propagator.
pub const PURE_PHASE_MIN_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSegment {
    #[serde(flatten)]
    pub segment: DriveSegment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

/// Ordered drive program at a fixed gap Δ. Segments follow one another on the
/// global clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub schema_version: u32,
    pub delta_gap: f64,
    pub segments: Vec<AnnotatedSegment>,
}

impl PulseSequence {
    pub fn new(delta_gap: f64) -> Self {
        PulseSequence {
            schema_version: PULSE_SCHEMA_VERSION,
            delta_gap,
            segments: Vec::new(),
        }
    }

    pub fn push(&mut self, segment: DriveSegment) -> &mut Self {
        self.segments.push(AnnotatedSegment {
            segment,
            annotation: None,
        });
        self
    }

    pub fn push_annotated(&mut self, segment: DriveSegment, note: impl Into<String>) -> &mut Self {
        self.segments.push(AnnotatedSegment {
            segment,
            annotation: Some(note.into()),
        });
        self
    }

    pub fn with(mut self, segment: DriveSegment) -> Self {
        self.push(segment);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn drive(&self) -> Vec<DriveSegment> {
        self.segments.iter().map(|s| s.segment).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.segment.duration()).sum()
    }

    /// Global time at which the program starts (the first segment's local start).
    pub fn start_time(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.segment.local_start())
    }

    /// Bias at the start of the first segment, if any.
    pub fn start_bias(&self) -> Option<f64> {
        self.segments.first().map(|s| s.segment.epsilon(s.segment.local_start()))
    }

    pub fn end_bias(&self) -> Option<f64> {
        self.segments.last().map(|s| end_bias(&s.segment))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != PULSE_SCHEMA_VERSION {
            return Err(LzsmError::InvalidSegment(format!(
                "unsupported pulse schema version {} (expected {PULSE_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.delta_gap.is_finite() && self.delta_gap >= 0.0) {
            return Err(LzsmError::domain("delta_gap", self.delta_gap, "delta_gap >= 0"));
        }
        for (k, s) in self.segments.iter().enumerate() {
            s.segment.validate()?;
            if let DriveSegment::LinearSweep { t_start, t_end, .. } = s.segment {
                if !(t_start < 0.0 && t_end > 0.0) {
                    return Err(LzsmError::InvalidSegment(format!(
                        "segment {k}: a sweep must cross the degeneracy once (t_start < 0 < t_end)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json<R: Read>(input: R) -> Result<Self> {
        let seq: PulseSequence = serde_json::from_reader(input)?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn end_bias(seg: &DriveSegment) -> f64 {
    seg.epsilon(seg.local_start() + seg.duration())
}

/// Relative phase `arg a₁ − arg a₀` gained during a wait,
/// `−sgn(ε₀) √(Δ² + ε₀²) t_wait`.
pub fn wait_phase(epsilon0: f64, delta_gap: f64, t_wait: f64) -> Result<f64> {
    if epsilon0 == 0.0 || !epsilon0.is_finite() {
        return Err(LzsmError::domain(
            "epsilon0",
            epsilon0,
            "epsilon0 != 0 (use evolve_constant at zero bias)",
        ));
    }
    if !(t_wait.is_finite() && t_wait >= 0.0) {
        return Err(LzsmError::domain("t_wait", t_wait, "t_wait >= 0"));
    }
    Ok(-epsilon0.signum() * delta_gap.hypot(epsilon0) * t_wait)
}

/// Options of the adiabatic-impulse sequence simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AimOptions {
    pub frame: Frame,
    pub zeta_mode: ZetaMode,
}

impl Default for AimOptions {
    fn default() -> Self {
        AimOptions {
            frame: Frame::Eigen,
            zeta_mode: ZetaMode::Exact,
        }
    }
}

/// State after one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryState {
    pub segment: usize,
    /// Global time at the end of the segment.
    pub t: f64,
    pub spinor: Spinor,
    /// Sum of wait phases so far.
    pub wait_phase: f64,
}

pub fn simulate_sequence_aim(spinor: &Spinor, sequence: &PulseSequence) -> Result<(Spinor, Vec<BoundaryState>)> {
    simulate_sequence_aim_with(spinor, sequence, &AimOptions::default())
}

/// Adiabatic-impulse propagation through the program. Input and output
/// components are in `options.frame` at the first and last bias.
pub fn simulate_sequence_aim_with(
    spinor: &Spinor,
    sequence: &PulseSequence,
    options: &AimOptions,
) -> Result<(Spinor, Vec<BoundaryState>)> {
    sequence.validate()?;
    check_diabatic(spinor)?;
    let gap = sequence.delta_gap;
    let mut state = *spinor;
    let mut states = Vec::with_capacity(sequence.segments.len());
    let mut t = sequence
        .segments
        .first()
        .map_or(0.0, |s| s.segment.local_start());
    let mut accumulated = 0.0;
    let mut prev_bias: Option<f64> = None;

    for (k, s) in sequence.segments.iter().enumerate() {
        let seg = s.segment;
        let start = seg.epsilon(seg.local_start());
        if let Some(prev) = prev_bias {
            state = reframe(&state, options.frame, prev, start, gap)?;
        }
        state = match seg {
            DriveSegment::LinearSweep { .. } => passage_matrix(&seg, gap, options.zeta_mode)?.apply(&state)?,
            DriveSegment::ConstantWait { epsilon0, duration } => {
                let (next, phase) = apply_wait(&state, epsilon0, gap, duration, options.frame)?;
                accumulated += phase;
                next
            }
        };
        state.renormalize();
        t += seg.duration();
        prev_bias = Some(end_bias(&seg));
        states.push(BoundaryState {
            segment: k,
            t,
            spinor: state,
            wait_phase: accumulated,
        });
    }
    Ok((state, states))
}

/// Dressed passage matrix of one sweep; return sweeps are σx-conjugated.
pub fn passage_matrix(segment: &DriveSegment, delta_gap: f64, mode: ZetaMode) -> Result<TransferMatrix> {
    let DriveSegment::LinearSweep {
        velocity,
        t_start,
        t_end,
    } = *segment
    else {
        return Err(LzsmError::InvalidSegment("passage_matrix needs a sweep".into()));
    };
    let v = velocity.abs();
    let params = SystemParams::new(delta_gap, v)?;
    let tau_i = DimensionlessTime::from_physical(t_start, v).tau();
    let tau_f = DimensionlessTime::from_physical(t_end, v).tau();
    let cfg = PassageConfig::new(params, tau_i, tau_f)?.with_zeta_mode(mode);
    let m = aim::single_passage_matrix(&cfg)?;
    Ok(if velocity < 0.0 { m.swapped() } else { m })
}

fn apply_wait(state: &Spinor, epsilon0: f64, gap: f64, duration: f64, frame: Frame) -> Result<(Spinor, f64)> {
    let phase = if epsilon0 == 0.0 {
        0.0
    } else {
        wait_phase(epsilon0, gap, duration)?
    };
    if epsilon0 != 0.0 && epsilon0.abs() >= PURE_PHASE_MIN_RATIO * gap {
        let m = TransferMatrix::phases(-0.5 * phase, 0.5 * phase, Basis::Diabatic);
        return Ok((m.apply(state)?, phase));
    }
    warn!(
        "wait at |epsilon0| = {} is within {}x the gap {}; using the exact constant-bias propagator",
        epsilon0.abs(),
        PURE_PHASE_MIN_RATIO,
        gap
    );
    if gap == 0.0 {
        return Ok((*state, phase));
    }
    let diabatic = ode::from_frame(state, frame, epsilon0, gap)?;
    let out = ode::evolve_constant(&diabatic, epsilon0, gap, duration)?;
    Ok((ode::to_frame(&out, frame, epsilon0, gap)?, phase))
}

/// Re-expresses frame components when the bias jumps from `from` to `to`.
fn reframe(state: &Spinor, frame: Frame, from: f64, to: f64, gap: f64) -> Result<Spinor> {
    if frame == Frame::Diabatic || from == to || gap == 0.0 {
        return Ok(*state);
    }
    let diabatic = ode::from_frame(state, frame, from, gap)?;
    ode::to_frame(&diabatic, frame, to, gap)
}

fn check_diabatic(spinor: &Spinor) -> Result<()> {
    if spinor.basis() != Basis::Diabatic {
        return Err(LzsmError::BasisMismatch {
            expected: Basis::Diabatic,
            found: spinor.basis(),
        });
    }
    Ok(())
}

/// Direct integration of the program, with input and output in `frame` at the
/// first and last bias.
pub fn simulate_sequence_ode(
    spinor: &Spinor,
    sequence: &PulseSequence,
    frame: Frame,
    config: &IntegratorConfig,
) -> Result<(Spinor, Trajectory)> {
    sequence.validate()?;
    check_diabatic(spinor)?;
    let gap = sequence.delta_gap;
    let (Some(first), Some(last)) = (sequence.start_bias(), sequence.end_bias()) else {
        return ode::evolve(spinor, gap, &[], config);
    };
    let start = if gap > 0.0 {
        ode::from_frame(spinor, frame, first, gap)?
    } else {
        *spinor
    };
    let (out, traj) = ode::evolve(&start, gap, &sequence.drive(), config)?;
    let out = if gap > 0.0 {
        ode::to_frame(&out, frame, last, gap)?
    } else {
        out
    };
    Ok((out, traj))
}

/// Where the intermediate wait sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaitBias {
    /// `ε₀ = multiple · Δ`.
    GapMultiple { multiple: f64 },
    /// `ε₀` equal to the bias where the first sweep ends (no jump).
    SweepEnd,
}

/// Sweep window, velocity and wait placement used by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Sweeps run over `τ ∈ [−τ_a, τ_a]`.
    pub tau_a: f64,
    pub velocity: f64,
    pub wait_bias: WaitBias,
    pub zeta_mode: ZetaMode,
    pub frame: Frame,
    /// Full wait periods added to the shortest wait.
    pub extra_periods: u32,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            tau_a: 20.0,
            velocity: SystemParams::UNIT_TIME_VELOCITY,
            wait_bias: WaitBias::GapMultiple { multiple: 20.0 },
            zeta_mode: ZetaMode::Exact,
            frame: Frame::Eigen,
            extra_periods: 0,
        }
    }
}

impl Geometry {
    fn validate(&self) -> Result<()> {
        if !(self.tau_a.is_finite() && self.tau_a > 0.0) {
            return Err(LzsmError::domain("tau_a", self.tau_a, "tau_a > 0"));
        }
        if !(self.velocity.is_finite() && self.velocity > 0.0) {
            return Err(LzsmError::domain("velocity", self.velocity, "velocity > 0"));
        }
        if let WaitBias::GapMultiple { multiple } = self.wait_bias {
            if !(multiple.is_finite() && multiple != 0.0) {
                return Err(LzsmError::domain("wait multiple", multiple, "non-zero"));
            }
        }
        Ok(())
    }

    fn aim_options(&self) -> AimOptions {
        AimOptions {
            frame: self.frame,
            zeta_mode: self.zeta_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub feasible: bool,
    pub sequence: PulseSequence,
    pub p_initial: f64,
    pub p_target: f64,
    pub delta: f64,
    /// Relative phase to prepare before the first passage.
    pub initial_phase: Option<f64>,
    /// One entry per passage. The second passage's phase is expressed in the
    /// labeling of the return sweep (components exchanged).
    pub passages: Vec<PhaseSolution>,
    /// |a₀|² after each passage.
    pub intermediate_probabilities: Vec<f64>,
    pub t_wait: Option<f64>,
    pub predicted_probability: Option<f64>,
    /// Final probabilities reachable with this geometry at any wait.
    pub reachable: InterferenceWindow,
}

impl PlanResult {
    /// Initial state the plan assumes (frame components).
    pub fn initial_spinor(&self) -> Result<Spinor> {
        Spinor::from_population_phase(self.p_initial, self.initial_phase.unwrap_or(0.0), Basis::Diabatic)
    }
}

/// Steers |a₀|² from `p_initial` to `p_target` with at most two passages.
///
/// A single passage is used when the target lies in its window. Otherwise the
/// first passage lands on the intermediate probability that puts the target
/// deepest inside the window of the return sweep, and the wait sets the phase
/// for that second passage.
pub fn plan_two_passage(p_initial: f64, p_target: f64, delta: f64, geometry: &Geometry) -> Result<PlanResult> {
    for (name, p) in [("p_initial", p_initial), ("p_target", p_target)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(LzsmError::domain(name, p, "0 <= p <= 1"));
        }
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(LzsmError::domain("delta", delta, "delta > 0"));
    }
    geometry.validate()?;

    let params = SystemParams::from_adiabaticity(delta, geometry.velocity)?;
    let gap = params.delta_gap();
    let t_a = params.to_physical(DimensionlessTime(geometry.tau_a));
    let tau_i = -geometry.tau_a;
    let mode = geometry.zeta_mode;
    let options = geometry.aim_options();
    let alpha1 = p_initial.sqrt();
    let forward = DriveSegment::sweep(geometry.velocity, -t_a, t_a);

    let window1 = control::interference_window(alpha1, delta)?;
    if window1.contains(p_target) {
        let target = p_target.clamp(window1.p_min, window1.p_max);
        let mut phase = control::solve_phase_for_target_with_mode(alpha1, delta, tau_i, target, mode)?;
        if (p_initial - p_target).abs() <= FEASIBILITY_SLACK {
            phase.objective = control::Objective::Transitionless;
        }
        let mut sequence = PulseSequence::new(gap);
        sequence.push_annotated(forward, "passage 1");
        let psi = Spinor::from_population_phase(p_initial, phase.phi_i.unwrap_or(0.0), Basis::Diabatic)?;
        let (out, _) = simulate_sequence_aim_with(&psi, &sequence, &options)?;
        return Ok(PlanResult {
            feasible: true,
            sequence,
            p_initial,
            p_target,
            delta,
            initial_phase: phase.phi_i,
            passages: vec![phase],
            intermediate_probabilities: vec![out.p0()],
            t_wait: None,
            predicted_probability: Some(out.p0()),
            reachable: window1,
        });
    }

    // Return-sweep labeling: the monitored component becomes the second one.
    let swapped_target = 1.0 - p_target;
    let margin = |p_mid: f64| -> f64 {
        control::interference_window((1.0 - p_mid).max(0.0).sqrt(), delta)
            .map(|w| w.margin(swapped_target))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (p_mid, best_margin) = maximize(margin, window1.p_min, window1.p_max);
    let reachable = reachable_after_two(window1, delta)?;

    let epsilon0 = match geometry.wait_bias {
        WaitBias::GapMultiple { multiple } => multiple * gap,
        WaitBias::SweepEnd => end_bias(&forward),
    };
    let backward = DriveSegment::sweep(-geometry.velocity, -t_a, t_a);

    if best_margin < -FEASIBILITY_SLACK {
        let mut sequence = PulseSequence::new(gap);
        sequence
            .push_annotated(forward, "passage 1")
            .push_annotated(DriveSegment::wait(epsilon0, 0.0), "phase wait")
            .push_annotated(backward, "passage 2");
        return Ok(PlanResult {
            feasible: false,
            sequence,
            p_initial,
            p_target,
            delta,
            initial_phase: None,
            passages: Vec::new(),
            intermediate_probabilities: Vec::new(),
            t_wait: None,
            predicted_probability: None,
            reachable,
        });
    }

    let phase1 = control::solve_phase_for_target_with_mode(alpha1, delta, tau_i, p_mid, mode)?;
    let phi1 = phase1.phi_i.unwrap_or(0.0);
    let psi0 = Spinor::from_population_phase(p_initial, phi1, Basis::Diabatic)?;

    // State at the start of the wait (includes the jump onto the wait bias).
    let head = PulseSequence::new(gap)
        .with(forward)
        .with(DriveSegment::wait(epsilon0, 0.0));
    let (psi_w, states) = simulate_sequence_aim_with(&psi0, &head, &options)?;
    let p_after_1 = states[0].spinor.p0();

    // Everything after the wait is linear: out = L · D(t) ψ_w with
    // L = Ñ₂ R_out and D(t) = diag(e^{−iφ/2}, e^{iφ/2}), φ = wait phase.
    // P(φ) = |L₀₀x|² + |L₀₁y|² + 2 Re(conj(L₀₀x) L₀₁y e^{iφ}).
    let tail = PulseSequence::new(gap)
        .with(DriveSegment::wait(epsilon0, 0.0))
        .with(backward);
    let probe = |s: &Spinor| -> Result<Spinor> { Ok(simulate_sequence_aim_with(s, &tail, &options)?.0) };
    let e0 = probe(&Spinor::up(Basis::Diabatic))?;
    let e1 = probe(&Spinor::down(Basis::Diabatic))?;
    let u = e0.a0() * psi_w.a0();
    let w = e1.a0() * psi_w.a1();
    let base = u.norm_sqr() + w.norm_sqr();
    let amp = 2.0 * u.norm() * w.norm();
    let offset = (u.conj() * w).arg();
    let energy = gap.hypot(epsilon0);
    let sign = epsilon0.signum();

    let phi_wait = if amp > 0.0 {
        let c = ((p_target - base) / amp).clamp(-1.0, 1.0).acos();
        // φ = ±c − offset, realized by t = positive(−sgn(ε₀) φ) / E; shortest wins.
        [c - offset, -c - offset]
            .into_iter()
            .map(|phi| control::positive(-sign * phi))
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let t_wait = (phi_wait + TAU * f64::from(geometry.extra_periods)) / energy;

    let mut sequence = PulseSequence::new(gap);
    sequence
        .push_annotated(forward, "passage 1")
        .push_annotated(DriveSegment::wait(epsilon0, t_wait), "phase wait")
        .push_annotated(backward, "passage 2");
    let (out, states) = simulate_sequence_aim_with(&psi0, &sequence, &options)?;

    let before_2 = states[1].spinor;
    let alpha2 = before_2.a1().norm().min(1.0);
    let mut phase2 = control::solve_phase_for_target_with_mode(alpha2, delta, tau_i, swapped_target, mode)?;
    if !phase2.feasible {
        // At the window edge the frame jumps can push the required cos θ a hair past 1.
        phase2 = control::solve_phase_for_target_with_mode(
            alpha2,
            delta,
            tau_i,
            swapped_target.clamp(phase2.window.p_min, phase2.window.p_max),
            mode,
        )?;
    }

    Ok(PlanResult {
        feasible: true,
        sequence,
        p_initial,
        p_target,
        delta,
        initial_phase: Some(phi1),
        passages: vec![phase1, phase2],
        intermediate_probabilities: vec![p_after_1, out.p0()],
        t_wait: Some(t_wait),
        predicted_probability: Some(out.p0()),
        reachable,
    })
}

/// One planning request for [`plan_batch`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub p_initial: f64,
    pub p_target: f64,
    pub delta: f64,
}

/// Plans independent requests in parallel; results keep the input order.
pub fn plan_batch(requests: &[PlanRequest], geometry: &Geometry) -> Vec<Result<PlanResult>> {
    requests
        .par_iter()
        .map(|r| plan_two_passage(r.p_initial, r.p_target, r.delta, geometry))
        .collect()
}

/// Range of |a₀|² reachable after a forward and a return passage.
fn reachable_after_two(window1: InterferenceWindow, delta: f64) -> Result<InterferenceWindow> {
    let n = 400;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..=n {
        let p_mid = window1.p_min + (window1.p_max - window1.p_min) * k as f64 / n as f64;
        let w = control::interference_window((1.0 - p_mid).max(0.0).sqrt(), delta)?;
        lo = lo.min(1.0 - w.p_max);
        hi = hi.max(1.0 - w.p_min);
    }
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    Ok(InterferenceWindow {
        p_min: lo,
        p_max: hi,
        width: hi - lo,
    })
}

/// Grid search followed by golden-section refinement on the best bracket.
fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo <= 0.0 {
        return (lo, f(lo));
    }
    let n = 400;
    let step = (hi - lo) / n as f64;
    let (mut best_x, mut best) = (lo, f(lo));
    for k in 1..=n {
        let x = lo + step * k as f64;
        let y = f(x);
        if y > best {
            best = y;
            best_x = x;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = ((best_x - step).max(lo), (best_x + step).min(hi));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let y = f(x);
    if y >= best {
        (x, y)
    } else {
        (best_x, best)
    }
}
