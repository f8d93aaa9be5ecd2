//! Direct integration of `i dψ/dt = −(Δσx + ε(t)σz)ψ / 2` over piecewise drives.
//!
//! The stepper is the three-stage Gauss–Legendre implicit Runge–Kutta method
//! (order 6). For a linear system the stage equations are a small linear
//! solve, and the method conserves `|ψ|²` up to round-off, so the oracle does
//! not need renormalization inside a segment. Step size is controlled by step
//! doubling; a fixed-step mode gives bit-reproducible golden runs.

use std::io::Write;
use std::time::{Duration, Instant};

use log::debug;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aim::{self, ZetaMode};
use crate::error::{LzsmError, Result};
use crate::matrix::TransferMatrix;
use crate::model::{self, Basis, BlochVector, DimensionlessTime, Spinor, SystemParams};

/// One piece of a drive program. Times are physical (ħ = 1).
///
/// A sweep runs on its own clock: `ε(t) = velocity · t` for `t ∈ [t_start, t_end]`,
/// so it crosses ε = 0 at its local `t = 0`. Segments are laid end to end on the
/// global clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveSegment {
    LinearSweep { velocity: f64, t_start: f64, t_end: f64 },
    ConstantWait { epsilon0: f64, duration: f64 },
}

impl DriveSegment {
    pub fn sweep(velocity: f64, t_start: f64, t_end: f64) -> Self {
        DriveSegment::LinearSweep {
            velocity,
            t_start,
            t_end,
        }
    }

    pub fn wait(epsilon0: f64, duration: f64) -> Self {
        DriveSegment::ConstantWait { epsilon0, duration }
    }

    /// Sweep of velocity `v` over the dimensionless window `[τ_i, τ_f]`.
    pub fn sweep_tau(velocity: f64, tau_i: f64, tau_f: f64) -> Self {
        let v = velocity.abs();
        Self::sweep(
            velocity,
            DimensionlessTime(tau_i).to_physical(v),
            DimensionlessTime(tau_f).to_physical(v),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DriveSegment::LinearSweep {
                velocity,
                t_start,
                t_end,
            } => {
                if !(velocity.is_finite() && velocity != 0.0) {
                    return Err(LzsmError::InvalidSegment(format!(
                        "sweep velocity must be finite and non-zero, got {velocity}"
                    )));
                }
                if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
                    return Err(LzsmError::InvalidSegment(format!(
                        "sweep needs t_end > t_start, got [{t_start}, {t_end}]"
                    )));
                }
            }
            DriveSegment::ConstantWait { epsilon0, duration } => {
                if !epsilon0.is_finite() {
                    return Err(LzsmError::InvalidSegment(format!(
                        "wait bias must be finite, got {epsilon0}"
                    )));
                }
                if !(duration.is_finite() && duration >= 0.0) {
                    return Err(LzsmError::InvalidSegment(format!(
                        "wait duration must be >= 0, got {duration}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        match *self {
            DriveSegment::LinearSweep { t_start, t_end, .. } => t_end - t_start,
            DriveSegment::ConstantWait { duration, .. } => duration,
        }
    }

    /// Local clock value at the start of the segment.
    pub fn local_start(&self) -> f64 {
        match *self {
            DriveSegment::LinearSweep { t_start, .. } => t_start,
            DriveSegment::ConstantWait { .. } => 0.0,
        }
    }

    /// Bias at local time `t`.
    pub fn epsilon(&self, t: f64) -> f64 {
        match *self {
            DriveSegment::LinearSweep { velocity, .. } => velocity * t,
            DriveSegment::ConstantWait { epsilon0, .. } => epsilon0,
        }
    }

    /// The segment traversed backwards in time.
    pub fn time_reversed(&self) -> Self {
        match *self {
            DriveSegment::LinearSweep {
                velocity,
                t_start,
                t_end,
            } => DriveSegment::LinearSweep {
                velocity: -velocity,
                t_start: -t_end,
                t_end: -t_start,
            },
            wait @ DriveSegment::ConstantWait { .. } => wait,
        }
    }
}

/// Drive played backwards: reversed order, each segment time-reversed.
pub fn reverse_drive(drive: &[DriveSegment]) -> Vec<DriveSegment> {
    drive.iter().rev().map(DriveSegment::time_reversed).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Stepping {
    Adaptive,
    /// Constant step (the last step of each segment is shortened to land on
    /// its end).
    Fixed { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Record every n-th accepted step; 0 records only segment boundaries.
    pub sample_stride: usize,
    /// Step budget for the whole drive.
    pub max_steps: usize,
    pub stepping: Stepping,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.25,
            sample_stride: 1,
            max_steps: 20_000_000,
            stepping: Stepping::Adaptive,
        }
    }
}

impl IntegratorConfig {
    /// Default tolerances, boundary samples only.
    pub fn endpoints_only() -> Self {
        IntegratorConfig {
            sample_stride: 0,
            ..Self::default()
        }
    }

    pub fn fixed(step: f64) -> Self {
        IntegratorConfig {
            stepping: Stepping::Fixed { step },
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(LzsmError::domain("rtol", self.rtol, "rtol > 0"));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(LzsmError::domain("atol", self.atol, "atol > 0"));
        }
        if self.max_step.is_nan() || self.max_step <= 0.0 {
            return Err(LzsmError::domain("max_step", self.max_step, "max_step > 0"));
        }
        if let Stepping::Fixed { step } = self.stepping {
            if !(step > 0.0 && step.is_finite()) {
                return Err(LzsmError::domain("step", step, "step > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    /// Global physical time.
    pub t: f64,
    /// Global dimensionless time at the trajectory's reference velocity.
    pub tau: f64,
    pub a0: Complex64,
    pub a1: Complex64,
    pub bloch: BlochVector,
    pub epsilon: f64,
    /// Index of the drive segment the sample belongs to.
    pub segment: usize,
}

impl TrajectorySample {
    fn new(t: f64, tau: f64, state: &Spinor, epsilon: f64, segment: usize) -> Self {
        TrajectorySample {
            t,
            tau,
            a0: state.a0(),
            a1: state.a1(),
            bloch: state.bloch(),
            epsilon,
            segment,
        }
    }

    pub fn p0(&self) -> f64 {
        self.a0.norm_sqr()
    }

    pub fn p1(&self) -> f64 {
        self.a1.norm_sqr()
    }
}

/// Norm correction applied at the end of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Renormalization {
    pub segment: usize,
    /// |ψ|² before rescaling.
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Velocity used to convert the global clock to τ.
    pub reference_velocity: f64,
    pub renormalizations: Vec<Renormalization>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    /// Largest |ψ|² − 1 seen at a segment boundary.
    pub fn max_norm_drift(&self) -> f64 {
        self.renormalizations
            .iter()
            .map(|r| (r.norm_sq - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }
}

/// First line of every trajectory CSV.
pub const TRAJECTORY_CSV_HEADER: &str = "# lzsm-trajectory v1";
pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

const CSV_COLUMNS: [&str; 12] = [
    "t", "tau", "re_a0", "im_a0", "re_a1", "im_a1", "p0", "p1", "x", "y", "z", "epsilon",
];

#[derive(Serialize)]
struct TrajectoryDocument<'a> {
    schema_version: u32,
    #[serde(flatten)]
    trajectory: &'a Trajectory,
}

impl Trajectory {
    /// CSV with a version comment line; numbers use shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_with(out, None)
    }

    /// As [`Trajectory::write_csv`], with one extra named column holding a
    /// value per sample.
    pub fn write_csv_with<W: Write>(&self, out: W, extra: Option<(&str, &[f64])>) -> Result<()> {
        if let Some((name, values)) = extra {
            if values.len() != self.samples.len() {
                return Err(LzsmError::InvalidSegment(format!(
                    "column {name} has {} values for {} samples",
                    values.len(),
                    self.samples.len()
                )));
            }
        }
        let mut out = out;
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
        if let Some((name, _)) = extra {
            header.push(name);
        }
        w.write_record(&header)?;
        for (k, s) in self.samples.iter().enumerate() {
            let mut fields = vec![
                s.t, s.tau, s.a0.re, s.a0.im, s.a1.re, s.a1.im, s.p0(), s.p1(), s.bloch.x, s.bloch.y,
                s.bloch.z, s.epsilon,
            ];
            if let Some((_, values)) = extra {
                fields.push(values[k]);
            }
            w.write_record(fields.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let doc = TrajectoryDocument {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            trajectory: self,
        };
        serde_json::to_writer_pretty(out, &doc)?;
        Ok(())
    }
}

type State = [Complex64; 2];

const SQRT15: f64 = 3.872_983_346_207_417;
const GL_C: [f64; 3] = [0.5 - SQRT15 / 10.0, 0.5, 0.5 + SQRT15 / 10.0];
const GL_B: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
const GL_A: [[f64; 3]; 3] = [
    [5.0 / 36.0, 2.0 / 9.0 - SQRT15 / 15.0, 5.0 / 36.0 - SQRT15 / 30.0],
    [5.0 / 36.0 + SQRT15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - SQRT15 / 24.0],
    [5.0 / 36.0 + SQRT15 / 30.0, 2.0 / 9.0 + SQRT15 / 15.0, 5.0 / 36.0],
];

/// Generator `−iH = (i/2)(Δσx + εσz)` as a 2×2 matrix.
fn generator(delta_gap: f64, epsilon: f64) -> [[Complex64; 2]; 2] {
    let i_half = Complex64::new(0.0, 0.5);
    [
        [i_half * epsilon, i_half * delta_gap],
        [i_half * delta_gap, -i_half * epsilon],
    ]
}

/// One Gauss–Legendre step from local time `t` with step `h`.
#[allow(clippy::needless_range_loop)]
fn gauss_step(seg: &DriveSegment, delta_gap: f64, t: f64, h: f64, y: &State) -> State {
    // Stage derivatives k_j = G_j (y + h Σ_l a_jl k_l)  ⇒  (I − h G_j a_jl) k = G_j y.
    let gens: [[[Complex64; 2]; 2]; 3] =
        std::array::from_fn(|j| generator(delta_gap, seg.epsilon(t + GL_C[j] * h)));

    let mut mat = [[Complex64::new(0.0, 0.0); 7]; 6];
    for j in 0..3 {
        let g = &gens[j];
        for r in 0..2 {
            let row = 2 * j + r;
            for l in 0..3 {
                let coeff = h * GL_A[j][l];
                for c in 0..2 {
                    mat[row][2 * l + c] -= g[r][c] * coeff;
                }
            }
            mat[row][row] += 1.0;
            mat[row][6] = g[r][0] * y[0] + g[r][1] * y[1];
        }
    }
    let k = solve6(mat);

    let mut out = *y;
    for j in 0..3 {
        out[0] += k[2 * j] * (h * GL_B[j]);
        out[1] += k[2 * j + 1] * (h * GL_B[j]);
    }
    out
}

/// Gaussian elimination with partial pivoting on an augmented 6×7 system.
#[allow(clippy::needless_range_loop)]
fn solve6(mut m: [[Complex64; 7]; 6]) -> [Complex64; 6] {
    for col in 0..6 {
        let pivot = (col..6)
            .max_by(|&a, &b| m[a][col].norm_sqr().total_cmp(&m[b][col].norm_sqr()))
            .unwrap_or(col);
        m.swap(col, pivot);
        let inv = m[col][col].inv();
        for row in (col + 1)..6 {
            let f = m[row][col] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..7 {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 6];
    for row in (0..6).rev() {
        let mut acc = m[row][6];
        for c in (row + 1)..6 {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    x
}

struct Recorder {
    samples: Vec<TrajectorySample>,
    stride: usize,
    reference_velocity: f64,
    segment: usize,
}

impl Recorder {
    fn push(&mut self, t: f64, state: &Spinor, epsilon: f64) {
        let tau = DimensionlessTime::from_physical(t, self.reference_velocity).tau();
        self.samples
            .push(TrajectorySample::new(t, tau, state, epsilon, self.segment));
    }
}

/// Integrates `spinor` (diabatic basis) through the drive.
pub fn evolve(
    spinor: &Spinor,
    delta_gap: f64,
    drive: &[DriveSegment],
    config: &IntegratorConfig,
) -> Result<(Spinor, Trajectory)> {
    config.validate()?;
    if spinor.basis() != Basis::Diabatic {
        return Err(LzsmError::BasisMismatch {
            expected: Basis::Diabatic,
            found: spinor.basis(),
        });
    }
    if !(delta_gap.is_finite() && delta_gap >= 0.0) {
        return Err(LzsmError::domain("delta_gap", delta_gap, "delta_gap >= 0"));
    }
    for seg in drive {
        seg.validate()?;
    }
    let mut state = Spinor::new(spinor.a0(), spinor.a1(), Basis::Diabatic)?;

    let reference_velocity = drive
        .iter()
        .find_map(|s| match *s {
            DriveSegment::LinearSweep { velocity, .. } => Some(velocity.abs()),
            _ => None,
        })
        .unwrap_or(SystemParams::UNIT_TIME_VELOCITY);

    let mut rec = Recorder {
        samples: Vec::new(),
        stride: config.sample_stride,
        reference_velocity,
        segment: 0,
    };
    let mut global_t = drive.first().map_or(0.0, DriveSegment::local_start);
    let first_eps = drive.first().map_or(0.0, |s| s.epsilon(s.local_start()));
    rec.push(global_t, &state, first_eps);

    let mut renormalizations = Vec::new();
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    for (index, seg) in drive.iter().enumerate() {
        rec.segment = index;
        let t0 = seg.local_start();
        let t1 = t0 + seg.duration();
        let offset = global_t - t0;
        let mut y: State = state.amplitudes();

        if t1 > t0 {
            integrate_segment(
                seg,
                delta_gap,
                t0,
                t1,
                &mut y,
                config,
                offset,
                &mut rec,
                &mut accepted,
                &mut rejected,
            )?;
        }

        let mut next = Spinor::from_raw(y[0], y[1], Basis::Diabatic);
        let n = next.renormalize();
        renormalizations.push(Renormalization {
            segment: index,
            norm_sq: n,
        });
        debug!("segment {index}: |psi|^2 = {n:.17} before renormalization");
        state = next;
        global_t = offset + t1;
        rec.push(global_t, &state, seg.epsilon(t1));
    }

    let traj = Trajectory {
        samples: rec.samples,
        reference_velocity,
        renormalizations,
        accepted_steps: accepted,
        rejected_steps: rejected,
    };
    Ok((state, traj))
}

#[allow(clippy::too_many_arguments)]
fn integrate_segment(
    seg: &DriveSegment,
    delta_gap: f64,
    t0: f64,
    t1: f64,
    y: &mut State,
    config: &IntegratorConfig,
    offset: f64,
    rec: &mut Recorder,
    accepted: &mut usize,
    rejected: &mut usize,
) -> Result<()> {
    let span = t1 - t0;
    let mut t = t0;
    let mut since_sample = 0usize;

    let mut h = match config.stepping {
        Stepping::Fixed { step } => step,
        Stepping::Adaptive => {
            let scale = 0.5 * (delta_gap + seg.epsilon(t0).abs().max(seg.epsilon(t1).abs()));
            (0.05 / scale.max(1e-300)).min(config.max_step)
        }
    }
    .min(span);

    while t < t1 {
        if *accepted + *rejected >= config.max_steps {
            return Err(LzsmError::IntegrationFailure {
                t: offset + t,
                steps: *accepted + *rejected,
                step: h,
                reason: "step budget exhausted",
            });
        }
        let last = t + h >= t1 || (t1 - (t + h)) <= 1e-12 * span;
        let step = if last { t1 - t } else { h };

        match config.stepping {
            Stepping::Fixed { .. } => {
                *y = gauss_step(seg, delta_gap, t, step, y);
            }
            Stepping::Adaptive => {
                let full = gauss_step(seg, delta_gap, t, step, y);
                let mid = gauss_step(seg, delta_gap, t, 0.5 * step, y);
                let halves = gauss_step(seg, delta_gap, t + 0.5 * step, 0.5 * step, &mid);
                // Richardson: error of the two-half-step solution ≈ (y½ − y₁) / (2⁶ − 1).
                let mut err: f64 = 0.0;
                for c in 0..2 {
                    let scale = config.atol + config.rtol * halves[c].norm().max(y[c].norm());
                    err = err.max((halves[c] - full[c]).norm() / 63.0 / scale);
                }
                if !err.is_finite() {
                    return Err(LzsmError::IntegrationFailure {
                        t: offset + t,
                        steps: *accepted + *rejected,
                        step,
                        reason: "non-finite error estimate",
                    });
                }
                let factor = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * err.powf(-1.0 / 7.0)).clamp(0.2, 4.0)
                };
                if err > 1.0 {
                    *rejected += 1;
                    h = step * factor;
                    if h <= 1e-14 * (t.abs() + span) {
                        return Err(LzsmError::IntegrationFailure {
                            t: offset + t,
                            steps: *accepted + *rejected,
                            step: h,
                            reason: "step size underflow",
                        });
                    }
                    continue;
                }
                *y = halves;
                if !last {
                    h = (step * factor).min(config.max_step);
                }
            }
        }

        *accepted += 1;
        t = if last { t1 } else { t + step };
        since_sample += 1;
        if rec.stride > 0 && since_sample >= rec.stride && !last {
            since_sample = 0;
            let s = Spinor::from_raw(y[0], y[1], Basis::Diabatic);
            rec.push(offset + t, &s, seg.epsilon(t));
        }
    }
    Ok(())
}

/// Closed-form propagator of a constant bias over `t_wait`,
/// `cos(ωt) + i sin(ωt)(Δσx + ε₀σz)/E` with `E = √(Δ² + ε₀²)`, `ω = E/2`.
pub fn constant_propagator(epsilon0: f64, delta_gap: f64, t_wait: f64) -> TransferMatrix {
    let energy = delta_gap.hypot(epsilon0);
    if energy == 0.0 || t_wait == 0.0 {
        return TransferMatrix::identity(Basis::Diabatic);
    }
    let (s, c) = (0.5 * energy * t_wait).sin_cos();
    let nx = delta_gap / energy;
    let nz = epsilon0 / energy;
    TransferMatrix::from_raw(
        [
            [Complex64::new(c, s * nz), Complex64::new(0.0, s * nx)],
            [Complex64::new(0.0, s * nx), Complex64::new(c, -s * nz)],
        ],
        Basis::Diabatic,
    )
}

/// Exact evolution under a constant bias (no numerical integration).
pub fn evolve_constant(spinor: &Spinor, epsilon0: f64, delta_gap: f64, t_wait: f64) -> Result<Spinor> {
    if !(t_wait.is_finite() && t_wait >= 0.0) {
        return Err(LzsmError::domain("t_wait", t_wait, "t_wait >= 0"));
    }
    constant_propagator(epsilon0, delta_gap, t_wait).apply(spinor)
}

/// How amplitudes at the ends of a sweep are labeled.
///
/// A finite sweep starts and ends at finite |ε|, where the diabatic states are
/// not yet eigenstates; the mismatch mixes them at order `Δ/(2|ε|)`. The
/// endpoint eigenframe labels each instantaneous eigenstate by the diabatic
/// state it continues (positive dominant component), which is the frame the
/// adiabatic-impulse model assumes outside the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Raw diabatic amplitudes.
    Diabatic,
    /// Instantaneous eigenstates at the endpoint bias.
    #[default]
    Eigen,
}

/// Real rotation whose columns are the instantaneous eigenstates at bias ε,
/// ordered as (|0⟩-like, |1⟩-like) with positive diagonal.
pub fn eigenframe(epsilon: f64, delta_gap: f64) -> Result<TransferMatrix> {
    let (plus, minus) = model::gamma_pm(epsilon, delta_gap)?;
    let (c, s) = (plus.max(minus), plus.min(minus));
    let sign = if epsilon >= 0.0 { 1.0 } else { -1.0 };
    let r = |x: f64| Complex64::new(x, 0.0);
    Ok(TransferMatrix::from_raw(
        [[r(c), r(-sign * s)], [r(sign * s), r(c)]],
        Basis::Diabatic,
    ))
}

/// Diabatic spinor whose components in the eigenframe at ε are `spinor`'s.
pub fn from_frame(spinor: &Spinor, frame: Frame, epsilon: f64, delta_gap: f64) -> Result<Spinor> {
    match frame {
        Frame::Diabatic => Ok(*spinor),
        Frame::Eigen => eigenframe(epsilon, delta_gap)?.apply(spinor),
    }
}

/// Components of a diabatic spinor in the given frame at ε.
pub fn to_frame(spinor: &Spinor, frame: Frame, epsilon: f64, delta_gap: f64) -> Result<Spinor> {
    match frame {
        Frame::Diabatic => Ok(*spinor),
        // The frame is real orthogonal, so its inverse is the transpose (= dagger).
        Frame::Eigen => eigenframe(epsilon, delta_gap)?.dagger().apply(spinor),
    }
}

/// Single sweep over `[τ_i, τ_f]` at velocity 2 (so `t = τ`).
pub fn sweep_drive(tau_i: f64, tau_f: f64) -> Vec<DriveSegment> {
    vec![DriveSegment::sweep(SystemParams::UNIT_TIME_VELOCITY, tau_i, tau_f)]
}

/// One forward sweep over `[τ_i, τ_f]` at adiabaticity δ, with input and
/// output expressed in `frame` at the respective endpoints.
pub fn evolve_sweep(
    spinor: &Spinor,
    delta: f64,
    tau_i: f64,
    tau_f: f64,
    frame: Frame,
    config: &IntegratorConfig,
) -> Result<Spinor> {
    let params = SystemParams::from_adiabaticity(delta, SystemParams::UNIT_TIME_VELOCITY)?;
    let gap = params.delta_gap();
    let v = params.velocity();
    let start = from_frame(spinor, frame, v * tau_i, gap)?;
    let (out, _) = evolve(&start, gap, &sweep_drive(tau_i, tau_f), config)?;
    to_frame(&out, frame, v * tau_f, gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AimOdeReport {
    pub p_aim: f64,
    pub p_ode: f64,
    pub error: f64,
    #[serde(serialize_with = "ser_duration")]
    pub runtime: Duration,
}

fn ser_duration<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// |P_AIM − P_ODE| for one symmetric passage `τ ∈ [−τ_a, τ_a]`, read out in
/// the endpoint eigenframe with the exact-ζ model.
pub fn compare_aim_vs_ode(
    alpha_i: f64,
    phi_i: f64,
    delta: f64,
    tau_a: f64,
    config: &IntegratorConfig,
) -> Result<AimOdeReport> {
    compare_aim_vs_ode_with(alpha_i, phi_i, delta, tau_a, Frame::Eigen, ZetaMode::Exact, config)
}

pub fn compare_aim_vs_ode_with(
    alpha_i: f64,
    phi_i: f64,
    delta: f64,
    tau_a: f64,
    frame: Frame,
    mode: ZetaMode,
    config: &IntegratorConfig,
) -> Result<AimOdeReport> {
    let start = Instant::now();
    let p_aim = aim::final_probability_diabatic_with_mode(alpha_i, phi_i, delta, -tau_a, mode)?;
    let psi = Spinor::from_amplitude_phase(alpha_i, phi_i, Basis::Diabatic)?;
    let out = evolve_sweep(&psi, delta, -tau_a, tau_a, frame, config)?;
    let p_ode = out.p0();
    Ok(AimOdeReport {
        p_aim,
        p_ode,
        error: (p_aim - p_ode).abs(),
        runtime: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn zero_gap_keeps_populations() {
        let psi = Spinor::from_amplitude_phase(0.6, 0.4, Basis::Diabatic).unwrap();
        let drive = vec![DriveSegment::sweep(1.5, -6.0, 6.0)];
        let (out, traj) = evolve(&psi, 0.0, &drive, &IntegratorConfig::default()).unwrap();
        for s in &traj.samples {
            assert_abs_diff_eq!(s.p0(), 0.36, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(out.p0(), 0.36, epsilon = 1e-12);
    }

    #[test]
    fn lz_half_from_up() {
        let d = LN_2 / (2.0 * PI);
        let out = evolve_sweep(&Spinor::up(Basis::Diabatic), d, -20.0, 20.0, Frame::Eigen, &IntegratorConfig::endpoints_only())
            .unwrap();
        assert!((out.p0() - 0.5).abs() < 1e-2, "{}", out.p0());
    }

    #[test]
    fn lz_delta_one() {
        let out = evolve_sweep(&Spinor::up(Basis::Diabatic), 1.0, -20.0, 20.0, Frame::Eigen, &IntegratorConfig::endpoints_only())
            .unwrap();
        assert!((out.p0() - (-2.0 * PI).exp()).abs() < 1e-3, "{}", out.p0());
    }

    #[test]
    fn constant_propagator_examples() {
        let psi = Spinor::from_amplitude_phase(0.3, 1.0, Basis::Diabatic).unwrap();
        assert_eq!(evolve_constant(&psi, 2.0, 1.0, 0.0).unwrap(), psi);
        // ε₀ = 0: full swap when ωt = π/2, i.e. t = π/Δ.
        let delta_gap = 1.3;
        let out = evolve_constant(&Spinor::up(Basis::Diabatic), 0.0, delta_gap, PI / delta_gap).unwrap();
        assert_abs_diff_eq!(out.p1(), 1.0, epsilon = 1e-15);
        assert!(constant_propagator(0.7, 0.2, 3.1).is_unitary(1e-14));
        assert!(evolve_constant(&psi, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn constant_propagator_far_limit() {
        // |ε₀| ≫ Δ: pure phases, rotation direction set by sgn ε₀.
        let (eps, gap, t): (f64, f64, f64) = (400.0, 1.0, 0.37);
        let omega = 0.5 * gap.hypot(eps);
        for sign in [1.0, -1.0] {
            let u = constant_propagator(sign * eps, gap, t);
            let lim = TransferMatrix::phases(sign * omega * t, -sign * omega * t, Basis::Diabatic);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((u.get(r, c) - lim.get(r, c)).norm() <= 2.0 * gap / eps);
                }
            }
        }
    }

    #[test]
    fn invalid_segments() {
        let psi = Spinor::up(Basis::Diabatic);
        let cfg = IntegratorConfig::default();
        assert!(evolve(&psi, 1.0, &[DriveSegment::sweep(1.0, 1.0, -1.0)], &cfg).is_err());
        assert!(evolve(&psi, 1.0, &[DriveSegment::sweep(0.0, -1.0, 1.0)], &cfg).is_err());
        assert!(evolve(&psi, 1.0, &[DriveSegment::wait(1.0, -0.1)], &cfg).is_err());
        assert!(evolve(&Spinor::up(Basis::Adiabatic), 1.0, &[], &cfg).is_err());
        let bad = IntegratorConfig { rtol: 0.0, ..cfg };
        assert!(evolve(&psi, 1.0, &[], &bad).is_err());
    }

    #[test]
    fn empty_drive_echoes_input() {
        let psi = Spinor::from_amplitude_phase(0.8, -1.0, Basis::Diabatic).unwrap();
        let (out, traj) = evolve(&psi, 1.0, &[], &IntegratorConfig::default()).unwrap();
        assert_eq!(out, psi);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn step_budget_reported() {
        let cfg = IntegratorConfig {
            max_steps: 10,
            ..IntegratorConfig::default()
        };
        let err = evolve(&Spinor::up(Basis::Diabatic), 1.0, &sweep_drive(-20.0, 20.0), &cfg).unwrap_err();
        assert!(matches!(err, LzsmError::IntegrationFailure { .. }));
    }

    #[test]
    fn trajectory_time_is_monotone_and_normalized() {
        let drive = vec![
            DriveSegment::sweep(2.0, -5.0, 5.0),
            DriveSegment::wait(10.0, 1.0),
            DriveSegment::sweep(-2.0, -5.0, 5.0),
        ];
        let psi = Spinor::from_amplitude_phase(0.5, 0.2, Basis::Diabatic).unwrap();
        let (_, traj) = evolve(&psi, 0.8, &drive, &IntegratorConfig::default().with_stride(5)).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].t >= w[0].t);
        }
        for s in &traj.samples {
            assert!((s.p0() + s.p1() - 1.0).abs() < 1e-10);
        }
        assert_abs_diff_eq!(traj.samples[0].t, -5.0);
        assert_abs_diff_eq!(traj.last().unwrap().t, 16.0, epsilon = 1e-12);
        assert!(traj.max_norm_drift() < 1e-10);
    }

    #[test]
    fn fixed_step_is_deterministic() {
        let psi = Spinor::from_amplitude_phase(0.6, 0.3, Basis::Diabatic).unwrap();
        let drive = sweep_drive(-8.0, 8.0);
        let cfg = IntegratorConfig::fixed(1e-3);
        let (a, _) = evolve(&psi, 0.5, &drive, &cfg).unwrap();
        let (b, _) = evolve(&psi, 0.5, &drive, &cfg).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn tolerance_halving_converges() {
        let psi = Spinor::from_amplitude_phase(0.6, 0.9, Basis::Diabatic).unwrap();
        for &d in &[0.05, 0.5, 2.0] {
            let cfg = IntegratorConfig::endpoints_only();
            let a = evolve_sweep(&psi, d, -20.0, 20.0, Frame::Diabatic, &cfg).unwrap();
            let half = cfg.with_tolerances(cfg.rtol / 2.0, cfg.atol / 2.0);
            let b = evolve_sweep(&psi, d, -20.0, 20.0, Frame::Diabatic, &half).unwrap();
            assert!((a.p0() - b.p0()).abs() <= 1e-8);
            assert!((a.norm_sqr() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn integrated_wait_matches_closed_form() {
        let psi = Spinor::from_amplitude_phase(0.7, -0.4, Basis::Diabatic).unwrap();
        for &(eps, gap, t) in &[(3.0, 4.0, 1.0), (20.0, 1.0, 7.3), (-15.0, 0.5, 2.2), (0.0, 1.0, 3.0)] {
            let exact = evolve_constant(&psi, eps, gap, t).unwrap();
            let (num, _) =
                evolve(&psi, gap, &[DriveSegment::wait(eps, t)], &IntegratorConfig::endpoints_only()).unwrap();
            assert!((1.0 - exact.fidelity(&num).unwrap()).abs() <= 1e-8);
            assert!((exact.p0() - num.p0()).abs() <= 1e-8);
        }
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let drive = vec![
            DriveSegment::sweep(2.0, -10.0, 10.0),
            DriveSegment::wait(20.0, 0.8),
            DriveSegment::sweep(-2.0, -10.0, 10.0),
        ];
        let psi = Spinor::from_amplitude_phase(0.3, 2.0, Basis::Diabatic).unwrap();
        let cfg = IntegratorConfig::endpoints_only();
        let (fwd, _) = evolve(&psi, 0.7, &drive, &cfg).unwrap();
        let (back, _) = evolve(&fwd.conj(), 0.7, &reverse_drive(&drive), &cfg).unwrap();
        let back = back.conj();
        for c in 0..2 {
            assert!((back.amplitudes()[c] - psi.amplitudes()[c]).norm() <= 1e-8);
        }
    }

    #[test]
    fn eigenframe_is_rotation_near_identity() {
        let f = eigenframe(-40.0, 1.0).unwrap();
        assert!(f.is_unitary(1e-14));
        assert!(f.get(0, 0).re > 0.999 && f.get(1, 1).re > 0.999);
        let psi = Spinor::from_amplitude_phase(0.4, 0.3, Basis::Diabatic).unwrap();
        let there = from_frame(&psi, Frame::Eigen, 7.0, 2.0).unwrap();
        let back = to_frame(&there, Frame::Eigen, 7.0, 2.0).unwrap();
        assert!((back.a0() - psi.a0()).norm() < 1e-15 && (back.a1() - psi.a1()).norm() < 1e-15);
        // The |0⟩-like column is an eigenvector of H = −(Δσx + εσz)/2.
        for eps in [-9.0, 6.0] {
            let f = eigenframe(eps, 2.0).unwrap();
            let (c0, c1) = (f.get(0, 0).re, f.get(1, 0).re);
            let h0 = -0.5 * (eps * c0 + 2.0 * c1);
            let h1 = -0.5 * (2.0 * c0 - eps * c1);
            assert!((h0 * c1 - h1 * c0).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_and_json_export() {
        let psi = Spinor::from_amplitude_phase(0.6, 0.1, Basis::Diabatic).unwrap();
        let cfg = IntegratorConfig::fixed(0.05).with_stride(20);
        let (_, traj) = evolve(&psi, 1.0, &sweep_drive(-6.0, 6.0), &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("t,tau,re_a0"));
        assert_eq!(text.lines().count(), traj.samples.len() + 2);
        let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(last[0], traj.last().unwrap().t);
        assert_eq!(last[6], traj.last().unwrap().p0());

        let mut buf = Vec::new();
        traj.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["samples"].as_array().unwrap().len(), traj.samples.len());
    }

    #[test]
    fn aim_comparison_examples() {
        let d = LN_2 / (2.0 * PI);
        let cfg = IntegratorConfig::endpoints_only();
        let c = crate::control::constructive_phase(0.6, d, -20.0, ZetaMode::Exact).unwrap();
        let r = compare_aim_vs_ode(0.6, c.phi_i.unwrap(), d, 20.0, &cfg).unwrap();
        assert!(r.error <= 1e-2, "{r:?}");
        let r = compare_aim_vs_ode(0.4, 1.0, 3.0, 20.0, &cfg).unwrap();
        assert!(r.error <= 1e-2, "{r:?}");
        let a = compare_aim_vs_ode(1.0, 0.0, 0.4, 20.0, &cfg).unwrap();
        let b = compare_aim_vs_ode(1.0, 2.5, 0.4, 20.0, &cfg).unwrap();
        assert!((a.error - b.error).abs() <= 1e-10);
    }
}
