//! Complex log-gamma and the argument of Γ(1 − iδ).
//!
//! Two independent evaluations of `Arg Γ(1 − iδ)` are provided: one through the
//! complex log-gamma (Stirling series after upward recurrence), one through the
//! elementary series `Arg Γ(1 + iδ) = −γδ + Σ_k (δ/k − arctan(δ/k))`. The
//! argument is always the continuous branch, i.e. `Im ln Γ`, which is zero at
//! δ = 0 and is not wrapped into (−π, π].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{LzsmError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// B_{2k} / (2k (2k − 1)) for k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Real part below which the argument is shifted upward before the Stirling sum.
const STIRLING_MIN_RE: f64 = 12.0;

/// Principal-continuous log-gamma, `ln Γ(z)`.
///
/// For `Re z >= 1/2` the imaginary part is the branch that is continuous along
/// horizontal lines and vanishes on the positive real axis. Left of that line
/// the reflection formula is used and the imaginary part is only defined up to
/// a multiple of 2π.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z) Γ(1 − z) = π / sin(πz)
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }

    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < STIRLING_MIN_RE {
        shift += w.ln();
        w += 1.0;
    }

    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }

    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// `Arg Γ(1 − iδ)` through the complex log-gamma.
pub fn arg_gamma_one_minus_i_delta(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(ln_gamma(Complex64::new(1.0, -delta)).im)
}

/// `Arg Γ(1 − iδ)` through the elementary series with an integral tail.
pub fn arg_gamma_one_minus_i_delta_series(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }

    let terms = 2000 + (20.0 * delta).ceil() as usize;
    let mut sum = 0.0;
    // Smallest terms first.
    for k in (1..=terms).rev() {
        sum += x_minus_atan(delta / k as f64);
    }

    // Σ_{k > K} f(k) ≈ ∫_{K+1/2}^∞ f, with F(k) = δ ln k − k atan(δ/k) − (δ/2) ln(k² + δ²)
    // and F(∞) = −δ.
    let a = terms as f64 + 0.5;
    let r = delta / a;
    let tail = -delta + a * r.atan() + 0.5 * delta * (r * r).ln_1p();

    let arg_plus = -EULER_GAMMA * delta + sum + tail;
    Ok(-arg_plus)
}

fn x_minus_atan(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x * x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 * (1.0 / 7.0 - x2 / 9.0)))
    } else {
        x - x.atan()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(LzsmError::domain("delta", delta, "delta >= 0"))
    }
}
