//! Qubit state, drive parameters and the elementary LZSM quantities.
//!
//! Units: ħ = 1 everywhere. The Hamiltonian in the diabatic basis is
//! `H(t) = −(Δ σx + ε(t) σz) / 2`, the linear sweep is `ε(t) = v t`, and the
//! dimensionless time is `τ = √(v/2) t`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LzsmError, Result};
use crate::gamma;

/// Basis in which the two amplitudes of a [`Spinor`] are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Eigenbasis of σz: |0⟩, |1⟩.
    Diabatic,
    /// Instantaneous energy eigenbasis: excited state first, ground state second.
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spinor {
    a0: Complex64,
    a1: Complex64,
    basis: Basis,
}

impl Spinor {
    /// Tolerance on `|a0|² + |a1|² − 1` accepted at construction.
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(a0: Complex64, a1: Complex64, basis: Basis) -> Result<Self> {
        let s = Spinor { a0, a1, basis };
        let n = s.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(LzsmError::NotNormalized { norm_sq: n });
        }
        Ok(s)
    }

    /// Builds a spinor from arbitrary non-zero amplitudes, rescaling to unit norm.
    pub fn normalized(a0: Complex64, a1: Complex64, basis: Basis) -> Result<Self> {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(LzsmError::NotNormalized { norm_sq: n * n });
        }
        Ok(Spinor {
            a0: a0 / n,
            a1: a1 / n,
            basis,
        })
    }

    /// `α |0⟩ + √(1 − α²) e^{iφ} |1⟩` with real `α ∈ [0, 1]`.
    pub fn from_amplitude_phase(alpha: f64, phi: f64, basis: Basis) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(LzsmError::domain("alpha", alpha, "0 <= alpha <= 1"));
        }
        let beta = (1.0 - alpha * alpha).sqrt();
        Ok(Spinor {
            a0: Complex64::new(alpha, 0.0),
            a1: Complex64::from_polar(beta, phi),
            basis,
        })
    }

    /// Same as [`Spinor::from_amplitude_phase`] but parameterized by the
    /// occupation `P0 = α²`.
    pub fn from_population_phase(p0: f64, phi: f64, basis: Basis) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(LzsmError::domain("p0", p0, "0 <= p0 <= 1"));
        }
        Self::from_amplitude_phase(p0.sqrt(), phi, basis)
    }

    /// The first basis state, (1, 0).
    pub fn up(basis: Basis) -> Self {
        Spinor {
            a0: Complex64::new(1.0, 0.0),
            a1: Complex64::new(0.0, 0.0),
            basis,
        }
    }

    /// The second basis state, (0, 1).
    pub fn down(basis: Basis) -> Self {
        Spinor {
            a0: Complex64::new(0.0, 0.0),
            a1: Complex64::new(1.0, 0.0),
            basis,
        }
    }

    /// No normalization check; callers guarantee unitarity of whatever produced
    /// the amplitudes.
    pub(crate) fn from_raw(a0: Complex64, a1: Complex64, basis: Basis) -> Self {
        Spinor { a0, a1, basis }
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.a0, self.a1]
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// Occupation of the first basis state.
    pub fn p0(&self) -> f64 {
        self.a0.norm_sqr()
    }

    /// Occupation of the second basis state.
    pub fn p1(&self) -> f64 {
        self.a1.norm_sqr()
    }

    /// `arg a1 − arg a0`, reduced to (−π, π]. Zero if either amplitude vanishes.
    pub fn relative_phase(&self) -> f64 {
        if self.a0.norm_sqr() == 0.0 || self.a1.norm_sqr() == 0.0 {
            return 0.0;
        }
        (self.a1 * self.a0.conj()).arg()
    }

    /// The gauge-invariant pair (|a0|, arg a1 − arg a0).
    pub fn amplitude_phase(&self) -> (f64, f64) {
        (self.a0.norm(), self.relative_phase())
    }

    /// Rescales to unit norm and returns the norm-squared before rescaling.
    pub fn renormalize(&mut self) -> f64 {
        let n = self.norm_sqr();
        let s = n.sqrt();
        self.a0 /= s;
        self.a1 /= s;
        n
    }

    /// Complex conjugate of both amplitudes (time-reversal partner).
    pub fn conj(&self) -> Self {
        Spinor {
            a0: self.a0.conj(),
            a1: self.a1.conj(),
            basis: self.basis,
        }
    }

    /// `⟨self|other⟩`; both spinors must share a basis.
    pub fn inner(&self, other: &Spinor) -> Result<Complex64> {
        if self.basis != other.basis {
            return Err(LzsmError::BasisMismatch {
                expected: self.basis,
                found: other.basis,
            });
        }
        Ok(self.a0.conj() * other.a0 + self.a1.conj() * other.a1)
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &Spinor) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn bloch(&self) -> BlochVector {
        bloch(self)
    }
}

/// Gap Δ and sweep velocity v of the linear drive `ε(t) = v t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    delta_gap: f64,
    velocity: f64,
}

impl SystemParams {
    pub fn new(delta_gap: f64, velocity: f64) -> Result<Self> {
        if !(velocity.is_finite() && velocity > 0.0) {
            return Err(LzsmError::domain("velocity", velocity, "velocity > 0"));
        }
        if !(delta_gap.is_finite() && delta_gap >= 0.0) {
            return Err(LzsmError::domain("delta_gap", delta_gap, "delta_gap >= 0"));
        }
        Ok(SystemParams {
            delta_gap,
            velocity,
        })
    }

    /// Parameters with the requested adiabaticity at the given velocity,
    /// `Δ = √(4 v δ)`.
    pub fn from_adiabaticity(delta: f64, velocity: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(LzsmError::domain("delta", delta, "delta >= 0"));
        }
        Self::new((4.0 * velocity * delta).sqrt(), velocity)
    }

    /// Velocity for which physical and dimensionless time coincide (`v = 2`).
    pub const UNIT_TIME_VELOCITY: f64 = 2.0;

    pub fn delta_gap(&self) -> f64 {
        self.delta_gap
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// δ = Δ² / (4v).
    pub fn adiabaticity(&self) -> f64 {
        self.delta_gap * self.delta_gap / (4.0 * self.velocity)
    }

    pub fn to_physical(&self, tau: DimensionlessTime) -> f64 {
        tau.to_physical(self.velocity)
    }

    pub fn to_dimensionless(&self, t: f64) -> DimensionlessTime {
        DimensionlessTime::from_physical(t, self.velocity)
    }
}

/// Dimensionless time `τ = √(v/2) t`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DimensionlessTime(pub f64);

impl DimensionlessTime {
    pub fn tau(self) -> f64 {
        self.0
    }

    /// `t = τ √(2/v)`.
    pub fn to_physical(self, velocity: f64) -> f64 {
        self.0 * (2.0 / velocity).sqrt()
    }

    pub fn from_physical(t: f64, velocity: f64) -> Self {
        DimensionlessTime(t * (velocity / 2.0).sqrt())
    }
}

/// Point on (or, for mixed states, inside) the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Expectation values of (σx, σy, σz).
pub fn bloch(spinor: &Spinor) -> BlochVector {
    let c = spinor.a0.conj() * spinor.a1;
    BlochVector {
        x: 2.0 * c.re,
        y: 2.0 * c.im,
        z: spinor.a0.norm_sqr() - spinor.a1.norm_sqr(),
    }
}

/// δ = Δ² / (4v).
pub fn adiabaticity(delta_gap: f64, velocity: f64) -> Result<f64> {
    Ok(SystemParams::new(delta_gap, velocity)?.adiabaticity())
}

/// Single-passage LZSM probability 𝒫 = exp(−2πδ).
pub fn lz_probability(delta: f64) -> Result<f64> {
    check_adiabaticity(delta)?;
    Ok((-2.0 * PI * delta).exp())
}

/// `Arg Γ(1 − iδ)` on the continuous branch.
pub fn arg_gamma_one_minus_i_delta(delta: f64) -> Result<f64> {
    gamma::arg_gamma_one_minus_i_delta(delta)
}

/// Stokes phase φ_S = π/4 + Arg Γ(1 − iδ) + δ(ln δ − 1); `δ ln δ` is taken as
/// zero at δ = 0.
pub fn stokes_phase(delta: f64) -> Result<f64> {
    check_adiabaticity(delta)?;
    if delta == 0.0 {
        return Ok(FRAC_PI_4);
    }
    Ok(FRAC_PI_4 + gamma::arg_gamma_one_minus_i_delta(delta)? + delta * (delta.ln() - 1.0))
}

pub(crate) fn check_adiabaticity(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(LzsmError::domain("delta", delta, "delta >= 0"))
    }
}

/// Mixing coefficients γ± with γ±² = (1 ± ε/√(Δ² + ε²)) / 2.
pub fn gamma_pm(epsilon: f64, delta_gap: f64) -> Result<(f64, f64)> {
    let energy = delta_gap.hypot(epsilon);
    if energy == 0.0 {
        return Err(LzsmError::DegeneratePoint);
    }
    // Evaluate the small coefficient without the 1 − ε/E cancellation.
    let big = (energy + epsilon.abs()) / (2.0 * energy);
    let small = delta_gap * delta_gap / (2.0 * energy * (energy + epsilon.abs()));
    let (plus_sq, minus_sq) = if epsilon >= 0.0 {
        (big, small)
    } else {
        (small, big)
    };
    Ok((plus_sq.sqrt(), minus_sq.sqrt()))
}

/// Orthogonal matrix taking diabatic amplitudes to adiabatic ones,
/// `M = [[γ−, −γ+], [γ+, γ−]]`.
pub fn basis_matrix(epsilon: f64, delta_gap: f64) -> Result<[[f64; 2]; 2]> {
    let (gp, gm) = gamma_pm(epsilon, delta_gap)?;
    Ok([[gm, -gp], [gp, gm]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisDirection {
    DiabaticToAdiabatic,
    AdiabaticToDiabatic,
}

impl BasisDirection {
    pub fn source(self) -> Basis {
        match self {
            BasisDirection::DiabaticToAdiabatic => Basis::Diabatic,
            BasisDirection::AdiabaticToDiabatic => Basis::Adiabatic,
        }
    }

    pub fn target(self) -> Basis {
        match self {
            BasisDirection::DiabaticToAdiabatic => Basis::Adiabatic,
            BasisDirection::AdiabaticToDiabatic => Basis::Diabatic,
        }
    }
}

/// Re-expresses `spinor` in the other basis at bias `epsilon`.
pub fn basis_transform(
    spinor: &Spinor,
    epsilon: f64,
    delta_gap: f64,
    direction: BasisDirection,
) -> Result<Spinor> {
    if spinor.basis != direction.source() {
        return Err(LzsmError::BasisMismatch {
            expected: direction.source(),
            found: spinor.basis,
        });
    }
    let m = basis_matrix(epsilon, delta_gap)?;
    let (a0, a1) = (spinor.a0, spinor.a1);
    let (b0, b1) = match direction {
        BasisDirection::DiabaticToAdiabatic => {
            (a0 * m[0][0] + a1 * m[0][1], a0 * m[1][0] + a1 * m[1][1])
        }
        BasisDirection::AdiabaticToDiabatic => {
            (a0 * m[0][0] + a1 * m[1][0], a0 * m[0][1] + a1 * m[1][1])
        }
    };
    Ok(Spinor::from_raw(b0, b1, direction.target()))
}
