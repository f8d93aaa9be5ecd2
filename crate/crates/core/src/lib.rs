//! Simulation and phase control of a linearly driven qubit.
//!
//! * [`model`]: spinors, drive parameters, δ, 𝒫 and the Stokes phase.
//! * [`aim`]: adiabatic-impulse transfer matrices and closed-form final probabilities.
//! * [`ode`]: direct integration of the Schrödinger equation, used as the reference.
//! * [`control`]: initial-phase and δ solvers for interference objectives.
//! * [`sequence`]: multi-passage pulse programs and two-passage planning.

pub mod aim;
pub mod control;
pub mod error;
pub mod gamma;
pub mod matrix;
pub mod model;
pub mod ode;
pub mod sequence;

pub use error::{LzsmError, Result};
pub use matrix::TransferMatrix;
pub use model::{Basis, BlochVector, Spinor, SystemParams};
