use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{LzsmError, Result};
use crate::model::{Basis, Spinor};

/// 2×2 complex propagator acting on spinors of one basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    m: [[Complex64; 2]; 2],
    basis: Basis,
}

impl TransferMatrix {
    /// Tolerance on max |M†M − I| used by [`TransferMatrix::new`].
    pub const UNITARY_TOLERANCE: f64 = 1e-12;

    /// Checked constructor: rejects non-unitary entries.
    pub fn new(m: [[Complex64; 2]; 2], basis: Basis) -> Result<Self> {
        let t = TransferMatrix { m, basis };
        let dev = t.unitarity_deviation();
        if dev.is_nan() || dev > Self::UNITARY_TOLERANCE {
            return Err(LzsmError::NotUnitary { deviation: dev });
        }
        Ok(t)
    }

    pub(crate) fn from_raw(m: [[Complex64; 2]; 2], basis: Basis) -> Self {
        TransferMatrix { m, basis }
    }

    pub fn identity(basis: Basis) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TransferMatrix {
            m: [[one, zero], [zero, one]],
            basis,
        }
    }

    /// `diag(e^{iθ0}, e^{iθ1})`.
    pub fn phases(theta0: f64, theta1: f64, basis: Basis) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        TransferMatrix {
            m: [
                [Complex64::from_polar(1.0, theta0), zero],
                [zero, Complex64::from_polar(1.0, theta1)],
            ],
            basis,
        }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dagger(&self) -> Self {
        let m = self.m;
        TransferMatrix {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
            basis: self.basis,
        }
    }

    /// `σx M σx`: the same propagator with the roles of the two basis states
    /// exchanged.
    pub fn swapped(&self) -> Self {
        let m = self.m;
        TransferMatrix {
            m: [[m[1][1], m[1][0]], [m[0][1], m[0][0]]],
            basis: self.basis,
        }
    }

    /// max |(M†M − I)_{jk}|.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.dagger().mul_raw(self);
        let mut dev: f64 = 0.0;
        for (r, row) in p.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let target = if r == c { 1.0 } else { 0.0 };
                let d = (v - target).norm();
                if d.is_nan() {
                    return f64::INFINITY;
                }
                dev = dev.max(d);
            }
        }
        dev
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Matrix product `self · rhs`; both must share a basis.
    pub fn compose(&self, rhs: &TransferMatrix) -> Result<TransferMatrix> {
        if self.basis != rhs.basis {
            return Err(LzsmError::BasisMismatch {
                expected: self.basis,
                found: rhs.basis,
            });
        }
        Ok(TransferMatrix {
            m: self.mul_raw(rhs),
            basis: self.basis,
        })
    }

    fn mul_raw(&self, rhs: &TransferMatrix) -> [[Complex64; 2]; 2] {
        let a = &self.m;
        let b = &rhs.m;
        [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ]
    }

    /// Matrix–vector product; fails on a basis mismatch.
    pub fn apply(&self, spinor: &Spinor) -> Result<Spinor> {
        if self.basis != spinor.basis() {
            return Err(LzsmError::BasisMismatch {
                expected: self.basis,
                found: spinor.basis(),
            });
        }
        let [a0, a1] = spinor.amplitudes();
        Ok(Spinor::from_raw(
            self.m[0][0] * a0 + self.m[0][1] * a1,
            self.m[1][0] * a0 + self.m[1][1] * a1,
            self.basis,
        ))
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    /// Panics on a basis mismatch; use [`TransferMatrix::compose`] for the
    /// fallible form.
    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        self.compose(&rhs).expect("basis mismatch in matrix product")
    }
}
