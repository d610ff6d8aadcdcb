//! Log-scaled complex numbers and determinants.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Div, Mul};

use crate::error::{Error, Result};
use crate::model::C64;

/// `exp(log_mag + i*phase)` with the phase kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub log_mag: f64,
    pub phase: f64,
}

pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

impl LogComplex {
    pub const ONE: LogComplex = LogComplex { log_mag: 0.0, phase: 0.0 };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        Self { log_mag, phase: wrap_phase(phase) }
    }

    /// From a complex logarithm (any branch).
    pub fn from_ln(z: C64) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn from_complex(z: C64) -> Self {
        if z == C64::new(0.0, 0.0) {
            return Self { log_mag: f64::NEG_INFINITY, phase: 0.0 };
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn to_complex(self) -> C64 {
        C64::from_polar(self.log_mag.exp(), self.phase)
    }

    pub fn ln(self) -> C64 {
        C64::new(self.log_mag, self.phase)
    }

    pub fn conj(self) -> Self {
        Self::new(self.log_mag, -self.phase)
    }

    pub fn inv(self) -> Self {
        Self::new(-self.log_mag, -self.phase)
    }

    pub fn powi(self, k: i32) -> Self {
        Self::new(k as f64 * self.log_mag, k as f64 * self.phase)
    }

    pub fn norm_sqr_ln(self) -> f64 {
        2.0 * self.log_mag
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl Div for LogComplex {
    type Output = LogComplex;
    fn div(self, rhs: Self) -> Self {
        Self::new(self.log_mag - rhs.log_mag, self.phase - rhs.phase)
    }
}

impl std::iter::Product for LogComplex {
    fn product<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(LogComplex::ONE, |a, b| a * b)
    }
}

/// Determinant by LU with partial pivoting, accumulated pivot by pivot in log space.
pub fn log_det(m: DMatrix<C64>) -> Result<LogComplex> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(LogComplex::ONE);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericallySingular);
    }
    let lu = m.lu();
    let sign: C64 = lu.p().determinant();
    let mut acc = LogComplex::from_complex(sign);
    let u = lu.u();
    for i in 0..u.nrows() {
        acc = acc * LogComplex::from_complex(u[(i, i)]);
    }
    Ok(acc)
}

/// Real determinant by LU, returned as `(ln|det|, sign)`.
pub fn log_det_real(m: DMatrix<f64>) -> Result<(f64, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix", m.nrows(), m.ncols())));
    }
    let lu = m.lu();
    let mut sign: f64 = lu.p().determinant();
    let mut ln = 0.0;
    let u = lu.u();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d < 0.0 {
            sign = -sign;
        }
        ln += d.abs().ln();
    }
    Ok((ln, sign))
}
