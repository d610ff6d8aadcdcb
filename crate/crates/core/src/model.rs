//! Chain parameters and the bare one-magnon functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Anisotropy, chain length, sector and twist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub zeta: f64,
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(zeta: f64, m: usize, n: usize, alpha: f64) -> Result<Self> {
        check_zeta(zeta)?;
        if !alpha.is_finite() {
            return Err(Error::NonFinite("alpha"));
        }
        if m == 0 || m % 2 != 0 {
            return Err(Error::InvalidParams(format!("chain length {m} must be even and positive")));
        }
        if n == 0 || 2 * n > m {
            return Err(Error::InvalidParams(format!("down spins {n} outside 1..={}", m / 2)));
        }
        Ok(Self { zeta, m, n, alpha })
    }

    pub fn delta(&self) -> f64 {
        self.zeta.cos()
    }

    pub fn density(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn kappa(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }
}

pub(crate) fn check_zeta(zeta: f64) -> Result<()> {
    if !zeta.is_finite() {
        return Err(Error::NonFinite("zeta"));
    }
    if zeta <= 0.0 || zeta >= PI {
        return Err(Error::InvalidParams(format!("zeta = {zeta} outside (0, pi)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    Derivative,
}

pub fn bare_momentum(lambda: f64, zeta: f64, order: Order) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    check_zeta(zeta)?;
    Ok(match order {
        Order::Value => p0(lambda, zeta),
        Order::Derivative => p0_prime(lambda, zeta),
    })
}

pub fn bare_phase(lambda: f64, zeta: f64, order: Order) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    check_zeta(zeta)?;
    Ok(match order {
        Order::Value => theta(lambda, zeta),
        Order::Derivative => kernel(lambda, zeta),
    })
}

// Unchecked kernels used by the solvers.

#[inline]
pub fn p0(lambda: f64, zeta: f64) -> f64 {
    2.0 * ((0.5 * zeta).cos() * lambda.tanh()).atan2((0.5 * zeta).sin())
}

#[inline]
pub fn p0_prime(lambda: f64, zeta: f64) -> f64 {
    2.0 * zeta.sin() / ((2.0 * lambda).cosh() - zeta.cos())
}

/// Inverse of `p0` on (-(pi - zeta), pi - zeta).
pub fn p0_inverse(p: f64, zeta: f64) -> f64 {
    ((0.5 * p).tan() * (0.5 * zeta).tan()).atanh()
}

#[inline]
pub fn theta(lambda: f64, zeta: f64) -> f64 {
    2.0 * (zeta.cos() * lambda.tanh()).atan2(zeta.sin())
}

#[inline]
pub fn kernel(lambda: f64, zeta: f64) -> f64 {
    2.0 * (2.0 * zeta).sin() / ((2.0 * lambda).cosh() - (2.0 * zeta).cos())
}

#[inline]
pub fn kernel_prime(lambda: f64, zeta: f64) -> f64 {
    let den = (2.0 * lambda).cosh() - (2.0 * zeta).cos();
    -4.0 * (2.0 * zeta).sin() * (2.0 * lambda).sinh() / (den * den)
}

pub fn kernel_second(lambda: f64, zeta: f64) -> f64 {
    let c = (2.0 * lambda).cosh();
    let s = (2.0 * lambda).sinh();
    let den = c - (2.0 * zeta).cos();
    let s2z = (2.0 * zeta).sin();
    -8.0 * s2z * c / (den * den) + 16.0 * s2z * s * s / (den * den * den)
}

pub fn p0_complex(z: C64, zeta: f64) -> C64 {
    2.0 * ((0.5 * zeta).cos() / (0.5 * zeta).sin() * z.tanh()).atan()
}

pub fn p0_prime_complex(z: C64, zeta: f64) -> C64 {
    2.0 * zeta.sin() / ((2.0 * z).cosh() - zeta.cos())
}

pub fn theta_complex(z: C64, zeta: f64) -> C64 {
    2.0 * (zeta.cos() / zeta.sin() * z.tanh()).atan()
}

pub fn kernel_complex(z: C64, zeta: f64) -> C64 {
    2.0 * (2.0 * zeta).sin() / ((2.0 * z).cosh() - (2.0 * zeta).cos())
}

/// `ln sinh z` without overflow for large |Re z|; equal to the principal log mod 2*pi*i.
pub fn ln_sinh(z: C64) -> C64 {
    if z.re > 20.0 {
        z - std::f64::consts::LN_2 + (1.0 - (-2.0 * z).exp()).ln()
    } else if z.re < -20.0 {
        let w = -z;
        w - std::f64::consts::LN_2 + (1.0 - (-2.0 * w).exp()).ln() + I * PI
    } else {
        z.sinh().ln()
    }
}

/// `(M ln sinh(nu - i zeta/2), M ln sinh(nu + i zeta/2))`.
pub fn log_vacuum_eigenvalues(nu: C64, params: &ModelParams) -> Result<(C64, C64)> {
    if !nu.re.is_finite() || !nu.im.is_finite() {
        return Err(Error::NonFinite("nu"));
    }
    let half = C64::new(0.0, 0.5 * params.zeta);
    let m = params.m as f64;
    let a = nu - half;
    let d = nu + half;
    for w in [a, d] {
        if w.sinh().norm() < 1e-13 {
            return Err(Error::SingularArgument(format!("sinh vanishes at nu = {nu}")));
        }
    }
    Ok((m * ln_sinh(a), m * ln_sinh(d)))
}
