//! Gamma and Barnes G on the real line, carried as `(ln|f|, sign)`.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Derivative of the Riemann zeta function at -1.
const ZETA_PRIME_MINUS_ONE: f64 = -0.165_421_143_700_450_929_2;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `(ln|Gamma(x)|, sign Gamma(x))`.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::NonFinite("gamma argument"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::GammaPole(x));
    }
    if x >= 0.5 {
        return Ok((ln_gamma(x), 1.0));
    }
    // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    let s = (PI * x).sin();
    let (lg, _) = ln_gamma_signed(1.0 - x)?;
    Ok((PI.ln() - s.abs().ln() - lg, s.signum()))
}

pub fn gamma(x: f64) -> Result<f64> {
    let (l, s) = ln_gamma_signed(x)?;
    Ok(s * l.exp())
}

/// `(ln|G(z)|, sign G(z))` for real `z`.
pub fn ln_barnes_g_signed(z: f64) -> Result<(f64, f64)> {
    if !z.is_finite() {
        return Err(Error::NonFinite("Barnes G argument"));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::PoleAtNonpositiveInteger(z));
    }
    // G(z) = G(z + n) / prod_{k<n} Gamma(z + k)
    let shift = if z < 20.0 { (20.0 - z).ceil() as usize } else { 0 };
    let w = z + shift as f64;
    let mut ln = ln_barnes_asymptotic(w);
    let mut sign = 1.0;
    for k in 0..shift {
        let (lg, s) = ln_gamma_signed(z + k as f64)?;
        ln -= lg;
        sign *= s;
    }
    Ok((ln, sign))
}

pub fn barnes_g(z: f64) -> Result<f64> {
    let (l, s) = ln_barnes_g_signed(z)?;
    Ok(s * l.exp())
}

/// Large-argument expansion of `ln G(1 + x)`, `x = w - 1 >= 19`.
fn ln_barnes_asymptotic(w: f64) -> f64 {
    let x = w - 1.0;
    let lx = x.ln();
    // B_{2k+2} / (4 k (k+1)) for k = 1..6
    const C: [f64; 6] = [
        -1.0 / 240.0,
        1.0 / 1008.0,
        -1.0 / 1440.0,
        1.0 / 1056.0,
        -691.0 / 327_600.0,
        1.0 / 144.0,
    ];
    let inv2 = 1.0 / (x * x);
    let mut p = inv2;
    let mut tail = 0.0;
    for c in C {
        tail += c * p;
        p *= inv2;
    }
    0.5 * x * x * lx - 0.75 * x * x + 0.5 * x * (2.0 * PI).ln() - lx / 12.0 + ZETA_PRIME_MINUS_ONE + tail
}
