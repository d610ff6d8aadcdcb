//! Exact finite-chain scalar products, norms and form-factor products.

mod factorized;
mod fredholm;
mod slavnov;

pub use factorized::{
    cauchy_log_det, factorized_product, factorized_second_derivative, omega_factorization_check,
    FactorizedParts,
};
pub use fredholm::{finite_contour, fredholm_scalar_product, ContourConfig};
pub use slavnov::{log_det_omega, slavnov_log, slavnov_scalar_product};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bethe::{solve_complex_twist, BetheState, Channel};
use crate::error::{Error, Result};
use crate::linalg::{log_det_real, LogComplex};
use crate::model::{kernel, ln_sinh, p0, Order, C64, I};

/// `M ln sinh(nu - i zeta / 2)`.
pub(crate) fn ln_a(nu: C64, zeta: f64, m: usize) -> C64 {
    m as f64 * ln_sinh(nu - I * (0.5 * zeta))
}

/// `M ln sinh(nu + i zeta / 2)`.
pub(crate) fn ln_d(nu: C64, zeta: f64, m: usize) -> C64 {
    m as f64 * ln_sinh(nu + I * (0.5 * zeta))
}

pub(crate) fn real(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// Root sets must be pairwise separated for the determinant formulas.
pub(crate) fn check_distinct(roots: &[f64]) -> Result<()> {
    for a in 0..roots.len() {
        for b in a + 1..roots.len() {
            if (roots[a] - roots[b]).abs() < 1e-10 {
                return Err(Error::CoincidingRoots(a, b));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_pair(ground: &BetheState, excited: &BetheState) -> Result<()> {
    let gp = &ground.params;
    let ep = &excited.params;
    if gp.m != ep.m || gp.n != ep.n || gp.zeta != ep.zeta {
        return Err(Error::DimensionMismatch("ground and excited states of different chains".into()));
    }
    if ground.n_kappa() != gp.n || ground.alpha() != 0.0 {
        return Err(Error::InvalidParams("ground state must be the untwisted N-sector state".into()));
    }
    if excited.n_kappa() != excited.channel.n_kappa(gp.n) {
        return Err(Error::DimensionMismatch("excited root count does not match its channel".into()));
    }
    Ok(())
}

/// The signed value of `<psi|psi>` from the Gaudin-type formula, `(-1)^{N_kappa}` times a positive number.
pub fn norm_raw(state: &BetheState) -> Result<LogComplex> {
    check_distinct(&state.roots)?;
    let p = &state.params;
    let (z, m) = (p.zeta, p.m);
    let mf = m as f64;
    let mu = &state.roots;
    let n = mu.len();
    let rho: Vec<f64> = mu.iter().map(|&x| state.counting_function(x, Order::Derivative)).collect();
    let mut ln = if n % 2 == 1 { I * PI } else { C64::new(0.0, 0.0) };
    for (j, &x) in mu.iter().enumerate() {
        let xc = C64::new(x, 0.0);
        ln += (2.0 * PI * mf * rho[j]).ln() + I * (0.5 * PI) + ln_a(xc, z, m) + ln_d(xc, z, m);
    }
    for a in 0..n {
        for b in 0..n {
            ln += ln_sinh(C64::new(mu[a] - mu[b], -z));
            if a != b {
                ln -= ln_sinh(C64::new(mu[a] - mu[b], 0.0));
            }
        }
    }
    let theta = nalgebra::DMatrix::from_fn(n, n, |j, k| {
        let d = if j == k { 1.0 } else { 0.0 };
        d + kernel(mu[j] - mu[k], z) / (2.0 * PI * mf * rho[k])
    });
    let (ld, sign) = log_det_real(theta)?;
    ln += ld;
    if sign < 0.0 {
        ln += I * PI;
    }
    Ok(LogComplex::from_ln(ln))
}

/// `||psi||^2`, positive.
pub fn norm_squared(state: &BetheState) -> Result<LogComplex> {
    let raw = norm_raw(state)?;
    Ok(LogComplex::new(raw.log_mag, 0.0))
}

/// `ln det Theta` for a solved state.
pub(crate) fn ln_det_theta(state: &BetheState) -> Result<f64> {
    let z = state.params.zeta;
    let mf = state.params.m as f64;
    let mu = &state.roots;
    let n = mu.len();
    let rho: Vec<f64> = mu.iter().map(|&x| state.counting_function(x, Order::Derivative)).collect();
    let theta = nalgebra::DMatrix::from_fn(n, n, |j, k| {
        let d = if j == k { 1.0 } else { 0.0 };
        d + kernel(mu[j] - mu[k], z) / (2.0 * PI * mf * rho[k])
    });
    let (ld, sign) = log_det_real(theta)?;
    if sign < 0.0 {
        return Err(Error::NumericallySingular);
    }
    Ok(ld)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductChannel {
    Zz,
    Pm,
}

impl ProductChannel {
    pub fn state_channel(self) -> Channel {
        match self {
            ProductChannel::Zz => Channel::Z,
            ProductChannel::Pm => Channel::Plus,
        }
    }

    pub fn from_state_channel(c: Channel) -> Self {
        match c {
            Channel::Z => ProductChannel::Zz,
            Channel::Plus => ProductChannel::Pm,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `log10(max |u_ii| / min |u_ii|)` over the LU pivots of the scalar-product matrix.
    pub pivot_spread: f64,
    pub excited_residual: f64,
    /// Spread of the twist-derivative estimate between the contour and Richardson routes, if computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteProductResult {
    pub channel: ProductChannel,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<crate::bethe::ExcitationSpec>,
    /// `S_N` magnitude.
    #[serde(rename = "S_N")]
    pub s_n: f64,
    /// Phase of `S_N`; zero for the zz channel, `-2 pi alpha` for pm.
    pub phase: f64,
    #[serde(rename = "P_ex_hat")]
    pub p_ex_hat: f64,
    pub diagnostics: Diagnostics,
}

/// `sum p0(mu) - sum p0(lambda)`.
pub fn excitation_momentum_hat(ground: &BetheState, excited: &BetheState) -> f64 {
    let z = ground.params.zeta;
    excited.roots.iter().map(|&x| p0(x, z)).sum::<f64>() - ground.roots.iter().map(|&x| p0(x, z)).sum::<f64>()
}

/// The same momentum from the integers: `2 pi (alpha N_kappa + sum (l_j - j)) / M`.
pub fn excitation_momentum_from_integers(ground: &BetheState, excited: &BetheState) -> f64 {
    let nk = excited.n_kappa() as i64;
    let shift: i64 = excited.ells.iter().sum::<i64>() - nk * (nk + 1) / 2;
    2.0 * PI * (excited.alpha() * nk as f64 + shift as f64) / ground.params.m as f64
}

/// `S_N` at the excited state's own twist.
pub fn finite_product(ground: &BetheState, excited: &BetheState) -> Result<FiniteProductResult> {
    check_pair(ground, excited)?;
    let channel = ProductChannel::from_state_channel(excited.channel);
    let (sp, spread) = slavnov::slavnov_with_pivots(excited, ground)?;
    let ng = norm_squared(ground)?;
    let ne = norm_squared(excited)?;
    let (log_s, phase) = match channel {
        ProductChannel::Zz => (sp.norm_sqr_ln() - ng.log_mag - ne.log_mag, 0.0),
        ProductChannel::Pm => {
            let p = &ground.params;
            let la = ln_a(C64::new(0.0, -0.5 * p.zeta), p.zeta, p.m);
            (sp.norm_sqr_ln() - 2.0 * la.re - ng.log_mag - ne.log_mag, -2.0 * PI * excited.alpha())
        }
    };
    Ok(FiniteProductResult {
        channel,
        m: ground.params.m,
        n: ground.params.n,
        alpha: excited.alpha(),
        spec: excited.spec.clone(),
        s_n: log_s.exp(),
        phase: crate::linalg::wrap_phase(phase),
        p_ex_hat: excitation_momentum_hat(ground, excited),
        diagnostics: Diagnostics { pivot_spread: spread, excited_residual: excited.residual, derivative_spread: None },
    })
}

/// Radius and node count of the circle in the twist plane used for the derivative.
const TWIST_RADIUS: f64 = 0.05;
const TWIST_NODES: usize = 16;

/// `d/d alpha <psi_kappa|psi>` at `alpha = 0`, from the Cauchy integral over a circle in the twist plane.
///
/// The overlap is real on the real axis, so only the upper half of the circle is solved.
pub fn overlap_twist_derivative(ground: &BetheState, excited: &BetheState) -> Result<LogComplex> {
    check_pair(ground, excited)?;
    if excited.alpha() != 0.0 || excited.channel != Channel::Z {
        return Err(Error::InvalidParams("twist derivative needs an untwisted zz excited state".into()));
    }
    let p = &ground.params;
    let nu = real(&ground.roots);
    let mut samples: Vec<(C64, LogComplex)> = Vec::with_capacity(TWIST_NODES);
    for k in 0..=TWIST_NODES / 2 {
        let alpha = C64::from_polar(TWIST_RADIUS, 2.0 * PI * k as f64 / TWIST_NODES as f64);
        let mu = solve_complex_twist(excited, alpha)?;
        let kappa = (2.0 * PI * I * alpha).exp();
        let s = slavnov_log(&mu, &nu, kappa, p.zeta, p.m)?;
        samples.push((alpha, s));
        if k != 0 && k != TWIST_NODES / 2 {
            samples.push((alpha.conj(), s.conj()));
        }
    }
    let scale = samples.iter().map(|(_, s)| s.log_mag).fold(f64::NEG_INFINITY, f64::max);
    let sum: C64 = samples
        .iter()
        .map(|(a, s)| LogComplex::new(s.log_mag - scale, s.phase).to_complex() / a)
        .sum::<C64>()
        / TWIST_NODES as f64;
    let mut d = LogComplex::from_complex(sum);
    d.log_mag += scale;
    Ok(d)
}

/// `d^2/d alpha^2 S_N^z` at `alpha = 0` for an untwisted excited state.
pub fn zz_second_derivative(ground: &BetheState, excited: &BetheState) -> Result<f64> {
    let d = overlap_twist_derivative(ground, excited)?;
    let ng = norm_squared(ground)?;
    let ne = norm_squared(excited)?;
    Ok(2.0 * (d.norm_sqr_ln() - ng.log_mag - ne.log_mag).exp())
}

/// The same second derivative from `S(alpha)/alpha^2` at `±a0, ±a0/2, ±a0/4`, extrapolated to zero.
pub fn zz_second_derivative_richardson(ground: &BetheState, excited: &BetheState, a0: f64) -> Result<f64> {
    check_pair(ground, excited)?;
    let spec = excited.spec.as_ref().ok_or_else(|| Error::InvalidSpec("excited state without spec".into()))?;
    let mut even = [0.0; 3];
    for (k, h) in [a0, a0 / 2.0, a0 / 4.0].into_iter().enumerate() {
        let mut acc = 0.0;
        for s in [h, -h] {
            let st = crate::bethe::solve_bethe_state(&excited.params.with_alpha(s), Some(spec))?;
            acc += finite_product(ground, &st)?.s_n / (s * s);
        }
        even[k] = 0.5 * acc;
    }
    // even part is c0 + c2 h^2 + c4 h^4
    let r1 = [(4.0 * even[1] - even[0]) / 3.0, (4.0 * even[2] - even[1]) / 3.0];
    let lim = (16.0 * r1[1] - r1[0]) / 15.0;
    Ok(2.0 * lim)
}

/// Product of two form factors at sites `m` and `m_prime`, at zero twist.
pub fn ff_product_with_distance(ground: &BetheState, excited: &BetheState, m: i64, m_prime: i64) -> Result<C64> {
    check_pair(ground, excited)?;
    if excited.alpha() != 0.0 {
        return Err(Error::InvalidParams("form-factor products are taken at zero twist".into()));
    }
    let p_hat = excitation_momentum_hat(ground, excited);
    let dm = (m - m_prime) as f64;
    let phase = C64::from_polar(1.0, dm * p_hat);
    match excited.channel {
        Channel::Z => {
            let s2 = zz_second_derivative(ground, excited)?;
            Ok(phase * (2.0 * (0.5 * p_hat).sin().powi(2) / (PI * PI)) * s2)
        }
        Channel::Plus => {
            let s = finite_product(ground, excited)?.s_n;
            let sign = if (m - m_prime).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Ok(phase * sign * s)
        }
    }
}
