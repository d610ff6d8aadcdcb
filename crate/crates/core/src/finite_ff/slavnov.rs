use nalgebra::DMatrix;

use super::{check_distinct, ln_a, ln_d, real};
use crate::bethe::{BetheState, Channel};
use crate::error::{Error, Result};
use crate::linalg::LogComplex;
use crate::model::{ln_sinh, C64, I};

fn t_fn(mu: C64, nu: C64, zeta: f64) -> C64 {
    -I * zeta.sin() / ((mu - nu).sinh() * (mu - nu - I * zeta).sinh())
}

/// `ln det` of the scalar-product matrix with each row `j` divided by `a(nu_j) prod_a sinh(mu_a - nu_j - i zeta)`.
///
/// Returns the log-determinant, the sum of the removed row logs and the pivot spread.
pub(crate) fn reduced_omega(mu: &[C64], nu: &[C64], kappa: C64, zeta: f64, m: usize) -> Result<(LogComplex, C64, f64)> {
    let n = mu.len();
    if nu.len() != n {
        return Err(Error::DimensionMismatch(format!("{} vs {} parameters", n, nu.len())));
    }
    let iz = I * zeta;
    let mut rows = C64::new(0.0, 0.0);
    let mut mat = DMatrix::<C64>::zeros(n, n);
    for (j, &v) in nu.iter().enumerate() {
        let minus: C64 = mu.iter().map(|&x| ln_sinh(x - v - iz)).sum();
        let plus: C64 = mu.iter().map(|&x| ln_sinh(x - v + iz)).sum();
        let la = ln_a(v, zeta, m);
        rows += la + minus;
        // d vanishes at nu = -i zeta / 2
        let d_zero = (v + 0.5 * iz).norm() < 1e-14;
        let ratio = if d_zero || kappa == C64::new(0.0, 0.0) {
            C64::new(0.0, 0.0)
        } else {
            kappa * (ln_d(v, zeta, m) - la + plus - minus).exp()
        };
        for (k, &x) in mu.iter().enumerate() {
            mat[(j, k)] = t_fn(x, v, zeta) - ratio * t_fn(v, x, zeta);
        }
    }
    let (det, spread) = log_det_with_spread(mat)?;
    Ok((det, rows, spread))
}

pub(crate) fn log_det_with_spread(m: DMatrix<C64>) -> Result<(LogComplex, f64)> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericallySingular);
    }
    if m.nrows() == 0 {
        return Ok((LogComplex::ONE, 0.0));
    }
    let lu = m.lu();
    let mut acc = LogComplex::from_complex(lu.p().determinant());
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        lo = lo.min(d.norm());
        hi = hi.max(d.norm());
        acc = acc * LogComplex::from_complex(d);
    }
    if lo == 0.0 {
        return Err(Error::NumericallySingular);
    }
    Ok((acc, (hi / lo).log10()))
}

/// `<psi_kappa(mu)|psi(nu)>` for on-shell `mu` at twist `kappa` and arbitrary `nu`.
pub fn slavnov_log(mu: &[C64], nu: &[C64], kappa: C64, zeta: f64, m: usize) -> Result<LogComplex> {
    Ok(slavnov_full(mu, nu, kappa, zeta, m)?.0)
}

fn slavnov_full(mu: &[C64], nu: &[C64], kappa: C64, zeta: f64, m: usize) -> Result<(LogComplex, f64)> {
    let (det, rows, spread) = reduced_omega(mu, nu, kappa, zeta, m)?;
    let n = mu.len();
    let mut ln: C64 = mu.iter().map(|&x| ln_d(x, zeta, m)).sum::<C64>() + rows;
    for a in 0..n {
        for b in 0..a {
            ln -= ln_sinh(mu[a] - mu[b]) + ln_sinh(nu[b] - nu[a]);
        }
    }
    Ok((LogComplex::from_ln(ln) * det, spread))
}

/// Second argument set of the scalar product for a channel: ground roots, plus `-i zeta / 2` for the plus channel.
pub(crate) fn ground_parameters(ground: &BetheState, channel: Channel) -> Vec<C64> {
    let mut nu = real(&ground.roots);
    if channel == Channel::Plus {
        nu.push(C64::new(0.0, -0.5 * ground.params.zeta));
    }
    nu
}

pub(crate) fn slavnov_with_pivots(excited: &BetheState, ground: &BetheState) -> Result<(LogComplex, f64)> {
    check_distinct(&excited.roots)?;
    check_distinct(&ground.roots)?;
    let nu = ground_parameters(ground, excited.channel);
    if nu.len() != excited.n_kappa() {
        return Err(Error::DimensionMismatch(format!(
            "{} excited roots against {} ground parameters",
            excited.n_kappa(),
            nu.len()
        )));
    }
    let p = &excited.params;
    slavnov_full(&real(&excited.roots), &nu, p.kappa(), p.zeta, p.m)
}

/// `<psi_kappa|psi_g>` (z channel) or `<psi_kappa|B(-i zeta/2)|psi_g>` (plus channel).
pub fn slavnov_scalar_product(excited: &BetheState, ground: &BetheState, channel: Channel) -> Result<LogComplex> {
    if excited.channel != channel {
        return Err(Error::DimensionMismatch("excited state belongs to the other channel".into()));
    }
    Ok(slavnov_with_pivots(excited, ground)?.0)
}

/// `ln det Omega` without any row rescaling, for moderate `M`.
pub fn log_det_omega(z: &[C64], nu: &[C64], kappa: C64, zeta: f64, m: usize) -> Result<LogComplex> {
    let (det, rows, _) = reduced_omega(z, nu, kappa, zeta, m)?;
    Ok(det * LogComplex::from_ln(rows))
}
