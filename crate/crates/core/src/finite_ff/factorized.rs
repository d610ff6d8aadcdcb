use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::fredholm::{finite_fermi_point, fredholm_determinant, ContourConfig};
use super::slavnov::{log_det_omega, log_det_with_spread};
use super::{check_distinct, check_pair, ln_det_theta, ProductChannel};
use crate::bethe::{finite_shift_function, BetheState, Channel};
use crate::error::{Error, Result};
use crate::model::{Order, C64, I};

/// Smooth (`C`, `A`) and discrete (`D`) factors of a scalar product, in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizedParts {
    pub channel: ProductChannel,
    pub alpha: f64,
    pub ln_c: f64,
    pub ln_d: f64,
    /// `ln |A|`; at zero twist in the zz channel the vanishing `sin^2(pi alpha)` is left out.
    pub ln_a: f64,
    pub a_phase: f64,
    /// `|S_N|`, or `lim S_N / alpha^2` for the zz channel at zero twist.
    #[serde(rename = "S_N")]
    pub s_n: f64,
    /// Point where the ground counting function reaches `N + 1`; plus channel only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_next: Option<f64>,
    pub pivot_spread: f64,
}

/// `ln |sinh(x + i y)|` for real `x`.
fn ln_abs_sinh_shift(x: f64, y: f64) -> f64 {
    // |sinh(x + iy)|^2 = sinh^2 x + sin^2 y
    let s = x.abs();
    if s > 20.0 {
        s - std::f64::consts::LN_2 + 0.5 * (1.0 + 4.0 * y.sin().powi(2) * (-2.0 * s).exp()).ln()
    } else {
        0.5 * (s.sinh().powi(2) + y.sin().powi(2)).ln()
    }
}

fn ln_abs_sinh(x: f64) -> f64 {
    ln_abs_sinh_shift(x, 0.0)
}

/// `(ln |det|, sign)` of `[1 / sinh(x_j - y_k)]` from the closed Cauchy form.
pub fn cauchy_log_det(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} vs {} points", n, y.len())));
    }
    let mut ln = 0.0;
    let mut neg = 0usize;
    for j in 0..n {
        for k in j + 1..n {
            ln += ln_abs_sinh(x[j] - x[k]) + ln_abs_sinh(y[k] - y[j]);
            neg += usize::from(x[j] < x[k]) + usize::from(y[k] < y[j]);
        }
    }
    for &a in x {
        for &b in y {
            if a == b {
                return Err(Error::CoincidingRoots(0, 0));
            }
            ln -= ln_abs_sinh(a - b);
            neg += usize::from(a < b);
        }
    }
    Ok((ln, if neg % 2 == 0 { 1.0 } else { -1.0 }))
}

fn ln_c_z(lam: &[f64], mu: &[f64], zeta: f64) -> f64 {
    let mut s = 0.0;
    for &l in lam {
        for &x in mu {
            s += 2.0 * ln_abs_sinh_shift(l - x, zeta);
        }
    }
    for set in [lam, mu] {
        for &a in set {
            for &b in set {
                s -= ln_abs_sinh_shift(a - b, zeta);
            }
        }
    }
    s
}

fn ln_d_z(ground: &BetheState, excited: &BetheState, lam: &[f64]) -> Result<f64> {
    let mf = ground.params.m as f64;
    let mu = &excited.roots;
    let (cauchy, _) = cauchy_log_det(mu, lam)?;
    let mut s = 2.0 * cauchy;
    for (&l, &x) in lam.iter().zip(mu) {
        let f = finite_shift_function(ground, excited, l);
        let rg = ground.counting_function(l, Order::Derivative);
        let rk = excited.counting_function(x, Order::Derivative);
        s += 2.0 * (PI * f).sin().abs().ln() - (PI * PI * mf * mf * rg * rk).ln();
    }
    Ok(s)
}

/// Splits `S_N` into `A_N D_N e^{C_N}`.
///
/// In the zz channel at zero twist the returned `s_n` is `lim S_N / alpha^2`.
pub fn factorized_product(ground: &BetheState, excited: &BetheState, config: &ContourConfig) -> Result<FactorizedParts> {
    check_pair(ground, excited)?;
    check_distinct(&excited.roots)?;
    let p = &ground.params;
    let z = p.zeta;
    let alpha = excited.alpha();
    let lam = &ground.roots;
    let mu = &excited.roots;
    let (det, spread) = fredholm_determinant(ground, excited, config, finite_fermi_point(ground))?;
    let theta = ln_det_theta(ground)? + ln_det_theta(excited)?;
    match excited.channel {
        Channel::Z => {
            let q = finite_fermi_point(ground);
            let ln_c = ln_c_z(lam, mu, z);
            let ln_d = ln_d_z(ground, excited, lam)?;
            let mut ln_a = 2.0 * det.log_mag - theta;
            ln_a -= 2.0 * (PI * finite_shift_function(ground, excited, -q)).sin().abs().ln();
            for (&l, &x) in lam.iter().zip(mu) {
                ln_a += 2.0 * (ln_abs_sinh_shift(q + l, -z) - ln_abs_sinh_shift(q + x, -z));
            }
            let (ln_a, scale) = if alpha == 0.0 {
                (ln_a, PI * PI)
            } else {
                (ln_a + 2.0 * (PI * alpha).sin().abs().ln(), 1.0)
            };
            Ok(FactorizedParts {
                channel: ProductChannel::Zz,
                alpha,
                ln_c,
                ln_d,
                ln_a,
                a_phase: 0.0,
                s_n: scale * (ln_a + ln_d + ln_c).exp(),
                lambda_next: None,
                pivot_spread: spread,
            })
        }
        Channel::Plus => {
            let n = lam.len();
            let next = ground.counting_root(n as i64 + 1)?;
            if let Some(k) = mu.iter().position(|&x| (x - next).abs() < 1e-10) {
                return Err(Error::RootCollision(format!("mu_{} = {next}", k + 1)));
            }
            let mut lam_ext = lam.clone();
            lam_ext.push(next);
            let mf = p.m as f64;
            let mut ln_c = ln_c_z(&lam_ext, mu, z);
            for (&l, &x) in lam_ext.iter().zip(mu) {
                ln_c += 2.0 * (ln_abs_sinh_shift(l - next, -z) - ln_abs_sinh_shift(x - next, -z));
            }
            let mut ln_d = ln_d_z(ground, excited, &lam_ext)?;
            ln_d += (mf * PI * PI * ground.counting_function(next, Order::Derivative)).ln();
            ln_d -= 2.0 * (PI * finite_shift_function(ground, excited, next)).sin().abs().ln();
            for &x in mu {
                ln_d += 2.0 * ln_abs_sinh(next - x);
            }
            for &l in lam {
                ln_d -= 2.0 * ln_abs_sinh(next - l);
            }
            let mut ln_a = (z.sin() / (2.0 * PI)).ln() + 2.0 * det.log_mag - theta;
            for &l in lam {
                ln_a += 2.0 * ln_abs_sinh_shift(l, -0.5 * z);
            }
            for &x in mu {
                ln_a -= 2.0 * ln_abs_sinh_shift(x, -0.5 * z);
            }
            Ok(FactorizedParts {
                channel: ProductChannel::Pm,
                alpha,
                ln_c,
                ln_d,
                ln_a,
                a_phase: crate::linalg::wrap_phase(-2.0 * PI * alpha),
                s_n: (ln_a + ln_d + ln_c).exp(),
                lambda_next: Some(next),
                pivot_spread: spread,
            })
        }
    }
}

/// `d^2/d alpha^2 S_N^z` at zero twist from the factorized form.
pub fn factorized_second_derivative(ground: &BetheState, excited: &BetheState, config: &ContourConfig) -> Result<f64> {
    if excited.channel != Channel::Z || excited.alpha() != 0.0 {
        return Err(Error::InvalidParams("needs an untwisted zz excited state".into()));
    }
    Ok(2.0 * factorized_product(ground, excited, config)?.s_n)
}

/// `det Omega` directly and through the reduced `N x N` form, for `N + 1` generic points `z` and `nu`.
pub fn omega_factorization_check(z: &[C64], nu: &[C64], kappa: C64, zeta: f64, m: usize) -> Result<(C64, C64)> {
    let n1 = z.len();
    if nu.len() != n1 || n1 < 2 {
        return Err(Error::DimensionMismatch("need two sets of N + 1 >= 2 points".into()));
    }
    let n = n1 - 1;
    let direct = log_det_omega(z, nu, kappa, zeta, m)?.to_complex();
    let iz = I * zeta;
    let mf = m as f64;
    let a = |v: C64| (v - 0.5 * iz).sinh().powf(mf);
    let d = |v: C64| (v + 0.5 * iz).sinh().powf(mf);
    let big_y = |v: C64, y: &[C64]| {
        a(v) * y.iter().map(|&t| (t - v - iz).sinh()).product::<C64>()
            + kappa * d(v) * y.iter().map(|&t| (t - v + iz).sinh()).product::<C64>()
    };
    let d_big_y = |v: C64, y: &[C64], k: usize| {
        let coth = |x: C64| x.cosh() / x.sinh();
        a(v) * coth(y[k] - v - iz) * y.iter().map(|&t| (t - v - iz).sinh()).product::<C64>()
            + kappa * d(v) * coth(y[k] - v + iz) * y.iter().map(|&t| (t - v + iz).sinh()).product::<C64>()
    };
    let mut s = nalgebra::DMatrix::<C64>::zeros(n1, n1);
    for j in 0..n1 {
        for k in 0..n {
            let num: C64 = z.iter().map(|&t| (nu[k] - t).sinh()).product();
            let den: C64 = (0..n1).filter(|&b| b != k).map(|b| (nu[k] - nu[b]).sinh()).product();
            let dj = if j == k { big_y(nu[j], z) } else { C64::new(0.0, 0.0) };
            s[(j, k)] = dj + num / den * d_big_y(nu[j], nu, k);
        }
        s[(j, n)] = big_y(nu[j], nu);
    }
    let cauchy = nalgebra::DMatrix::<C64>::from_fn(n1, n1, |j, k| 1.0 / (z[k] - nu[j]).sinh());
    let snn = s[(n, n)];
    let reduced = nalgebra::DMatrix::<C64>::from_fn(n, n, |j, k| s[(j, k)] - s[(j, n)] * s[(n, k)] / snn);
    let (lc, _) = log_det_with_spread(cauchy)?;
    let (lr, _) = log_det_with_spread(reduced)?;
    let factorized = snn * (lc * lr).to_complex();
    Ok((direct, factorized))
}
