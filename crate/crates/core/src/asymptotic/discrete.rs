use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::smooth::SampledShift;
use crate::bethe::{Channel, PrClass};
use crate::error::{Error, Result};
use crate::finite_ff::cauchy_log_det;
use crate::special::{ln_barnes_g_signed, ln_gamma_signed};
use crate::thermo::ThermoGrid;

/// `ln |G(z)|`.
pub fn ln_barnes_g(z: f64) -> Result<f64> {
    Ok(ln_barnes_g_signed(z)?.0)
}

fn ln_abs_gamma(x: f64) -> Result<f64> {
    Ok(ln_gamma_signed(x)?.0)
}

/// `ln |prod Gamma(a_k) / prod Gamma(b_k)|`.
pub fn ln_gamma_ratio(num: &[f64], den: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &a in num {
        s += ln_abs_gamma(a)?;
    }
    for &b in den {
        s -= ln_abs_gamma(b)?;
    }
    Ok(s)
}

fn boundary_integral(f: &SampledShift, sign: f64) -> f64 {
    // int (F(s q) - F(l)) / tanh(q - s l), s = +-1
    let q = f.q;
    let fb = f.at(sign * q);
    f.nodes
        .iter()
        .zip(&f.weights)
        .zip(&f.values)
        .map(|((&x, &w), &v)| w * (fb - v) / (q - sign * x).tanh())
        .sum()
}

/// `C_1[F]`: the antisymmetric double integral plus the two boundary terms.
pub fn c1_functional(f: &SampledShift) -> f64 {
    let n = f.nodes.len();
    let mut s = 0.0;
    for i in 0..n {
        let (x, fx, dx) = (f.nodes[i], f.values[i], f.slopes[i]);
        for j in 0..n {
            let g = if i == j {
                0.5 * (f.function().curvature(x) * fx - dx * dx)
            } else {
                (dx * f.values[j] - fx * f.slopes[j]) / (2.0 * (x - f.nodes[j]).tanh())
            };
            s += f.weights[i] * f.weights[j] * g;
        }
    }
    let (fp, fm) = f.boundary();
    s + fp * boundary_integral(f, 1.0) + fm * boundary_integral(f, -1.0)
}

fn ln_fermi_scale(grid: &ThermoGrid) -> f64 {
    (grid.density(grid.q) * (2.0 * grid.q).sinh()).ln()
}

/// `ln D^{(z)}[F]` or `ln D^{(+)}[F]`.
pub fn ln_d_functional(grid: &ThermoGrid, channel: Channel, f: &SampledShift) -> Result<f64> {
    let (fp, fm) = f.boundary();
    let scale = ln_fermi_scale(grid);
    let mut ln = 2.0 * ln_barnes_g(1.0 - fm)? + 2.0 * ln_barnes_g(1.0 + fp)? + (fm - fp) * (2.0 * PI).ln()
        - (fm * fm + fp * fp) * scale
        + c1_functional(f);
    if channel == Channel::Plus {
        ln += (2.0 * grid.q).sinh().ln() + 2.0 * ln_abs_gamma(1.0 + fp)? - (1.0 + 2.0 * fp) * scale
            + 2.0 * boundary_integral(f, 1.0);
    }
    Ok(ln)
}

pub fn d_functional(grid: &ThermoGrid, channel: Channel, f: &SampledShift) -> Result<f64> {
    Ok(ln_d_functional(grid, channel, f)?.exp())
}

/// `ln R_{n,m}({p}, {h} | F)`.
pub fn ln_r_coefficient(p: &[i64], h: &[i64], f: f64) -> Result<f64> {
    let mut ln = 0.0;
    for set in [p, h] {
        for j in 0..set.len() {
            for k in 0..j {
                let d = (set[j] - set[k]) as f64;
                if d == 0.0 {
                    return Err(Error::InvalidSpec("repeated integer".into()));
                }
                ln += 2.0 * d.abs().ln();
            }
        }
    }
    for &a in p {
        for &b in h {
            ln -= 2.0 * ((a + b - 1) as f64).abs().ln();
        }
    }
    let num: Vec<f64> = p.iter().map(|&a| a as f64 + f).chain(h.iter().map(|&b| b as f64 - f)).collect();
    let den: Vec<f64> = p.iter().chain(h).map(|&a| a as f64).collect();
    Ok(ln + 2.0 * ln_gamma_ratio(&num, &den)?)
}

pub fn r_coefficient(p: &[i64], h: &[i64], f: f64) -> Result<f64> {
    if p.iter().chain(h).any(|&x| x < 1) {
        return Err(Error::InvalidSpec("R coefficient needs positive integers".into()));
    }
    Ok(ln_r_coefficient(p, h, f)?.exp())
}

/// `phi(l, m) = 2 pi sinh(l - m) / (p(l) - p(m))`, with `phi(m, m) = 1 / rho(m)`.
pub fn phi(grid: &ThermoGrid, l: f64, m: f64) -> f64 {
    if (l - m).abs() < 1e-9 {
        return 1.0 / grid.density(m);
    }
    2.0 * PI * (l - m).sinh() / (grid.dressed_momentum(l) - grid.dressed_momentum(m))
}

/// `J[F](omega)`.
pub fn j_functional(grid: &ThermoGrid, f: &SampledShift, omega: f64) -> f64 {
    let q = grid.q;
    let pw = grid.dressed_momentum(omega);
    let log_term = ((grid.dressed_momentum(q) - pw) / (grid.dressed_momentum(-q) - pw)).abs().ln();
    2.0 * f.pv_coth(omega) - 2.0 * f.at(omega) * log_term
}

/// `E_0` for paired hole and particle rapidities and their integers.
pub fn e0_factor(grid: &ThermoGrid, mu_h: &[f64], mu_p: &[f64], h: &[i64], p: &[i64]) -> Result<f64> {
    let n = mu_h.len();
    if mu_p.len() != n || h.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch("E0 needs n holes and n particles".into()));
    }
    let mut ln = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                ln += (((h[j] - h[k]) * (p[j] - p[k])) as f64).abs().ln();
                ln += (phi(grid, mu_h[j], mu_h[k]) * phi(grid, mu_p[j], mu_p[k])).abs().ln();
            }
            let d = (p[j] - h[k]) as f64 * phi(grid, mu_p[j], mu_h[k]);
            ln -= 2.0 * d.abs().ln();
        }
    }
    Ok(ln.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Particle,
    Hole,
}

/// `ln |Gamma(k) / Gamma(k - n)|`, taken as a limit when both are poles.
fn ln_gamma_shift_ratio(k: i64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if k <= 0 {
        ln_gamma_ratio(&[nf + 1.0 - k as f64], &[1.0 - k as f64])
    } else if k as f64 - nf <= 0.0 {
        Err(Error::GammaPole(k as f64 - nf))
    } else {
        ln_gamma_ratio(&[k as f64], &[k as f64 - nf])
    }
}

/// `P_N`, `H_N` (channel z) or their tilde forms with `N + 1` (channel plus) for one rapidity.
pub fn discrete_block(
    grid: &ThermoGrid,
    f: &SampledShift,
    mu: f64,
    k: i64,
    kind: BlockKind,
    n: usize,
    channel: Channel,
) -> Result<f64> {
    let n_eff = match channel {
        Channel::Z => n,
        Channel::Plus => n + 1,
    };
    let nf = n_eff as f64;
    let kf = k as f64;
    let fm = f.at(mu);
    let j = j_functional(grid, f, mu);
    let rho = grid.density(mu);
    let mut ln = match kind {
        BlockKind::Particle => {
            j - rho.ln() + 2.0 * ln_gamma_shift_ratio(k, n_eff)?
                + 2.0 * ln_gamma_ratio(&[kf - nf + fm], &[kf + fm])?
        }
        BlockKind::Hole => {
            let s = (PI * fm).sin();
            2.0 * s.abs().ln() - j - (PI * PI * rho).ln()
                + 2.0 * ln_gamma_ratio(&[kf + fm, nf + 1.0 - kf - fm], &[kf, nf + 1.0 - kf])?
        }
    };
    if channel == Channel::Plus {
        let t = ((nf + 1.0 - kf - fm) * phi(grid, grid.q, mu)).abs().ln();
        ln += match kind {
            BlockKind::Particle => 2.0 * t,
            BlockKind::Hole => -2.0 * t,
        };
    }
    Ok(ln.exp())
}

/// Exponent of the algebraic decay.
pub fn exponent(channel: Channel, n: usize, f_plus: f64, f_minus: f64, critical: bool) -> f64 {
    let lead = if critical { 0.0 } else { 2.0 * n as f64 };
    match channel {
        Channel::Z => lead + f_plus * f_plus + f_minus * f_minus,
        Channel::Plus => lead + (f_plus + 1.0).powi(2) + f_minus * f_minus,
    }
}

/// `ln D` for particles and holes away from `+-q`.
pub fn ln_discrete_away(
    grid: &ThermoGrid,
    channel: Channel,
    f: &SampledShift,
    mu_p: &[f64],
    mu_h: &[f64],
) -> Result<f64> {
    let (cauchy, _) = cauchy_log_det(mu_p, mu_h)?;
    let mut ln = 2.0 * cauchy + ln_d_functional(grid, channel, f)?;
    let q = grid.q;
    for (&p, &h) in mu_p.iter().zip(mu_h) {
        ln += 2.0 * (PI * f.at(h)).sin().abs().ln() - (PI * PI * grid.density(h) * grid.density(p)).ln();
        ln += 2.0 * (f.pv_coth(p) - f.pv_coth(h));
        if channel == Channel::Plus {
            ln += 2.0 * ((p - q).sinh() / (h - q).sinh()).abs().ln();
        }
    }
    Ok(ln)
}

/// `ln D` for a critical state of the given class; `f` is the shift function of the state itself.
pub fn ln_discrete_critical(grid: &ThermoGrid, channel: Channel, f: &SampledShift, class: &PrClass) -> Result<f64> {
    class.validate()?;
    let r = class.r as f64;
    let shifted = SampledShift::new(&f.function().plus_constant(r))?;
    let (fp, fm) = f.boundary();
    let (frp, frm) = (fp + r, fm + r);
    let mut ln = ln_d_functional(grid, channel, &shifted)?;
    let lead = match channel {
        Channel::Z => 1.0,
        Channel::Plus => 2.0,
    };
    ln += 2.0 * (ln_barnes_g(lead + fp)? + ln_barnes_g(1.0 - fm)? - ln_barnes_g(lead + frp)? - ln_barnes_g(1.0 - frm)?);
    let hp = class.h_plus.len() as f64;
    let hm = class.h_minus.len() as f64;
    if hp > 0.0 {
        ln += 2.0 * hp * ((PI * frp).sin().abs() / PI).ln();
    }
    if hm > 0.0 {
        ln += 2.0 * hm * ((PI * frm).sin().abs() / PI).ln();
    }
    ln += ln_r_coefficient(&class.p_plus, &class.h_plus, fp + lead - 1.0)?;
    ln += ln_r_coefficient(&class.p_minus, &class.h_minus, -fm)?;
    Ok(ln)
}
