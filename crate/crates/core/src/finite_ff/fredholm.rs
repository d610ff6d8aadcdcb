use serde::{Deserialize, Serialize};
use nalgebra::DMatrix;
use std::f64::consts::PI;

use super::slavnov::log_det_with_spread;
use super::{check_distinct, check_pair, ln_a, ln_d};
use crate::bethe::{finite_shift_function, BetheState, Channel};
use crate::error::{Error, Result};
use crate::linalg::LogComplex;
use crate::model::{ln_sinh, Order, C64, I};
use crate::quadrature::Contour;

/// Geometry of the closed contour around the ground-state roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourConfig {
    /// Half-height as a fraction of `min(zeta, pi - zeta)`.
    pub height_fraction: f64,
    /// Distance of the vertical sides beyond the outermost root, in units of the local root spacing.
    pub edge_spacings: f64,
    pub nodes_per_panel: usize,
    pub circle_nodes: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { height_fraction: 0.4, edge_spacings: 3.0, nodes_per_panel: 16, circle_nodes: 32 }
    }
}

/// `ln e^{2 pi i F(w)}` from the product over both root sets.
pub(crate) fn ln_shift_exp(mu: &[f64], lam: &[f64], alpha: f64, zeta: f64, w: C64) -> C64 {
    let iz = I * zeta;
    let mut s = 2.0 * PI * I * alpha;
    for &x in mu {
        s += ln_sinh(x - w + iz) - ln_sinh(x - w - iz);
    }
    for &x in lam {
        s += ln_sinh(x - w - iz) - ln_sinh(x - w + iz);
    }
    s
}

/// The extra point entering the z-channel kernel: half a spacing beyond the last ground root.
pub(crate) fn finite_fermi_point(ground: &BetheState) -> f64 {
    let last = *ground.roots.last().unwrap_or(&0.0);
    let rho = ground.counting_function(last, Order::Derivative);
    last + 0.5 / (ground.params.m as f64 * rho)
}

fn distance_to_integer(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Points of the real segment `[-x, x]` where the shift function is an integer.
fn integer_crossings(ground: &BetheState, excited: &BetheState, x: f64, step: f64) -> Vec<f64> {
    let f = |t: f64| finite_shift_function(ground, excited, t);
    let mut out = Vec::new();
    let n = ((2.0 * x) / step).ceil() as usize;
    let mut a = -x;
    let mut fa = f(a);
    for k in 1..=n {
        let b = -x + 2.0 * x * k as f64 / n as f64;
        let fb = f(b);
        let (lo_i, hi_i) = (fa.min(fb).ceil(), fa.max(fb).floor());
        let mut level = lo_i;
        while level <= hi_i {
            let (mut l, mut r) = (a, b);
            let sgn = (fa - level).signum();
            if (fa - level) == 0.0 {
                out.push(a);
                level += 1.0;
                continue;
            }
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if (f(m) - level).signum() == sgn {
                    l = m;
                } else {
                    r = m;
                }
                if r - l < 1e-15 * (1.0 + m.abs()) {
                    break;
                }
            }
            out.push(0.5 * (l + r));
            level += 1.0;
        }
        a = b;
        fa = fb;
    }
    out.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
    out
}

/// Rectangle around the ground roots, with clockwise circles cutting out the real points inside where the
/// kernel denominator `1 - e^{2 pi i F}` vanishes.
pub fn finite_contour(ground: &BetheState, excited: &BetheState, config: &ContourConfig) -> Result<Contour> {
    let p = &ground.params;
    let z = p.zeta;
    let mf = p.m as f64;
    let first = *ground.roots.first().ok_or_else(|| Error::InvalidParams("empty ground state".into()))?;
    let last = *ground.roots.last().unwrap();
    let spacing = 1.0 / (mf * ground.counting_function(last, Order::Derivative));
    let mut x = first.abs().max(last.abs()) + config.edge_spacings * spacing;
    let f = |t: f64| finite_shift_function(ground, excited, t);
    for _ in 0..16 {
        if distance_to_integer(f(x)) > 0.05 && distance_to_integer(f(-x)) > 0.05 {
            break;
        }
        x += 0.5 * spacing;
    }
    let eta = config.height_fraction * z.min(PI - z);
    let mut contour = Contour::rectangle(x, eta, 0.25 * config.edge_spacings * spacing, config.nodes_per_panel)?;
    let crossings = integer_crossings(ground, excited, x, 0.25 * spacing);
    for (i, &c) in crossings.iter().enumerate() {
        let mut gap = (x - c.abs()).min(eta);
        for &l in &ground.roots {
            gap = gap.min((l - c).abs());
        }
        for (j, &o) in crossings.iter().enumerate() {
            if j != i {
                gap = gap.min(0.5 * (o - c).abs());
            }
        }
        if gap < 1e-9 {
            return Err(Error::ContourSingularity(format!("kernel pole at {c} coincides with a root")));
        }
        contour.append(Contour::clockwise_circle(C64::new(c, 0.0), 0.3 * gap, config.circle_nodes));
    }
    Ok(contour)
}

/// `det[I + U / (2 pi i)]` on the contour for either channel.
pub(crate) fn fredholm_determinant(
    ground: &BetheState,
    excited: &BetheState,
    config: &ContourConfig,
    q: f64,
) -> Result<(LogComplex, f64)> {
    let p = &ground.params;
    let z = p.zeta;
    let iz = I * z;
    let alpha = excited.alpha();
    let kappa = C64::from_polar(1.0, 2.0 * PI * alpha);
    let mu = &excited.roots;
    let lam = &ground.roots;
    let contour = finite_contour(ground, excited, config)?;
    let n = contour.len();
    let mut pref = Vec::with_capacity(n);
    for &w in &contour.points {
        let e = ln_shift_exp(mu, lam, alpha, z, w).exp();
        let den = C64::new(1.0, 0.0) - e;
        if den.norm() < 1e-8 {
            return Err(Error::ContourSingularity(format!("1 - exp(2 pi i F) vanishes at {w}")));
        }
        let mut ln = C64::new(0.0, 0.0);
        for &x in mu {
            ln += ln_sinh(w - x) - ln_sinh(w - x + iz);
        }
        for &x in lam {
            ln += ln_sinh(w - x + iz) - ln_sinh(w - x);
        }
        let sign = if excited.channel == Channel::Z { -1.0 } else { 1.0 };
        pref.push(sign * ln.exp() / den);
    }
    let coth = |x: C64| x.cosh() / x.sinh();
    let k_kappa = |x: C64| coth(x + iz) - kappa * coth(x - iz);
    let half = 0.5 * iz;
    let mat = DMatrix::<C64>::from_fn(n, n, |i, j| {
        let (w, v) = (contour.points[i], contour.points[j]);
        let kern = match excited.channel {
            Channel::Z => k_kappa(w - v) - k_kappa(-q - v),
            Channel::Plus => {
                (v + 3.0 * half).sinh() / ((v - half).sinh() * (w - v - iz).sinh())
                    - kappa * (v - 3.0 * half).sinh() / ((v + half).sinh() * (w - v + iz).sinh())
            }
        };
        let d = if i == j { 1.0 } else { 0.0 };
        d + pref[i] * kern * contour.weights[j] / (2.0 * PI * I)
    });
    log_det_with_spread(mat)
}

/// The Fredholm-determinant form of the scalar product, comparable with [`super::slavnov_scalar_product`].
pub fn fredholm_scalar_product(
    excited: &BetheState,
    ground: &BetheState,
    channel: Channel,
    config: &ContourConfig,
) -> Result<LogComplex> {
    fredholm_scalar_product_at(excited, ground, channel, config, finite_fermi_point(ground))
}

pub(crate) fn fredholm_scalar_product_at(
    excited: &BetheState,
    ground: &BetheState,
    channel: Channel,
    config: &ContourConfig,
    q: f64,
) -> Result<LogComplex> {
    check_pair(ground, excited)?;
    if excited.channel != channel {
        return Err(Error::DimensionMismatch("excited state belongs to the other channel".into()));
    }
    check_distinct(&excited.roots)?;
    let (det, _) = fredholm_determinant(ground, excited, config, q)?;
    let p = &ground.params;
    let (z, m) = (p.zeta, p.m);
    let iz = I * z;
    let alpha = excited.alpha();
    let mu = &excited.roots;
    let lam = &ground.roots;
    let one = C64::new(1.0, 0.0);
    let c = |x: f64| C64::new(x, 0.0);
    let shift = |w: f64| ln_shift_exp(mu, lam, alpha, z, c(w)).exp();
    let mut ln = C64::new(0.0, 0.0);
    match channel {
        Channel::Z => {
            for &x in mu {
                for &l in lam {
                    ln += ln_sinh(c(x - l) - iz) - ln_sinh(c(l - x));
                }
            }
            for (&x, &l) in mu.iter().zip(lam) {
                ln += ln_d(c(x), z, m) + ln_d(c(l), z, m) + (shift(l) - one).ln();
            }
            let kappa = C64::from_polar(1.0, 2.0 * PI * alpha);
            ln += (one - kappa).ln() - (one - shift(-q)).ln();
            for (&x, &l) in mu.iter().zip(lam) {
                ln += ln_sinh(c(q + l) - iz) - ln_sinh(c(q + x) - iz);
            }
        }
        Channel::Plus => {
            let h = C64::new(0.0, -0.5 * z);
            ln += ln_a(h, z, m) + ln_sinh(-iz);
            for &l in lam {
                ln += ln_a(c(l), z, m) + (one - shift(l)).ln() + ln_sinh(c(l) - 0.5 * iz);
            }
            for &x in mu {
                ln += ln_d(c(x), z, m) - ln_sinh(c(x) + 0.5 * iz);
                for &l in lam {
                    ln += ln_sinh(c(x - l) - iz) - ln_sinh(c(x - l));
                }
            }
        }
    }
    Ok(LogComplex::from_ln(ln) * det)
}
