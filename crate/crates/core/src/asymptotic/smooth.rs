use serde::{Deserialize, Serialize};
use nalgebra::DMatrix;
use std::f64::consts::{LN_2, PI};

use crate::bethe::Channel;
use crate::error::{Error, Result};
use crate::linalg::log_det;
use crate::model::{kernel, C64, I};
use crate::quadrature::{gauss_legendre_on, Contour};
use crate::thermo::{GridFunction, ThermoGrid};

/// Gauss-Legendre order used for integrals over `[-q, q]`.
pub const INTEGRAL_ORDER: usize = 192;

/// Principal `ln sinh z`, stable for large `|Re z|`.
pub(crate) fn principal_ln_sinh(z: C64) -> C64 {
    let (a, b) = (z.re, z.im);
    let e = (-2.0 * a.abs()).exp();
    let modulus = a.abs() - LN_2 + 0.5 * ((1.0 - e).powi(2) + 4.0 * e * b.sin().powi(2)).ln();
    let arg = b.sin().atan2(a.tanh() * b.cos());
    C64::new(modulus, arg)
}

pub(crate) fn coth(z: C64) -> C64 {
    if z.re > 20.0 {
        let e = (-2.0 * z).exp();
        (1.0 + e) / (1.0 - e)
    } else if z.re < -20.0 {
        let e = (2.0 * z).exp();
        -(1.0 + e) / (1.0 - e)
    } else {
        z.cosh() / z.sinh()
    }
}

/// `ln |sinh(x + i y)|`.
pub(crate) fn ln_abs_sinh(x: f64, y: f64) -> f64 {
    principal_ln_sinh(C64::new(x, y)).re
}

/// A shift function sampled on a Gauss-Legendre rule over `[-q, q]`.
#[derive(Debug, Clone)]
pub struct SampledShift {
    pub q: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    f: GridFunction,
}

impl SampledShift {
    pub fn new(f: &GridFunction) -> Result<Self> {
        Self::with_order(f, INTEGRAL_ORDER)
    }

    pub fn with_order(f: &GridFunction, order: usize) -> Result<Self> {
        let q = f.system().q;
        let (nodes, weights) = gauss_legendre_on(-q, q, order)?;
        let values = nodes.iter().map(|&x| f.eval(x)).collect();
        let slopes = nodes.iter().map(|&x| f.slope(x)).collect();
        Ok(Self { q, nodes, weights, values, slopes, f: f.clone() })
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }

    pub fn at(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    pub fn at_complex(&self, w: C64) -> C64 {
        self.f.eval_complex(w)
    }

    /// Cauchy transform `(1/2 pi i) int F(l) coth(l - w) dl`, periodic under `w -> w + i pi`.
    pub fn cauchy(&self, w: C64) -> Result<C64> {
        let q = self.q;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFinite("Cauchy transform argument"));
        }
        let shift = (w.im / PI).round();
        let w = w - I * (PI * shift);
        let dist = if w.re.abs() <= q { w.im.abs() } else { (w.re.abs() - q).hypot(w.im) };
        if dist < 1e-8 {
            return Err(Error::OnCut(format!("{w} lies on [-q, q]")));
        }
        let x0 = w.re.clamp(-q, q);
        let f0 = self.at(x0);
        let mut s = C64::new(0.0, 0.0);
        for ((&x, &wt), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            s += wt * (v - f0) * coth(C64::new(x, 0.0) - w);
        }
        s += f0 * (principal_ln_sinh(q - w) - principal_ln_sinh(-q - w));
        Ok(s / (2.0 * PI * I))
    }

    /// Principal value of `int F(l) coth(l - mu) dl` for real `mu`.
    pub fn pv_coth(&self, mu: f64) -> f64 {
        let q = self.q;
        let f0 = self.at(mu);
        let d0 = self.f.slope(mu);
        let mut s = 0.0;
        for ((&x, &wt), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let t = x - mu;
            s += wt * if t.abs() < 1e-9 { d0 } else { (v - f0) / t.tanh() };
        }
        s + f0 * (ln_abs_sinh(q - mu, 0.0) - ln_abs_sinh(-q - mu, 0.0))
    }

    /// `F(q)` and `F(-q)`.
    pub fn boundary(&self) -> (f64, f64) {
        (self.at(self.q), self.at(-self.q))
    }
}

/// `C_0[F] = -int int F(l) F(m) / sinh^2(l - m - i zeta)`.
pub fn c0_functional(zeta: f64, f: &SampledShift) -> f64 {
    let iz = I * zeta;
    let mut s = 0.0;
    for (i, &x) in f.nodes.iter().enumerate() {
        for (j, &y) in f.nodes.iter().enumerate() {
            let sh = C64::new(x - y, 0.0) - iz;
            let g = 1.0 / (sh.sinh() * sh.sinh());
            s += f.weights[i] * f.weights[j] * f.values[i] * f.values[j] * g.re;
        }
    }
    -s
}

/// Coefficient `C_n` of the smooth part for particle rapidities `mu_p` and hole rapidities `mu_h`.
pub fn smooth_coefficient_c(
    grid: &ThermoGrid,
    channel: Channel,
    f: &SampledShift,
    mu_p: &[f64],
    mu_h: &[f64],
) -> Result<f64> {
    if mu_p.len() != mu_h.len() {
        return Err(Error::DimensionMismatch(format!("{} particles and {} holes", mu_p.len(), mu_h.len())));
    }
    let z = grid.zeta;
    let iz = I * z;
    let mut c = c0_functional(z, f);
    let mut t = C64::new(0.0, 0.0);
    for (&h, &p) in mu_h.iter().zip(mu_p) {
        let (h, p) = (C64::new(h, 0.0), C64::new(p, 0.0));
        t += f.cauchy(h - iz)? + f.cauchy(h + iz)? - f.cauchy(p - iz)? - f.cauchy(p + iz)?;
    }
    c += (2.0 * PI * I * t).re;
    for &a in mu_h {
        for &b in mu_p {
            c += 2.0 * ln_abs_sinh(a - b, z);
        }
    }
    for set in [mu_p, mu_h] {
        for &a in set {
            for &b in set {
                c -= ln_abs_sinh(a - b, z);
            }
        }
    }
    if channel == Channel::Plus {
        let q = C64::new(grid.q, 0.0);
        c += (-2.0 * PI * I * (f.cauchy(q + iz)? + f.cauchy(q - iz)?)).re;
        for (&h, &p) in mu_h.iter().zip(mu_p) {
            c += 2.0 * (ln_abs_sinh(h - grid.q, z) - ln_abs_sinh(p - grid.q, z));
        }
    }
    Ok(c)
}

/// Contour and quadrature settings for the smooth amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplitudeConfig {
    /// Half-height as a fraction of `min(zeta, pi - zeta)`.
    pub height_fraction: f64,
    /// Gap between `q` and the vertical sides, as a fraction of the half-height.
    pub edge_fraction: f64,
    pub nodes_per_panel: usize,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        Self { height_fraction: 0.4, edge_fraction: 0.5, nodes_per_panel: 16 }
    }
}

impl AmplitudeConfig {
    pub fn refined(&self) -> Self {
        Self { nodes_per_panel: 2 * self.nodes_per_panel, ..*self }
    }
}

/// `A_n = twist * exp(ln_reduced) * e^{i phase}`; for the z channel `twist = sin^2(pi alpha)` is kept apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub ln_reduced: f64,
    pub twist: f64,
    pub phase: f64,
    pub ln_fredholm: f64,
    pub ln_denominator: f64,
    pub nodes: usize,
}

impl Amplitude {
    pub fn value(&self) -> f64 {
        self.twist * self.ln_reduced.exp()
    }
}

/// `ln det[I + K / 2 pi]` on `[-q, q]`.
pub fn ln_det_dressing(zeta: f64, f: &SampledShift) -> Result<f64> {
    let n = f.nodes.len();
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + f.weights[j] * kernel(f.nodes[i] - f.nodes[j], zeta) / (2.0 * PI)
    });
    let det = m.determinant();
    if !(det > 0.0) {
        return Err(Error::NumericallySingular);
    }
    Ok(det.ln())
}

/// Right edge of the contour, pulled in until no real point of `(q, X]` has integer `F`.
fn contour_edge(f: &SampledShift, gap: f64) -> Result<f64> {
    let q = f.q;
    let mut x = q + gap;
    for _ in 0..40 {
        let mut hit = None;
        for side in [1.0, -1.0] {
            let s = |t: f64| (PI * f.at(side * t)).sin();
            let n = 200;
            let mut prev = s(q);
            for k in 1..=n {
                let t = q + (x - q) * k as f64 / n as f64;
                let cur = s(t);
                if cur == 0.0 || cur.signum() != prev.signum() {
                    hit = Some(t);
                    break;
                }
                prev = cur;
            }
        }
        match hit {
            None => return Ok(x),
            Some(t) => x = 0.5 * (q + t),
        }
    }
    Err(Error::ContourSingularity("shift function is an integer next to the Fermi edge".into()))
}

fn phi_factor(w: C64, mu_p: &[f64], mu_h: &[f64], zeta: f64) -> C64 {
    let iz = I * zeta;
    let mut ln = C64::new(0.0, 0.0);
    for (&p, &h) in mu_p.iter().zip(mu_h) {
        ln += principal_ln_sinh(w - p) + principal_ln_sinh(w - h + iz)
            - principal_ln_sinh(w - h)
            - principal_ln_sinh(w - p + iz);
    }
    ln.exp()
}

/// Smooth amplitude `A_n` of either channel as a ratio of Fredholm determinants.
#[allow(clippy::too_many_arguments)]
pub fn smooth_amplitude_a(
    grid: &ThermoGrid,
    channel: Channel,
    f: &SampledShift,
    alpha: f64,
    mu_p: &[f64],
    mu_h: &[f64],
    config: &AmplitudeConfig,
) -> Result<Amplitude> {
    if mu_p.len() != mu_h.len() {
        return Err(Error::DimensionMismatch(format!("{} particles and {} holes", mu_p.len(), mu_h.len())));
    }
    let z = grid.zeta;
    let q = grid.q;
    let iz = I * z;
    let kappa = C64::from_polar(1.0, 2.0 * PI * alpha);
    let eta = config.height_fraction * z.min(PI - z);
    let x = contour_edge(f, config.edge_fraction * eta)?;
    let contour = Contour::rectangle(x, eta, 0.25 * (x - q), config.nodes_per_panel)?;
    let n = contour.len();
    let mut pref = Vec::with_capacity(n);
    for &w in &contour.points {
        let e = (2.0 * PI * I * f.at_complex(w)).exp();
        let den = C64::new(1.0, 0.0) - e;
        if den.norm() < 1e-8 {
            return Err(Error::ContourSingularity(format!("1 - exp(2 pi i F) vanishes at {w}")));
        }
        let mut v = phi_factor(w, mu_p, mu_h, z) * (2.0 * PI * I * (f.cauchy(w)? - f.cauchy(w + iz)?)).exp() / den;
        v *= match channel {
            Channel::Z => C64::new(-1.0, 0.0),
            Channel::Plus => (w - q).sinh() / (w - q + iz).sinh(),
        };
        pref.push(v);
    }
    let k_kappa = |x: C64| coth(x + iz) - kappa * coth(x - iz);
    let half = 0.5 * iz;
    let mq = C64::new(-q, 0.0);
    let mat = DMatrix::<C64>::from_fn(n, n, |i, j| {
        let (w, v) = (contour.points[i], contour.points[j]);
        let kern = match channel {
            Channel::Z => k_kappa(w - v) - k_kappa(mq - v),
            Channel::Plus => {
                (v + 3.0 * half).sinh() / ((v - half).sinh() * (w - v - iz).sinh())
                    - kappa * (v - 3.0 * half).sinh() / ((v + half).sinh() * (w - v + iz).sinh())
            }
        };
        let d = if i == j { 1.0 } else { 0.0 };
        d + pref[i] * kern * contour.weights[j] / (2.0 * PI * I)
    });
    let ln_fredholm = log_det(mat)?.log_mag;
    let ln_denominator = ln_det_dressing(z, f)?;
    let ratio = 2.0 * (ln_fredholm - ln_denominator);
    let f_minus = f.at(-q);
    match channel {
        Channel::Z => {
            let s = (PI * f_minus).sin().abs();
            if s < 1e-14 {
                return Err(Error::SingularArgument("F(-q) is an integer".into()));
            }
            let mut ln = -2.0 * s.ln() + 2.0 * (-2.0 * PI * I * f.cauchy(mq + iz)?).re + ratio;
            for (&h, &p) in mu_h.iter().zip(mu_p) {
                ln += 2.0 * (ln_abs_sinh(q + h, z) - ln_abs_sinh(q + p, z));
            }
            Ok(Amplitude {
                ln_reduced: ln,
                twist: (PI * alpha).sin().powi(2),
                phase: 0.0,
                ln_fredholm,
                ln_denominator,
                nodes: n,
            })
        }
        Channel::Plus => {
            let mut ln = (z.sin() / (2.0 * PI)).ln() + ratio;
            ln += 2.0 * ((-2.0 * PI * I * f.cauchy(0.5 * iz)?).re - ln_abs_sinh(q, -0.5 * z));
            for (&h, &p) in mu_h.iter().zip(mu_p) {
                ln += 2.0 * (ln_abs_sinh(h, -0.5 * z) - ln_abs_sinh(p, -0.5 * z));
            }
            Ok(Amplitude {
                ln_reduced: ln,
                twist: 1.0,
                phase: crate::linalg::wrap_phase(-2.0 * PI * alpha),
                ln_fredholm,
                ln_denominator,
                nodes: n,
            })
        }
    }
}

/// `S_zz = (2/pi^2) sin^2(P/2) A e^C` or `S_{+-} = |A| e^C`.
pub fn smooth_part(channel: Channel, p_ex: f64, ln_c: f64, amplitude: &Amplitude) -> f64 {
    match channel {
        Channel::Z => 2.0 / (PI * PI) * (0.5 * p_ex).sin().powi(2) * amplitude.value() * ln_c.exp(),
        Channel::Plus => amplitude.value() * ln_c.exp(),
    }
}
