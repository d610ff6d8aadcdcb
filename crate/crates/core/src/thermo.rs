//! Linear integral equations of the thermodynamic limit on `[-q, q]`.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::bethe::Channel;
use crate::error::{Error, Result};
use crate::model::{
    check_zeta, kernel, kernel_complex, kernel_prime, kernel_second, p0, p0_prime, p0_prime_complex, theta,
    theta_complex, C64,
};
use crate::quadrature::gauss_legendre_on;

pub const DEFAULT_ORDER: usize = 128;

/// Right-hand sides of the equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    /// `1`, for the dressed charge.
    Constant,
    /// `p0'(lambda) / 2 pi`, for the density.
    MomentumDensity,
    /// `theta(lambda - nu) / 2 pi`, for the dressed phase.
    Phase(f64),
}

impl Source {
    pub fn eval(&self, lambda: f64, zeta: f64) -> f64 {
        match *self {
            Source::Constant => 1.0,
            Source::MomentumDensity => p0_prime(lambda, zeta) / (2.0 * PI),
            Source::Phase(nu) => theta(lambda - nu, zeta) / (2.0 * PI),
        }
    }

    pub fn eval_complex(&self, w: C64, zeta: f64) -> C64 {
        match *self {
            Source::Constant => C64::new(1.0, 0.0),
            Source::MomentumDensity => p0_prime_complex(w, zeta) / (2.0 * PI),
            Source::Phase(nu) => theta_complex(w - nu, zeta) / (2.0 * PI),
        }
    }
}

/// Discretized operator `I + K / 2 pi` on Gauss-Legendre nodes.
#[derive(Debug, Clone)]
pub struct Nystrom {
    pub zeta: f64,
    pub q: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl Nystrom {
    pub fn new(zeta: f64, q: f64, order: usize) -> Result<Self> {
        check_zeta(zeta)?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParams(format!("Fermi boundary must be positive, got {q}")));
        }
        let (nodes, weights) = gauss_legendre_on(-q, q, order)?;
        let n = nodes.len();
        let a = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            d + weights[j] * kernel(nodes[i] - nodes[j], zeta) / (2.0 * PI)
        });
        let lu = a.lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
        let big = diag.iter().cloned().fold(0.0, f64::max);
        let small = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(small > 1e-12 * big) {
            return Err(Error::SingularSystem);
        }
        Ok(Self { zeta, q, nodes, weights, lu })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn solve(self: &Arc<Self>, source: Source) -> Result<GridFunction> {
        let rhs = DVector::from_iterator(self.order(), self.nodes.iter().map(|&x| source.eval(x, self.zeta)));
        let v = self.lu.solve(&rhs).ok_or(Error::SingularSystem)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(GridFunction {
            system: Arc::clone(self),
            values: v.iter().copied().collect(),
            sources: vec![(1.0, source)],
            offset: 0.0,
        })
    }
}

/// A solution of the equation, or a linear combination of solutions plus a constant.
///
/// Off the nodes it is evaluated by the Nyström interpolant, which extends to
/// complex arguments inside the analyticity strip of the kernel.
#[derive(Debug, Clone)]
pub struct GridFunction {
    system: Arc<Nystrom>,
    /// Node values of the integral-equation part (without `offset`).
    values: Vec<f64>,
    sources: Vec<(f64, Source)>,
    offset: f64,
}

impl GridFunction {
    pub fn system(&self) -> &Nystrom {
        &self.system
    }

    pub fn nodes(&self) -> &[f64] {
        &self.system.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.system.weights
    }

    /// Values at the quadrature nodes.
    pub fn node_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v + self.offset).collect()
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let s = &self.system;
        let src: f64 = self.sources.iter().map(|(c, g)| c * g.eval(lambda, s.zeta)).sum();
        let conv: f64 = s
            .nodes
            .iter()
            .zip(&s.weights)
            .zip(&self.values)
            .map(|((&x, &w), &v)| w * kernel(lambda - x, s.zeta) * v)
            .sum();
        self.offset + src - conv / (2.0 * PI)
    }

    pub fn eval_complex(&self, w: C64) -> C64 {
        let s = &self.system;
        let src: C64 = self.sources.iter().map(|(c, g)| *c * g.eval_complex(w, s.zeta)).sum();
        let conv: C64 = s
            .nodes
            .iter()
            .zip(&s.weights)
            .zip(&self.values)
            .map(|((&x, &wt), &v)| wt * v * kernel_complex(w - x, s.zeta))
            .sum();
        self.offset + src - conv / (2.0 * PI)
    }

    /// First derivative of the interpolant.
    pub fn slope(&self, lambda: f64) -> f64 {
        self.derivative(lambda, false)
    }

    /// Second derivative of the interpolant.
    pub fn curvature(&self, lambda: f64) -> f64 {
        self.derivative(lambda, true)
    }

    fn derivative(&self, lambda: f64, second: bool) -> f64 {
        let s = &self.system;
        let z = s.zeta;
        // p0' = 2 K(., zeta / 2) and theta' = K
        let dk = |x: f64, zz: f64| if second { kernel_prime(x, zz) } else { kernel(x, zz) };
        let ddk = |x: f64, zz: f64| if second { kernel_second(x, zz) } else { kernel_prime(x, zz) };
        let src: f64 = self
            .sources
            .iter()
            .map(|(c, g)| {
                c * match *g {
                    Source::Constant => 0.0,
                    Source::MomentumDensity => 2.0 * ddk(lambda, 0.5 * z) / (2.0 * PI),
                    Source::Phase(nu) => dk(lambda - nu, z) / (2.0 * PI),
                }
            })
            .sum();
        let conv: f64 = s
            .nodes
            .iter()
            .zip(&s.weights)
            .zip(&self.values)
            .map(|((&x, &w), &v)| w * ddk(lambda - x, z) * v)
            .sum();
        src - conv / (2.0 * PI)
    }

    /// `sum_j w_j f(x_j)`.
    pub fn integral(&self) -> f64 {
        self.system.weights.iter().zip(&self.values).map(|(w, v)| w * (v + self.offset)).sum()
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            system: Arc::clone(&self.system),
            values: self.values.iter().map(|v| c * v).collect(),
            sources: self.sources.iter().map(|&(a, s)| (c * a, s)).collect(),
            offset: c * self.offset,
        }
    }

    pub fn plus_constant(&self, r: f64) -> GridFunction {
        let mut g = self.clone();
        g.offset += r;
        g
    }

    /// `self + c * other`; both must live on the same system.
    pub fn add_scaled(&self, c: f64, other: &GridFunction) -> Result<GridFunction> {
        if !Arc::ptr_eq(&self.system, &other.system) {
            return Err(Error::DimensionMismatch("grid functions on different grids".into()));
        }
        let mut sources = self.sources.clone();
        sources.extend(other.sources.iter().map(|&(a, s)| (c * a, s)));
        Ok(GridFunction {
            system: Arc::clone(&self.system),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
            sources,
            offset: self.offset + c * other.offset,
        })
    }
}

/// Solve `f + (1/2pi) int_{-q}^{q} K(. - mu) f(mu) dmu = source` on a fresh grid.
pub fn solve_linear_integral_equation(zeta: f64, q: f64, order: usize, source: Source) -> Result<GridFunction> {
    Arc::new(Nystrom::new(zeta, q, order)?).solve(source)
}

/// Thermodynamic data at fixed `(zeta, D)`.
#[derive(Debug, Clone)]
pub struct ThermoGrid {
    pub zeta: f64,
    pub d: f64,
    pub q: f64,
    pub k_f: f64,
    pub rho: GridFunction,
    pub z: GridFunction,
    system: Arc<Nystrom>,
}

/// `int_{-q}^{q} rho` for a trial boundary.
fn filling(zeta: f64, q: f64, order: usize) -> Result<f64> {
    Ok(solve_linear_integral_equation(zeta, q, order, Source::MomentumDensity)?.integral())
}

/// Largest boundary tried before giving up on a bracket.
const Q_MAX: f64 = 20.0;

pub fn build_thermo(zeta: f64, d: f64) -> Result<ThermoGrid> {
    build_thermo_with_order(zeta, d, DEFAULT_ORDER)
}

pub fn build_thermo_with_order(zeta: f64, d: f64, order: usize) -> Result<ThermoGrid> {
    check_zeta(zeta)?;
    if !(d > 0.0 && d <= 0.5) {
        return Err(Error::InvalidParams(format!("density must lie in (0, 1/2], got {d}")));
    }
    let g = |q: f64| filling(zeta, q, order).map(|v| v - d);
    let (mut lo, mut glo) = (0.0, -d);
    let mut hi = 0.5;
    let mut ghi = g(hi)?;
    while ghi < 0.0 {
        lo = hi;
        glo = ghi;
        hi *= 2.0;
        if hi > Q_MAX {
            return Err(Error::NoBracket(d));
        }
        ghi = g(hi)?;
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm < 0.0 {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
        }
    }
    // secant steps kept inside the bracket
    let mut q = lo - glo * (hi - lo) / (ghi - glo);
    for _ in 0..60 {
        let gq = g(q)?;
        if gq.abs() < 1e-14 {
            break;
        }
        if gq < 0.0 {
            lo = q;
            glo = gq;
        } else {
            hi = q;
            ghi = gq;
        }
        let next = lo - glo * (hi - lo) / (ghi - glo);
        if (next - q).abs() < 1e-15 {
            q = next;
            break;
        }
        q = next;
    }
    let system = Arc::new(Nystrom::new(zeta, q, order)?);
    let rho = system.solve(Source::MomentumDensity)?;
    let z = system.solve(Source::Constant)?;
    let mut grid = ThermoGrid { zeta, d, q, k_f: 0.0, rho, z, system };
    grid.k_f = grid.dressed_momentum(q);
    Ok(grid)
}

impl ThermoGrid {
    pub fn system(&self) -> &Arc<Nystrom> {
        &self.system
    }

    pub fn nodes(&self) -> &[f64] {
        &self.system.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.system.weights
    }

    pub fn density(&self, lambda: f64) -> f64 {
        self.rho.eval(lambda)
    }

    pub fn dressed_charge(&self, lambda: f64) -> f64 {
        self.z.eval(lambda)
    }

    /// `p(lambda) = 2 pi int_0^lambda rho`, from the integrated equation.
    pub fn dressed_momentum(&self, lambda: f64) -> f64 {
        let s = &self.system;
        let conv: f64 = s
            .nodes
            .iter()
            .zip(&s.weights)
            .zip(&self.rho.values)
            .map(|((&x, &w), &r)| w * r * (theta(lambda - x, s.zeta) + theta(x, s.zeta)))
            .sum();
        p0(lambda, s.zeta) - conv
    }

    /// Ground-state counting function limit, vanishing at `-q`.
    pub fn xi(&self, lambda: f64) -> f64 {
        (self.dressed_momentum(lambda) + self.k_f) / (2.0 * PI)
    }

    pub fn dressed_phase(&self, nu: f64) -> Result<GridFunction> {
        self.system.solve(Source::Phase(nu))
    }

    /// Limiting shift function of a state with particles `mu_p` and holes `mu_h`.
    pub fn shift_function_limit(
        &self,
        channel: Channel,
        alpha: f64,
        mu_p: &[f64],
        mu_h: &[f64],
    ) -> Result<GridFunction> {
        if mu_p.len() != mu_h.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} particles and {} holes",
                mu_p.len(),
                mu_h.len()
            )));
        }
        let mut f = match channel {
            Channel::Z => self.z.scaled(alpha),
            Channel::Plus => self.z.scaled(alpha - 0.5).add_scaled(1.0, &self.dressed_phase(self.q)?)?,
        };
        for &p in mu_p {
            f = f.add_scaled(1.0, &self.dressed_phase(p)?)?;
        }
        for &h in mu_h {
            f = f.add_scaled(-1.0, &self.dressed_phase(h)?)?;
        }
        Ok(f)
    }

    /// `2 pi alpha D + sum [p(mu_p) - p(mu_h)]`.
    pub fn excitation_momentum(&self, alpha: f64, mu_p: &[f64], mu_h: &[f64]) -> f64 {
        let s: f64 = mu_p.iter().map(|&x| self.dressed_momentum(x)).sum::<f64>()
            - mu_h.iter().map(|&x| self.dressed_momentum(x)).sum::<f64>();
        2.0 * PI * alpha * self.d + s
    }

    pub fn export(&self) -> ThermoExport {
        ThermoExport {
            zeta: self.zeta,
            d: self.d,
            order: self.system.order(),
            q: self.q,
            k_f: self.k_f,
            nodes: self.system.nodes.clone(),
            weights: self.system.weights.clone(),
            rho: self.rho.node_values(),
            z: self.z.node_values(),
        }
    }
}

/// Cacheable node data, keyed by `(zeta, d, order)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoExport {
    pub zeta: f64,
    pub d: f64,
    pub order: usize,
    pub q: f64,
    pub k_f: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
}
