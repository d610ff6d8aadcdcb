//! Large-`M` limits of the finite sums and products met in the discrete parts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::thermo::ThermoGrid;

/// `sum_{k=1..n, k != h} |f(k/M) - f(h/M)| / |k - h|^power`.
pub fn lemma_sum(f: impl Fn(f64) -> f64, m: usize, n: usize, h: i64, power: i32) -> f64 {
    let mf = m as f64;
    let fh = f(h as f64 / mf);
    (1..=n as i64)
        .filter(|&k| k != h)
        .map(|k| (f(k as f64 / mf) - fh).abs() / ((k - h) as f64).abs().powi(power))
        .sum()
}

/// Inverts the ground counting function `xi` at increasing targets, warm-starting each Newton solve.
pub fn invert_counting(grid: &ThermoGrid, targets: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(targets.len());
    let mut x = -grid.q;
    for &t in targets {
        let mut converged = false;
        for _ in 0..60 {
            let r = grid.xi(x) - t;
            let step = r / grid.density(x);
            x -= step;
            if step.abs() < 1e-14 * (1.0 + x.abs()) {
                converged = true;
                break;
            }
        }
        if !converged || !x.is_finite() {
            return Err(Error::NonConvergence { iterations: 60, residual: (grid.xi(x) - t).abs() });
        }
        out.push(x);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductLimitCheck {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: i64,
    pub ln_product: f64,
    pub ln_limit: f64,
}

impl ProductLimitCheck {
    /// `|prod / exp(limit) - 1|`.
    pub fn discrepancy(&self) -> f64 {
        (self.ln_product - self.ln_limit).exp_m1().abs()
    }
}

/// `prod_{k=1..N} (k - h + f(l_k)) / (k - h + f(l_h))` with `l_k = xi^{-1}(k/M)`, against its
/// limiting integral over `[-q, q]`.
pub fn counting_product_limit(grid: &ThermoGrid, f: impl Fn(f64) -> f64, m: usize, h: i64) -> Result<ProductLimitCheck> {
    let n = (grid.d * m as f64).round() as usize;
    let mf = m as f64;
    let targets: Vec<f64> = (1..=n).map(|k| k as f64 / mf).collect();
    let lam = invert_counting(grid, &targets)?;
    let lam_h = invert_counting(grid, &[h as f64 / mf])?[0];
    let fh = f(lam_h);
    let mut ln_product = 0.0;
    for (k, &l) in (1..=n as i64).zip(&lam) {
        let d = (k - h) as f64;
        let ratio = (d + f(l)) / (d + fh);
        if !(ratio > 0.0) {
            return Err(Error::SingularArgument(format!("factor {k} of the product is not positive")));
        }
        ln_product += ratio.ln();
    }
    let q = grid.q;
    let xh = grid.xi(lam_h);
    let slope_h = if lam_h.abs() <= q { Some(derivative(&f, lam_h) / grid.density(lam_h)) } else { None };
    let (nodes, weights) = gauss_legendre_on(-q, q, 400)?;
    let mut ln_limit = 0.0;
    for (&x, &w) in nodes.iter().zip(&weights) {
        let dx = grid.xi(x) - xh;
        let g = match slope_h {
            Some(s) if dx.abs() < 1e-10 => s,
            _ => (f(x) - fh) / dx,
        };
        ln_limit += w * g * grid.density(x);
    }
    Ok(ProductLimitCheck { m, n, h, ln_product, ln_limit })
}

fn derivative(f: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    (f(x + h) - f(x - h)) / (2.0 * h)
}
