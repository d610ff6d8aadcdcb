//! Gauss-Legendre rules and discretized closed contours.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

use crate::error::{Error, Result};
use crate::model::C64;

/// Nodes ascending on [-1, 1].
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let deg = NonZeroUsize::new(n)
        .ok_or_else(|| Error::InvalidParams("quadrature order must be positive".into()))?;
    let rule = GaussLegendre::new(deg);
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_legendre(n)?;
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    Ok((x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| h * v).collect()))
}

/// Quadrature nodes on a closed contour; `weights` already include `dw/dt`.
#[derive(Debug, Clone, Default)]
pub struct Contour {
    pub points: Vec<C64>,
    pub weights: Vec<C64>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push_segment(&mut self, a: C64, b: C64, n: usize) -> Result<()> {
        let (x, w) = gauss_legendre(n)?;
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        for (t, v) in x.iter().zip(&w) {
            self.points.push(c + h * t);
            self.weights.push(h * v);
        }
        Ok(())
    }

    /// Counter-clockwise rectangle with corners `±x ± iy`.
    ///
    /// The vertical sides are split geometrically toward the real axis, starting
    /// from panels of height `fine`, so that kernels with poles just outside the
    /// rectangle near the real axis stay resolved.
    pub fn rectangle(x: f64, y: f64, fine: f64, nodes: usize) -> Result<Contour> {
        if !(x > 0.0 && y > 0.0 && fine > 0.0) {
            return Err(Error::InvalidParams("degenerate contour".into()));
        }
        let mut cuts = vec![0.0];
        let mut t = fine.min(y);
        while t < y {
            cuts.push(t);
            t *= 2.0;
        }
        cuts.push(y);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut levels: Vec<f64> = cuts.iter().rev().map(|c| -c).collect();
        levels.pop();
        levels.extend(cuts.iter().copied());
        // levels ascend from -y to y

        let mut c = Contour::default();
        let horizontal = ((2.0 * x / y).ceil() as usize).clamp(2, 64);
        // right side, upward
        for k in 0..levels.len() - 1 {
            c.push_segment(C64::new(x, levels[k]), C64::new(x, levels[k + 1]), nodes)?;
        }
        // top, right to left
        for k in 0..horizontal {
            let a = x - 2.0 * x * k as f64 / horizontal as f64;
            let b = x - 2.0 * x * (k + 1) as f64 / horizontal as f64;
            c.push_segment(C64::new(a, y), C64::new(b, y), nodes)?;
        }
        // left side, downward
        for k in (0..levels.len() - 1).rev() {
            c.push_segment(C64::new(-x, levels[k + 1]), C64::new(-x, levels[k]), nodes)?;
        }
        // bottom, left to right
        for k in 0..horizontal {
            let a = -x + 2.0 * x * k as f64 / horizontal as f64;
            let b = -x + 2.0 * x * (k + 1) as f64 / horizontal as f64;
            c.push_segment(C64::new(a, -y), C64::new(b, -y), nodes)?;
        }
        Ok(c)
    }

    /// Circle traversed clockwise with the trapezoidal rule.
    pub fn clockwise_circle(center: C64, radius: f64, n: usize) -> Contour {
        let mut c = Contour::default();
        for k in 0..n {
            let t = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let e = C64::from_polar(1.0, t);
            c.points.push(center + radius * e);
            c.weights.push(-C64::new(0.0, 1.0) * radius * e * (2.0 * std::f64::consts::PI / n as f64));
        }
        c
    }

    pub fn append(&mut self, other: Contour) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }

    pub fn integrate(&self, f: impl Fn(C64) -> C64) -> C64 {
        self.points.iter().zip(&self.weights).map(|(z, w)| f(*z) * w).sum()
    }
}
