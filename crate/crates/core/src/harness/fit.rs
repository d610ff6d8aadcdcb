use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest system sizes accepted by [`fit_power_law`].
pub const MIN_FIT_SIZES: usize = 4;

/// Least-squares fit of `ln S = a - theta ln M (+ b ln M / M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub theta: f64,
    /// `e^a`.
    pub amplitude: f64,
    /// `b`, when the correction term was fitted.
    pub correction: Option<f64>,
    pub rms_residual: f64,
    pub sizes: usize,
}

pub fn fit_power_law(sizes: &[usize], values: &[f64], with_correction: bool) -> Result<PowerLawFit> {
    if sizes.len() != values.len() {
        return Err(Error::DimensionMismatch(format!("{} sizes, {} values", sizes.len(), values.len())));
    }
    if sizes.len() < MIN_FIT_SIZES {
        return Err(Error::FitIllConditioned(sizes.len()));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParams(format!("cannot fit a power law through {v}")));
    }
    let cols = if with_correction { 3 } else { 2 };
    let rows = sizes.len();
    let a = DMatrix::from_fn(rows, cols, |i, j| {
        let l = (sizes[i] as f64).ln();
        match j {
            0 => 1.0,
            1 => -l,
            _ => l / sizes[i] as f64,
        }
    });
    let y = DVector::from_iterator(rows, values.iter().map(|v| v.ln()));
    let x = a.clone().svd(true, true).solve(&y, 1e-14).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let resid = &a * &x - &y;
    Ok(PowerLawFit {
        theta: x[1],
        amplitude: x[0].exp(),
        correction: with_correction.then(|| x[2]),
        rms_residual: (resid.norm_squared() / rows as f64).sqrt(),
        sizes: rows,
    })
}
