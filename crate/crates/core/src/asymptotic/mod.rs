//! Thermodynamic-limit predictions for scalar products and form-factor products.

mod discrete;
mod smooth;
pub mod summation;

pub use discrete::{
    c1_functional, d_functional, discrete_block, e0_factor, exponent, j_functional, ln_barnes_g,
    ln_d_functional, ln_discrete_away, ln_discrete_critical, ln_gamma_ratio, ln_r_coefficient, phi,
    r_coefficient, BlockKind,
};
pub use smooth::{
    c0_functional, ln_det_dressing, smooth_amplitude_a, smooth_coefficient_c, smooth_part, Amplitude,
    AmplitudeConfig, SampledShift, INTEGRAL_ORDER,
};

use serde::{Deserialize, Serialize};

use crate::bethe::{Channel, PrClass};
use crate::error::{Error, Result};
use crate::finite_ff::ProductChannel;
use crate::model::C64;
use crate::thermo::ThermoGrid;

/// Rapidities closer than this many spacings `1 / (M rho(q))` to `+-q` are treated as critical.
pub const EDGE_MARGIN_SPACINGS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Away,
    Critical,
}

/// An excited state described either by macroscopic rapidities or by its edge class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Excitation {
    Away { mu_p: Vec<f64>, mu_h: Vec<f64> },
    Critical(PrClass),
}

impl Excitation {
    pub fn ground() -> Self {
        Excitation::Away { mu_p: vec![], mu_h: vec![] }
    }

    pub fn regime(&self) -> Regime {
        match self {
            Excitation::Away { .. } => Regime::Away,
            Excitation::Critical(_) => Regime::Critical,
        }
    }

    pub fn n_pairs(&self) -> usize {
        match self {
            Excitation::Away { mu_h, .. } => mu_h.len(),
            Excitation::Critical(c) => c.n_pairs(),
        }
    }

    /// Particle and hole rapidities; critical particles and holes sit exactly on `+-q`.
    pub fn rapidities(&self, q: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            Excitation::Away { mu_p, mu_h } => (mu_p.clone(), mu_h.clone()),
            Excitation::Critical(c) => {
                let edge = |plus: usize, minus: usize| {
                    std::iter::repeat(q).take(plus).chain(std::iter::repeat(-q).take(minus)).collect::<Vec<_>>()
                };
                (edge(c.p_plus.len(), c.p_minus.len()), edge(c.h_plus.len(), c.h_minus.len()))
            }
        }
    }

    fn umklapp(&self) -> i64 {
        match self {
            Excitation::Away { .. } => 0,
            Excitation::Critical(c) => c.r,
        }
    }
}

/// Rejects away-regime rapidities inside the edge margin for a chain of length `m`.
pub fn check_margin(grid: &ThermoGrid, excitation: &Excitation, m: usize) -> Result<()> {
    if let Excitation::Away { mu_p, mu_h } = excitation {
        let margin = EDGE_MARGIN_SPACINGS / (m as f64 * grid.density(grid.q));
        for &x in mu_p.iter().chain(mu_h) {
            if (x - grid.q).abs() <= margin || (x + grid.q).abs() <= margin {
                return Err(Error::RegimeViolation(x));
            }
        }
    }
    Ok(())
}

/// Limiting shift function of the excitation, sampled for the integrals.
pub fn sampled_shift(grid: &ThermoGrid, channel: Channel, alpha: f64, excitation: &Excitation) -> Result<SampledShift> {
    let (mu_p, mu_h) = excitation.rapidities(grid.q);
    SampledShift::new(&grid.shift_function_limit(channel, alpha, &mu_p, &mu_h)?)
}

/// Boundary values `F(+-q)` entering the exponent: `F_r = F + r` in the critical case.
fn exponent_boundary(f: &SampledShift, excitation: &Excitation) -> (f64, f64) {
    let r = excitation.umklapp() as f64;
    let (fp, fm) = f.boundary();
    (fp + r, fm + r)
}

/// Decay exponent of the excitation, from the shift function alone.
pub fn predicted_exponent(grid: &ThermoGrid, channel: Channel, alpha: f64, excitation: &Excitation) -> Result<f64> {
    let f = sampled_shift(grid, channel, alpha, excitation)?;
    let (fp, fm) = exponent_boundary(&f, excitation);
    Ok(exponent(channel, excitation.n_pairs(), fp, fm, excitation.regime() == Regime::Critical))
}

/// Large-`M` form of the normalized scalar product `S_N ~ M^{-theta} A e^C D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProductPrediction {
    pub channel: Channel,
    pub theta: f64,
    pub ln_c: f64,
    pub amplitude: Amplitude,
    pub ln_d: f64,
    pub p_ex: f64,
}

impl ScalarProductPrediction {
    /// `M^theta S_N` without the `sin^2(pi alpha)` factor of the z channel.
    pub fn reduced(&self) -> f64 {
        (self.amplitude.ln_reduced + self.ln_c + self.ln_d).exp()
    }

    /// Predicted `|S_N|` at chain length `m`.
    pub fn s_n(&self, m: usize) -> f64 {
        (m as f64).powf(-self.theta) * self.amplitude.twist * self.reduced()
    }
}

fn discrete_and_exponent(
    grid: &ThermoGrid,
    channel: Channel,
    f: &SampledShift,
    excitation: &Excitation,
) -> Result<(f64, f64)> {
    let (mu_p, mu_h) = excitation.rapidities(grid.q);
    let ln_d = match excitation {
        Excitation::Away { .. } => ln_discrete_away(grid, channel, f, &mu_p, &mu_h)?,
        Excitation::Critical(class) => ln_discrete_critical(grid, channel, f, class)?,
    };
    let (fp, fm) = exponent_boundary(f, excitation);
    let theta = exponent(channel, excitation.n_pairs(), fp, fm, excitation.regime() == Regime::Critical);
    Ok((ln_d, theta))
}

pub fn predict_scalar_product(
    grid: &ThermoGrid,
    channel: Channel,
    alpha: f64,
    excitation: &Excitation,
    config: &AmplitudeConfig,
) -> Result<ScalarProductPrediction> {
    let (mu_p, mu_h) = excitation.rapidities(grid.q);
    let f = sampled_shift(grid, channel, alpha, excitation)?;
    let ln_c = smooth_coefficient_c(grid, channel, &f, &mu_p, &mu_h)?;
    let amplitude = smooth_amplitude_a(grid, channel, &f, alpha, &mu_p, &mu_h, config)?;
    let (ln_d, theta) = discrete_and_exponent(grid, channel, &f, excitation)?;
    Ok(ScalarProductPrediction {
        channel,
        theta,
        ln_c,
        amplitude,
        ln_d,
        p_ex: grid.excitation_momentum(alpha, &mu_p, &mu_h),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionParams {
    pub zeta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub alpha: f64,
    pub n: usize,
    pub r: i64,
    /// `F(q)`, shifted by `r` in the critical regime.
    pub f_plus: f64,
    pub f_minus: f64,
}

/// Large-`M` form of a product of two form factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorPrediction {
    pub channel: ProductChannel,
    pub regime: Regime,
    pub theta: f64,
    #[serde(rename = "P_ex")]
    pub p_ex: f64,
    pub smooth: f64,
    pub discrete: f64,
    pub params: PredictionParams,
}

impl FormFactorPrediction {
    /// Exponent recomputed from the stored boundary values.
    pub fn theta_from_boundary(&self) -> f64 {
        let p = &self.params;
        exponent(self.channel.state_channel(), p.n, p.f_plus, p.f_minus, self.regime == Regime::Critical)
    }

    /// `M^{-theta} e^{i P (m - m')} S D`, with the alternating sign of the pm channel.
    pub fn assembled(&self, m_diff: i64, m: usize) -> C64 {
        let mut v = (m as f64).powf(-self.theta) * self.smooth * self.discrete;
        if self.channel == ProductChannel::Pm && m_diff.rem_euclid(2) == 1 {
            v = -v;
        }
        C64::from_polar(v, self.p_ex * m_diff as f64)
    }
}

/// Assembles the form-factor product prediction.
///
/// In the zz channel at zero twist the smooth part is taken from the second twist derivative of the
/// scalar product, so it stays finite while `A` itself vanishes.
pub fn predict_form_factor(
    grid: &ThermoGrid,
    channel: Channel,
    alpha: f64,
    excitation: &Excitation,
    config: &AmplitudeConfig,
) -> Result<FormFactorPrediction> {
    let (mu_p, mu_h) = excitation.rapidities(grid.q);
    let p_ex = grid.excitation_momentum(alpha, &mu_p, &mu_h);
    let f = sampled_shift(grid, channel, alpha, excitation)?;
    let (ln_d, theta) = discrete_and_exponent(grid, channel, &f, excitation)?;
    let smooth = if channel == Channel::Z && alpha == 0.0 && (0.5 * p_ex).sin().abs() < 1e-12 {
        // zero momentum: the amplitude is 0/0 here but is multiplied by sin^2(P/2) = 0
        0.0
    } else {
        let sp = predict_scalar_product(grid, channel, alpha, excitation, config)?;
        match channel {
            Channel::Z if alpha == 0.0 => {
                4.0 * (0.5 * p_ex).sin().powi(2) * (sp.amplitude.ln_reduced + sp.ln_c).exp()
            }
            _ => smooth_part(channel, p_ex, sp.ln_c, &sp.amplitude),
        }
    };
    let (f_plus, f_minus) = exponent_boundary(&f, excitation);
    Ok(FormFactorPrediction {
        channel: ProductChannel::from_state_channel(channel),
        regime: excitation.regime(),
        theta,
        p_ex,
        smooth,
        discrete: ln_d.exp(),
        params: PredictionParams {
            zeta: grid.zeta,
            d: grid.d,
            alpha,
            n: excitation.n_pairs(),
            r: excitation.umklapp(),
            f_plus,
            f_minus,
        },
    })
}

/// Predicted product of form factors at distance `m_diff` on a chain of length `m`.
pub fn predict_product(
    grid: &ThermoGrid,
    channel: Channel,
    alpha: f64,
    excitation: &Excitation,
    m_diff: i64,
    m: usize,
    config: &AmplitudeConfig,
) -> Result<C64> {
    check_margin(grid, excitation, m)?;
    Ok(predict_form_factor(grid, channel, alpha, excitation, config)?.assembled(m_diff, m))
}

/// `F_{r,+} + 1` and `F_{r,-}` for the plus channel from the dressed charge alone.
pub fn plus_boundary_identity(grid: &ThermoGrid, alpha: f64, r: i64) -> (f64, f64) {
    let z = grid.dressed_charge(grid.q);
    let a = (alpha + r as f64) * z;
    (a + 0.5 / z, a - 0.5 / z)
}
