use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_power_law, PowerLawFit, MIN_FIT_SIZES};
use crate::asymptotic::{
    check_margin, predict_form_factor, predict_scalar_product, predicted_exponent, sampled_shift, AmplitudeConfig, Excitation,
};
use crate::bethe::{solve_bethe_state, BetheState, ExcitationSpec, PrClass};
use crate::error::{Error, Result};
use crate::finite_ff::{
    excitation_momentum_hat, factorized_product, finite_product, zz_second_derivative, ContourConfig, ProductChannel,
};
use crate::model::ModelParams;
use crate::thermo::{build_thermo_with_order, ThermoGrid, DEFAULT_ORDER};

pub const CSV_HEADER: [&str; 7] = ["M", "N", "alpha", "S_N", "prediction", "theta_pred", "P_ex"];

/// How the excited state is chosen at each system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StudyExcitation {
    /// Edge class with the same integers at every size.
    Class(PrClass),
    /// One pair with hole `round(hole_fraction N_kappa)` and particle `N_kappa + round(particle_offset M)`.
    Away { hole_fraction: f64, particle_offset: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.0]
}

fn default_thermo_order() -> usize {
    DEFAULT_ORDER
}

fn enabled() -> bool {
    true
}

/// One scaling study, read from a single JSON document.
///
/// At zero twist the studied quantity is the form-factor product `|F|^2`; at nonzero twist it is `|S_N|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub zeta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub channel: ProductChannel,
    pub excitation: StudyExcitation,
    #[serde(rename = "M")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_thermo_order")]
    pub thermo_order: usize,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub amplitude: AmplitudeConfig,
    /// Fit the `ln M / M` correction term.
    #[serde(default = "enabled")]
    pub fit_correction: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

impl StudyConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_reader(std::fs::File::open(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < PI) {
            return Err(Error::InvalidParams(format!("zeta = {} outside (0, pi)", self.zeta)));
        }
        if !(self.d > 0.0 && self.d <= 0.5) {
            return Err(Error::InvalidParams(format!("D = {} outside (0, 1/2]", self.d)));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParams("alpha schedule must be non-empty and finite".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidParams("empty M list".into()));
        }
        if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("M list must be strictly increasing".into()));
        }
        if let Some(m) = self.sizes.iter().find(|&&m| m % 2 != 0) {
            return Err(Error::InvalidParams(format!("M = {m} is odd")));
        }
        for &m in &self.sizes {
            self.sector(m)?;
        }
        match &self.excitation {
            StudyExcitation::Class(pr) => {
                pr.validate()?;
                if self.channel == ProductChannel::Zz && pr.r == 0 && pr.n_pairs() == 0 {
                    return Err(Error::InvalidSpec("the zz ground state has no excitation to study".into()));
                }
            }
            StudyExcitation::Away { hole_fraction, particle_offset } => {
                if !(*hole_fraction > 0.0 && *hole_fraction < 1.0) || !(*particle_offset > 0.0) {
                    return Err(Error::InvalidSpec("away pair needs 0 < hole_fraction < 1 and particle_offset > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// `N = D M`, which must be an integer.
    pub fn sector(&self, m: usize) -> Result<usize> {
        let x = self.d * m as f64;
        let n = x.round();
        if (x - n).abs() > 1e-9 || n < 1.0 {
            return Err(Error::InvalidParams(format!("D M = {x} is not a positive integer at M = {m}")));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "S_N")]
    pub s_n: f64,
    /// Absent when the shift function is integer-valued on `[-q, q]` and the amplitude is undefined.
    pub prediction: Option<f64>,
    pub theta_pred: f64,
    #[serde(rename = "P_ex")]
    pub p_ex: f64,
    /// `S_N / prediction`.
    pub ratio: Option<f64>,
    /// `M^theta S_N`.
    pub scaled: f64,
    /// LU pivot spread of the determinant route, when it reports one.
    pub pivot_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub theta_pred: f64,
    pub fit: PowerLawFit,
    /// `M^theta` times the prediction, at the largest size.
    pub predicted_amplitude: Option<f64>,
    /// `M^theta S_N / predicted_amplitude` at the largest size.
    pub amplitude_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub config: StudyConfig,
    pub records: Vec<ScalingRecord>,
    pub fits: Vec<AlphaSummary>,
}

/// Integers of the excited state at sector `n`, with the particle/hole pair for the away case.
fn excitation_spec(config: &StudyConfig, m: usize, n: usize) -> Result<(ExcitationSpec, Option<(i64, i64)>)> {
    let sc = config.channel.state_channel();
    Ok(match &config.excitation {
        StudyExcitation::Class(pr) => (ExcitationSpec::from_pr(sc, pr.clone()), None),
        StudyExcitation::Away { hole_fraction, particle_offset } => {
            let nk = sc.n_kappa(n) as i64;
            let h = ((hole_fraction * nk as f64).round() as i64).clamp(1, n as i64);
            let p = nk + ((particle_offset * m as f64).round() as i64).max(1);
            (ExcitationSpec::particle_hole(sc, vec![h], vec![p]), Some((h, p)))
        }
    })
}

fn thermo_excitation(config: &StudyConfig, ground: &BetheState, excited: &BetheState, pair: Option<(i64, i64)>) -> Result<Excitation> {
    match (&config.excitation, pair) {
        (StudyExcitation::Class(pr), _) => Ok(Excitation::Critical(pr.clone())),
        (StudyExcitation::Away { .. }, Some((h, p))) => {
            let k = excited
                .ells
                .iter()
                .position(|&l| l == p)
                .ok_or_else(|| Error::InvalidSpec(format!("particle {p} missing from the excited state")))?;
            Ok(Excitation::Away { mu_p: vec![excited.roots[k]], mu_h: vec![ground.roots[h as usize - 1]] })
        }
        _ => Err(Error::InvalidSpec("away excitation without a pair".into())),
    }
}

/// Finite value and its prediction at one `(M, alpha)`.
pub fn scaling_record(config: &StudyConfig, grid: &ThermoGrid, m: usize, alpha: f64) -> Result<ScalingRecord> {
    let n = config.sector(m)?;
    let params = ModelParams::new(config.zeta, m, n, alpha)?;
    let ground = solve_bethe_state(&params, None)?;
    let (spec, pair) = excitation_spec(config, m, n)?;
    let excited = solve_bethe_state(&params, Some(&spec))?;
    let excitation = thermo_excitation(config, &ground, &excited, pair)?;
    check_margin(grid, &excitation, m)?;
    let sc = config.channel.state_channel();
    let (s_n, pivot_spread) = if alpha == 0.0 && config.channel == ProductChannel::Zz {
        let p_hat = excitation_momentum_hat(&ground, &excited);
        let (d2, spread) = match factorized_product(&ground, &excited, &config.contour) {
            Ok(parts) => (2.0 * parts.s_n, Some(parts.pivot_spread)),
            // kernel poles reach the real axis at zeta = pi/2
            Err(Error::ContourSingularity(_)) => (zz_second_derivative(&ground, &excited)?, None),
            Err(e) => return Err(e),
        };
        (2.0 * (0.5 * p_hat).sin().powi(2) / (PI * PI) * d2, spread)
    } else {
        let r = finite_product(&ground, &excited)?;
        (r.s_n, Some(r.diagnostics.pivot_spread))
    };
    let shift = sampled_shift(grid, sc, alpha, &excitation)?;
    let (prediction, theta, p_ex) = if shift.values.iter().all(|v| (v - v.round()).abs() < 1e-10) {
        let (mu_p, mu_h) = excitation.rapidities(grid.q);
        (None, predicted_exponent(grid, sc, alpha, &excitation)?, grid.excitation_momentum(alpha, &mu_p, &mu_h))
    } else if alpha == 0.0 {
        let fp = predict_form_factor(grid, sc, 0.0, &excitation, &config.amplitude)?;
        (Some(fp.assembled(0, m).re), fp.theta, fp.p_ex)
    } else {
        let sp = predict_scalar_product(grid, sc, alpha, &excitation, &config.amplitude)?;
        (Some(sp.s_n(m)), sp.theta, sp.p_ex)
    };
    let mt = (m as f64).powf(theta);
    let record = ScalingRecord {
        m,
        n,
        alpha,
        s_n,
        prediction,
        theta_pred: theta,
        p_ex,
        ratio: prediction.map(|p| s_n / p),
        scaled: mt * s_n,
        pivot_spread,
    };
    if [record.s_n, record.prediction.unwrap_or(0.0), record.theta_pred, record.p_ex].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scaling record"));
    }
    Ok(record)
}

/// Finite values and predictions for every `(M, alpha)`, plus one power-law fit per twist.
pub fn run_scaling_study(config: &StudyConfig) -> Result<ScalingStudy> {
    config.validate()?;
    if config.sizes.len() < MIN_FIT_SIZES {
        return Err(Error::FitIllConditioned(config.sizes.len()));
    }
    let grid = build_thermo_with_order(config.zeta, config.d, config.thermo_order)?;
    let per_size: Vec<Vec<ScalingRecord>> = config
        .sizes
        .par_iter()
        .map(|&m| config.alphas.iter().map(|&a| scaling_record(config, &grid, m, a)).collect())
        .collect::<Result<_>>()?;
    let records = sorted(per_size.into_iter().flatten().collect());
    let mut fits = Vec::with_capacity(config.alphas.len());
    for &alpha in &config.alphas {
        let rows: Vec<&ScalingRecord> = records.iter().filter(|r| r.alpha == alpha).collect();
        let sizes: Vec<usize> = rows.iter().map(|r| r.m).collect();
        let values: Vec<f64> = rows.iter().map(|r| r.s_n).collect();
        let fit = fit_power_law(&sizes, &values, config.fit_correction)?;
        let last = rows.last().expect("sizes checked non-empty");
        let predicted_amplitude = last.prediction.map(|p| p * (last.m as f64).powf(last.theta_pred));
        fits.push(AlphaSummary {
            alpha,
            theta_pred: last.theta_pred,
            fit,
            predicted_amplitude,
            amplitude_ratio: predicted_amplitude.map(|a| last.scaled / a),
        });
    }
    Ok(ScalingStudy { config: config.clone(), records, fits })
}

fn sorted(mut records: Vec<ScalingRecord>) -> Vec<ScalingRecord> {
    records.sort_by(|a, b| a.m.cmp(&b.m).then(a.alpha.total_cmp(&b.alpha)));
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn write_csv<W: Write>(records: &[ScalingRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in sorted(records.to_vec()) {
        w.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.alpha.to_string(),
            r.s_n.to_string(),
            r.prediction.map(|p| p.to_string()).unwrap_or_default(),
            r.theta_pred.to_string(),
            r.p_ex.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Writes the records, ordered by `M`, to `path`.
pub fn emit(records: &[ScalingRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(records, file),
        ReportFormat::Json => write_json(&sorted(records.to_vec()), file),
    }
}

pub fn read_json_records(path: &Path) -> Result<Vec<ScalingRecord>> {
    Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
}
