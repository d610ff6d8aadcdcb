//! Argument parsing and dispatch for the `xxzff` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use super::study::{emit, run_scaling_study, write_json, ReportFormat, StudyConfig};
use super::{run_oracle, ORACLE_PHASE_TOLERANCE, ORACLE_TOLERANCE};
use crate::asymptotic::{check_margin, predict_form_factor, AmplitudeConfig, Excitation};
use crate::bethe::{solve_bethe_state, ExcitationSpec, PrClass};
use crate::error::{Error, Result};
use crate::finite_ff::{factorized_second_derivative, finite_product, ContourConfig, ProductChannel};
use crate::model::ModelParams;
use crate::thermo::{build_thermo_with_order, DEFAULT_ORDER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "xxzff", version, about = "Form factors of the XXZ chain: finite size, asymptotics and ED checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    Zz,
    Pm,
}

impl From<ChannelArg> for ProductChannel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Zz => ProductChannel::Zz,
            ChannelArg::Pm => ProductChannel::Pm,
        }
    }
}

#[derive(Debug, Args)]
struct ChainArgs {
    #[arg(long)]
    zeta: f64,
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "N")]
    n: usize,
}

#[derive(Debug, Args)]
struct ExcitationArgs {
    #[arg(long, value_enum, default_value = "zz")]
    channel: ChannelArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    /// Removed integers, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    holes: Vec<i64>,
    /// Added integers, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    particles: Vec<i64>,
    /// Edge class as JSON, e.g. '{"r":1,"p_plus":[1],"h_minus":[1]}'.
    #[arg(long, conflicts_with_all = ["holes", "particles"])]
    class: Option<String>,
}

impl ExcitationArgs {
    fn spec(&self) -> Result<ExcitationSpec> {
        let channel = ProductChannel::from(self.channel).state_channel();
        match &self.class {
            Some(text) => Ok(ExcitationSpec::from_pr(channel, parse_class(text)?)),
            None => Ok(ExcitationSpec::particle_hole(channel, self.holes.clone(), self.particles.clone())),
        }
    }
}

fn parse_class(text: &str) -> Result<PrClass> {
    let pr: PrClass = serde_json::from_str(text)?;
    pr.validate()?;
    Ok(pr)
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground-state roots of sector N.
    Ground(ChainArgs),
    /// Roots of an excited state.
    Excite {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        excitation: ExcitationArgs,
    },
    /// Fermi boundary, density and dressed charge at (zeta, D).
    Thermo {
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Include the node values of rho and Z.
        #[arg(long)]
        full: bool,
    },
    /// Finite-size scalar product, and the form-factor product at zero twist.
    Ff {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        excitation: ExcitationArgs,
    },
    /// Large-M prediction for an edge class or for macroscopic rapidities.
    Predict {
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        density: f64,
        #[arg(long, value_enum, default_value = "zz")]
        channel: ChannelArg,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, conflicts_with_all = ["mu_p", "mu_h"])]
        class: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mu_p: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mu_h: Vec<f64>,
        /// Also evaluate the prediction at this chain length.
        #[arg(long = "M")]
        m: Option<usize>,
    },
    /// Scaling study from a JSON config.
    Scale {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bethe form factors against exact diagonalization.
    Oracle {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value = "zz")]
        channel: ChannelArg,
        #[arg(long, default_value_t = ORACLE_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = ORACLE_PHASE_TOLERANCE)]
        phase_tolerance: f64,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_VALIDATION
                }
            };
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn print<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<i32> {
    write_json(value, out)?;
    Ok(EXIT_OK)
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Ground(c) => {
            let params = ModelParams::new(c.zeta, c.m, c.n, 0.0)?;
            print(out, &solve_bethe_state(&params, None)?)
        }
        Command::Excite { chain, excitation } => {
            let params = ModelParams::new(chain.zeta, chain.m, chain.n, excitation.alpha)?;
            print(out, &solve_bethe_state(&params, Some(&excitation.spec()?))?)
        }
        Command::Thermo { zeta, density, order, full } => {
            let grid = build_thermo_with_order(zeta, density, order)?;
            let mut v = json!({
                "zeta": grid.zeta,
                "D": grid.d,
                "order": order,
                "q": grid.q,
                "k_F": grid.k_f,
                "Z_q": grid.dressed_charge(grid.q),
                "rho_q": grid.density(grid.q),
            });
            if full {
                v["grid"] = serde_json::to_value(grid.export())?;
            }
            print(out, &v)
        }
        Command::Ff { chain, excitation } => {
            let params = ModelParams::new(chain.zeta, chain.m, chain.n, excitation.alpha)?;
            let ground = solve_bethe_state(&params, None)?;
            let excited = solve_bethe_state(&params, Some(&excitation.spec()?))?;
            let channel = ProductChannel::from(excitation.channel);
            let mut v = json!({ "ells": excited.ells });
            if channel == ProductChannel::Zz && excitation.alpha == 0.0 {
                let d2 = factorized_second_derivative(&ground, &excited, &ContourConfig::default())?;
                let p = crate::finite_ff::excitation_momentum_hat(&ground, &excited);
                v["P_ex_hat"] = json!(p);
                v["d2_S_N"] = json!(d2);
                v["ff_product"] = json!(2.0 * (0.5 * p).sin().powi(2) / (std::f64::consts::PI.powi(2)) * d2);
            } else {
                let r = finite_product(&ground, &excited)?;
                if excitation.alpha == 0.0 {
                    v["ff_product"] = json!(r.s_n);
                }
                v["result"] = serde_json::to_value(r)?;
            }
            print(out, &v)
        }
        Command::Predict { zeta, density, channel, alpha, class, mu_p, mu_h, m } => {
            let grid = build_thermo_with_order(zeta, density, DEFAULT_ORDER)?;
            let excitation = match class {
                Some(text) => Excitation::Critical(parse_class(&text)?),
                None => {
                    if mu_p.len() != mu_h.len() {
                        return Err(Error::InvalidSpec("mu_p and mu_h must have equal length".into()));
                    }
                    Excitation::Away { mu_p, mu_h }
                }
            };
            let channel = ProductChannel::from(channel).state_channel();
            let pred = predict_form_factor(&grid, channel, alpha, &excitation, &AmplitudeConfig::default())?;
            let mut v = serde_json::to_value(&pred)?;
            if let Some(m) = m {
                check_margin(&grid, &excitation, m)?;
                v["M"] = json!(m);
                v["value"] = json!(pred.assembled(0, m).re);
            }
            print(out, &v)
        }
        Command::Scale { config, json, csv } => {
            let mut cfg = StudyConfig::from_json_file(&config)?;
            cfg.output.json = json.or(cfg.output.json);
            cfg.output.csv = csv.or(cfg.output.csv);
            let study = run_scaling_study(&cfg)?;
            if let Some(p) = &cfg.output.json {
                emit(&study.records, ReportFormat::Json, p)?;
            }
            if let Some(p) = &cfg.output.csv {
                emit(&study.records, ReportFormat::Csv, p)?;
            }
            print(out, &study)
        }
        Command::Oracle { chain, channel, tolerance, phase_tolerance } => {
            let report = run_oracle(chain.m, chain.zeta, chain.n, channel.into(), tolerance, phase_tolerance)?;
            write_json(&report, &mut *out)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_NUMERIC })
        }
    }
}
