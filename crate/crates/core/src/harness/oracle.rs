use std::f64::consts::PI;

use crate::bethe::{enumerate_single_pairs, solve_bethe_state, ExcitationSpec};
use crate::ed::{build_and_diagonalize, local_matrix_elements, oracle_compare, BetheValue, Operator, OracleReport};
use crate::error::Result;
use crate::finite_ff::{excitation_momentum_hat, finite_product, zz_second_derivative, ProductChannel};
use crate::linalg::wrap_phase;
use crate::model::ModelParams;

pub const ORACLE_TOLERANCE: f64 = 1e-9;
pub const ORACLE_PHASE_TOLERANCE: f64 = 1e-8;

/// Determinant-side `|F|` and per-site phase at zero twist for the 0- and 1-pair states of a channel.
///
/// The zz ground-to-ground element is not included: its twist-derivative form vanishes identically.
pub fn bethe_form_factors(m: usize, zeta: f64, n: usize, channel: ProductChannel) -> Result<Vec<BetheValue>> {
    let params = ModelParams::new(zeta, m, n, 0.0)?;
    let ground = solve_bethe_state(&params, None)?;
    let sc = channel.state_channel();
    let mut specs = Vec::new();
    if channel == ProductChannel::Pm {
        specs.push(ExcitationSpec::ground(sc));
    }
    specs.extend(enumerate_single_pairs(&params, sc));
    specs
        .iter()
        .map(|spec| {
            let excited = solve_bethe_state(&params, Some(spec))?;
            let p = excitation_momentum_hat(&ground, &excited);
            let (product, step) = match channel {
                ProductChannel::Zz => {
                    let d2 = zz_second_derivative(&ground, &excited)?;
                    (2.0 * (0.5 * p).sin().powi(2) / (PI * PI) * d2, p)
                }
                ProductChannel::Pm => (finite_product(&ground, &excited)?.s_n, p + PI),
            };
            Ok(BetheValue {
                label: format!("ells={:?}", excited.ells),
                magnitude: product.sqrt(),
                phase_step: wrap_phase(step),
            })
        })
        .collect()
}

/// Bethe form factors of one channel against ED elements out of the ground state of sector `n`.
pub fn run_oracle(
    m: usize,
    zeta: f64,
    n: usize,
    channel: ProductChannel,
    tolerance: f64,
    phase_tolerance: f64,
) -> Result<OracleReport> {
    let bethe = bethe_form_factors(m, zeta, n, channel)?;
    let delta = zeta.cos();
    let from = build_and_diagonalize(m, delta, 0.0, n)?;
    let ed = match channel {
        ProductChannel::Zz => local_matrix_elements(&from, &from, Operator::Z)?,
        ProductChannel::Pm => {
            let to = build_and_diagonalize(m, delta, 0.0, n + 1)?;
            local_matrix_elements(&from, &to, Operator::Minus)?
        }
    };
    Ok(oracle_compare(&bethe, &ed, tolerance, phase_tolerance))
}
