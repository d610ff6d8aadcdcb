//! Property tests for the structural invariants of each module.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use xxz_ff::asymptotic::{exponent, predicted_exponent, sampled_shift, Excitation};
use xxz_ff::bethe::{solve_bethe_state, Channel, ExcitationSpec, PrClass};
use xxz_ff::ed::build_and_diagonalize;
use xxz_ff::finite_ff::{finite_product, slavnov_scalar_product, ProductChannel};
use xxz_ff::harness::{read_json_records, emit, write_csv, ReportFormat, ScalingRecord, StudyConfig, StudyExcitation};
use xxz_ff::linalg::{wrap_phase, LogComplex};
use xxz_ff::model::{kernel, p0, p0_prime, theta, ModelParams, C64};
use xxz_ff::thermo::{build_thermo, build_thermo_with_order, DEFAULT_ORDER};

fn canonical_class(r: i64) -> PrClass {
    let k: Vec<i64> = (1..=r.abs()).collect();
    if r >= 0 {
        PrClass { r, p_plus: k.clone(), h_minus: k, ..Default::default() }
    } else {
        PrClass { r, p_minus: k.clone(), h_plus: k, ..Default::default() }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bare_functions_symmetric(l in -10.0f64..10.0, zeta in 0.1f64..3.0) {
        prop_assert!((p0(-l, zeta) + p0(l, zeta)).abs() <= 1e-12);
        prop_assert!((theta(-l, zeta) + theta(l, zeta)).abs() <= 1e-12);
        prop_assert!((kernel(-l, zeta) - kernel(l, zeta)).abs() <= 1e-12 * (1.0 + kernel(l, zeta).abs()));
        prop_assert!(p0_prime(l, zeta) > 0.0);
    }

    #[test]
    fn phase_normalized_and_products_add(a in -50.0f64..50.0, b in -50.0f64..50.0, la in -5.0f64..5.0, lb in -5.0f64..5.0) {
        let w = wrap_phase(a);
        prop_assert!(w > -PI && w <= PI);
        let x = LogComplex::new(la, a);
        let y = LogComplex::new(lb, b);
        let p = x * y;
        prop_assert!((p.log_mag - (la + lb)).abs() < 1e-12);
        prop_assert!(wrap_phase(p.phase - a - b).abs() < 1e-9);
        let z = (x.to_complex() * y.to_complex() - p.to_complex()).norm() / p.to_complex().norm();
        prop_assert!(z < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn labels_recover_roots(zeta in 0.3f64..2.8, half in 4usize..9, frac in 0.1f64..0.45, alpha in -0.3f64..0.3, hole in 0usize..4) {
        let m = 2 * half;
        let n = ((frac * m as f64) as usize).max(2);
        let p = ModelParams::new(zeta, m, n, alpha).unwrap();
        let spec = ExcitationSpec::particle_hole(Channel::Z, vec![1 + (hole % n) as i64], vec![n as i64 + 1]);
        if let Ok(state) = solve_bethe_state(&p, Some(&spec)) {
            for (&l, &x) in state.ells.iter().zip(&state.roots) {
                prop_assert!((state.counting_root(l).unwrap() - x).abs() <= 1e-10);
            }
            let again = solve_bethe_state(&p, Some(&spec)).unwrap();
            prop_assert_eq!(again.roots.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                            state.roots.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn twist_by_integer_is_umklapp_class(zeta in 0.4f64..2.7, alpha in -0.3f64..0.3, r in -1i64..=1, plus in any::<bool>()) {
        let channel = if plus { Channel::Plus } else { Channel::Z };
        let p = ModelParams::new(zeta, 24, 6, alpha).unwrap();
        let shifted = solve_bethe_state(&p.with_alpha(alpha + r as f64), Some(&ExcitationSpec::ground(channel)));
        let class = solve_bethe_state(&p, Some(&ExcitationSpec::from_pr(channel, canonical_class(r))));
        if let (Ok(a), Ok(b)) = (shifted, class) {
            for (x, y) in a.roots.iter().zip(&b.roots) {
                prop_assert!((x - y).abs() <= 1e-10, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn zz_products_are_real_and_nonnegative(zeta in 0.3f64..2.8, alpha in -0.4f64..0.4, hole in 1i64..5) {
        let p = ModelParams::new(zeta, 16, 4, 0.0).unwrap();
        let g = solve_bethe_state(&p, None).unwrap();
        let spec = ExcitationSpec::particle_hole(Channel::Z, vec![hole], vec![5]);
        if let Ok(e) = solve_bethe_state(&p.with_alpha(alpha), Some(&spec)) {
            let s = slavnov_scalar_product(&e, &g, Channel::Z).unwrap();
            prop_assert!(s.phase.sin().abs() <= 1e-10);
            prop_assert!(finite_product(&g, &e).unwrap().s_n >= 0.0);
        }
    }

    #[test]
    fn critical_exponent_from_boundary(zeta in 0.4f64..2.7, d in 0.1f64..0.4, alpha in -0.4f64..0.4, r in -2i64..=2, plus in any::<bool>()) {
        let channel = if plus { Channel::Plus } else { Channel::Z };
        let grid = build_thermo(zeta, d).unwrap();
        let ex = Excitation::Critical(canonical_class(r));
        let theta = predicted_exponent(&grid, channel, alpha, &ex).unwrap();
        let (fp, fm) = sampled_shift(&grid, channel, alpha, &ex).unwrap().boundary();
        let rf = r as f64;
        prop_assert!((theta - exponent(channel, 0, fp + rf, fm + rf, true)).abs() <= 1e-10);
        let z = grid.dressed_charge(grid.q);
        let a = (alpha + rf) * z;
        let expect = match channel {
            Channel::Z => 2.0 * a * a,
            Channel::Plus => (a + 0.5 / z).powi(2) + (a - 0.5 / z).powi(2),
        };
        prop_assert!((theta - expect).abs() <= 1e-7, "{theta} vs {expect}");
    }

    #[test]
    fn plus_shift_is_shifted_z_shift(zeta in 0.4f64..2.7, d in 0.1f64..0.4, alpha in -0.4f64..0.4, mu in -1.0f64..1.0) {
        let grid = build_thermo(zeta, d).unwrap();
        let fp = grid.shift_function_limit(Channel::Plus, alpha, &[], &[]).unwrap();
        let fz = grid.shift_function_limit(Channel::Z, alpha - 0.5, &[], &[]).unwrap();
        let phi = grid.dressed_phase(grid.q).unwrap();
        prop_assert!((fp.eval(mu) - fz.eval(mu) - phi.eval(mu)).abs() <= 1e-12);
        prop_assert!((grid.dressed_momentum(-mu) + grid.dressed_momentum(mu)).abs() <= 1e-10);
    }

    #[test]
    fn ed_spectrum_independent_of_basis_order(m in 3usize..9, frac in 0.0f64..1.0, delta in -0.99f64..0.99, field in -1.0f64..1.0, seed in any::<u64>()) {
        let n = ((frac * m as f64) as usize).min(m);
        let sector = build_and_diagonalize(m, delta, field, n).unwrap();
        let dim = sector.dimension();
        prop_assert_eq!(dim, binomial(m, n));
        // a seeded permutation of the configuration basis
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut s = seed | 1;
        for i in (1..dim).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            perm.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (col, &j) in perm.iter().enumerate() {
            let mut e = nalgebra::DVector::<C64>::zeros(dim);
            e[j] = C64::new(1.0, 0.0);
            let he = sector.apply_hamiltonian(&e);
            for (row, &i) in perm.iter().enumerate() {
                h[(row, col)] = he[i].re;
            }
        }
        let mut dense: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let mut blocks: Vec<f64> = sector.levels().iter().map(|l| l.energy).collect();
        blocks.sort_by(f64::total_cmp);
        prop_assert_eq!(dense.len(), blocks.len());
        for (a, b) in dense.iter().zip(&blocks) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn study_config_rules(sizes in proptest::collection::vec(2usize..200, 1..6)) {
        let mut cfg: StudyConfig = serde_json::from_str(
            r#"{"zeta": 1.0, "D": 0.25, "channel": "pm", "excitation": {"kind": "class", "r": 0}, "M": [8]}"#,
        ).unwrap();
        cfg.sizes = sizes.clone();
        let valid = sizes.windows(2).all(|w| w[1] > w[0]) && sizes.iter().all(|m| m % 4 == 0);
        prop_assert_eq!(cfg.validate().is_ok(), valid);
        prop_assert!(matches!(cfg.excitation, StudyExcitation::Class(_)));
    }

    #[test]
    fn records_round_trip(rows in proptest::collection::vec((1usize..500, -0.5f64..0.5, 1e-12f64..1.0, proptest::option::of(1e-12f64..1.0), -4.0f64..4.0), 0..12)) {
        let recs: Vec<ScalingRecord> = rows.iter().enumerate().map(|(k, &(m, alpha, s, pred, p))| ScalingRecord {
            m: 2 * m + k, n: m / 2, alpha, s_n: s, prediction: pred, theta_pred: 1.5, p_ex: p,
            ratio: pred.map(|x| s / x), scaled: s, pivot_spread: Some(0.1),
        }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit(&recs, ReportFormat::Json, &path).unwrap();
        let mut sorted = recs.clone();
        sorted.sort_by(|a, b| a.m.cmp(&b.m).then(a.alpha.total_cmp(&b.alpha)));
        prop_assert_eq!(read_json_records(&path).unwrap(), sorted);
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        prop_assert_eq!(String::from_utf8(buf).unwrap().lines().count(), recs.len() + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn nystrom_converged(zeta in 0.4f64..2.7, d in 0.1f64..0.4) {
        let a = build_thermo_with_order(zeta, d, DEFAULT_ORDER).unwrap();
        let b = build_thermo_with_order(zeta, d, 2 * DEFAULT_ORDER).unwrap();
        let pa = a.dressed_phase(0.3).unwrap();
        let pb = b.dressed_phase(0.3).unwrap();
        for k in 0..=40 {
            let l = -a.q + 2.0 * a.q * k as f64 / 40.0;
            prop_assert!((a.density(l) - b.density(l)).abs() <= 1e-9);
            prop_assert!((a.dressed_charge(l) - b.dressed_charge(l)).abs() <= 1e-9);
            prop_assert!((pa.eval(l) - pb.eval(l)).abs() <= 1e-9);
        }
    }
}

fn binomial(m: usize, n: usize) -> usize {
    (0..n).fold(1, |acc, k| acc * (m - k) / (k + 1))
}

#[test]
fn pm_channel_name_round_trips() {
    let c: ProductChannel = serde_json::from_str("\"pm\"").unwrap();
    assert_eq!(c, ProductChannel::Pm);
}
