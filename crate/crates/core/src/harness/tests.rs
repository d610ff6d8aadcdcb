use super::cli::{dispatch, EXIT_OK, EXIT_VALIDATION};
use super::*;
use crate::bethe::PrClass;
use crate::error::Error;
use crate::finite_ff::ProductChannel;
use std::f64::consts::PI;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = dispatch(std::iter::once("xxzff").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn record(m: usize, alpha: f64) -> ScalingRecord {
    ScalingRecord {
        m,
        n: m / 4,
        alpha,
        s_n: 1.0 / m as f64,
        prediction: Some(1.01 / m as f64),
        theta_pred: 1.0,
        p_ex: 0.5,
        ratio: Some(1.0 / 1.01),
        scaled: 1.0,
        pivot_spread: None,
    }
}

fn config() -> StudyConfig {
    serde_json::from_str(
        r#"{"zeta": 1.0471975511965976, "D": 0.25, "channel": "pm",
            "excitation": {"kind": "class", "r": 0}, "M": [16, 24, 32, 40]}"#,
    )
    .unwrap()
}

#[test]
fn fit_recovers_exact_power_law() {
    let sizes = [64, 128, 256, 512, 1024, 2048];
    let values: Vec<f64> = sizes.iter().map(|&m| 7.0 * (m as f64).powi(-2)).collect();
    for corr in [false, true] {
        let fit = fit_power_law(&sizes, &values, corr).unwrap();
        assert!((fit.theta - 2.0).abs() < 1e-10, "{fit:?}");
        assert!((fit.amplitude - 7.0).abs() < 1e-9, "{fit:?}");
    }
}

#[test]
fn fit_absorbs_log_correction() {
    let sizes = [64, 128, 256, 512, 1024, 2048];
    let values: Vec<f64> = sizes
        .iter()
        .map(|&m| {
            let m = m as f64;
            7.0 * m.powi(-2) * (1.0 + m.ln() / m)
        })
        .collect();
    let with = fit_power_law(&sizes, &values, true).unwrap();
    let without = fit_power_law(&sizes, &values, false).unwrap();
    assert!((with.theta - 2.0).abs() < 1e-3, "{with:?}");
    assert!((with.theta - 2.0).abs() < (without.theta - 2.0).abs());
}

#[test]
fn fit_rejects_short_or_bad_input() {
    assert!(matches!(fit_power_law(&[8, 16, 32], &[1.0, 0.5, 0.25], true), Err(Error::FitIllConditioned(3))));
    assert!(fit_power_law(&[8, 16, 32, 64], &[1.0, 0.0, 0.25, 0.1], true).is_err());
}

#[test]
fn csv_header_and_rows() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "M,N,alpha,S_N,prediction,theta_pred,P_ex\n");
    let recs = vec![record(32, 0.0), record(16, 0.0), record(64, 0.0)];
    let mut buf = Vec::new();
    write_csv(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + recs.len());
    assert!(lines[1].starts_with("16,4,"));
    assert!(lines[3].starts_with("64,16,"));
}

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.json");
    let recs = vec![record(16, 0.0), record(32, 0.1)];
    emit(&recs, ReportFormat::Json, &path).unwrap();
    assert_eq!(read_json_records(&path).unwrap(), recs);
}

#[test]
fn config_validation() {
    let good = config();
    good.validate().unwrap();
    let mut c = good.clone();
    c.sizes = vec![16, 16, 32, 40];
    assert!(c.validate().is_err());
    c.sizes = vec![16, 25, 32, 40];
    assert!(c.validate().is_err());
    c.sizes = vec![16, 18, 32, 40];
    assert!(matches!(c.validate(), Err(Error::InvalidParams(_))), "D M not integral");
    let mut c = good.clone();
    c.channel = ProductChannel::Zz;
    assert!(matches!(c.validate(), Err(Error::InvalidSpec(_))));
    let mut c = good;
    c.sizes = vec![16, 24, 32];
    assert!(matches!(run_scaling_study(&c), Err(Error::FitIllConditioned(3))));
}

#[test]
fn study_is_deterministic() {
    let mut c = config();
    c.excitation = StudyExcitation::Class(PrClass { r: 1, p_plus: vec![1], h_minus: vec![1], ..Default::default() });
    c.channel = ProductChannel::Zz;
    let a = run_scaling_study(&c).unwrap();
    let b = run_scaling_study(&c).unwrap();
    let text = |s: &ScalingStudy| serde_json::to_string(s).unwrap();
    assert_eq!(text(&a), text(&b));
    assert_eq!(a.records.len(), 4);
    for r in &a.records {
        assert!(r.s_n >= 0.0 && r.s_n.is_finite());
    }
}

#[test]
fn oracle_small_chain() {
    let r = run_oracle(8, PI / 3.0, 2, ProductChannel::Zz, ORACLE_TOLERANCE, ORACLE_PHASE_TOLERANCE).unwrap();
    assert!(r.passed() && !r.matched.is_empty(), "{r:?}");
}

#[test]
fn cli_thermo_and_errors() {
    let (code, out, _) = run_cli(&["thermo", "--zeta", "1.0472", "--density", "0.25"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["q", "Z_q", "k_F"] {
        assert!(v[key].is_f64(), "{key}");
    }
    let (code, _, err) = run_cli(&["thermo", "--zeta", "1.0472", "--density", "0.25", "--bogus"]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("Usage"), "{err}");
    let (code, _, _) = run_cli(&["thermo", "--zeta", "1.0472", "--density", "0.7"]);
    assert_eq!(code, EXIT_VALIDATION);
    let (code, out, _) = run_cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("oracle"));
}

#[test]
fn cli_oracle_and_ff() {
    let (code, out, _) = run_cli(&["oracle", "--M", "8", "--zeta", "1.0472", "--N", "2", "--channel", "zz"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out, _) =
        run_cli(&["ff", "--zeta", "1.0472", "--M", "16", "--N", "4", "--channel", "pm", "--holes", "5", "--particles", "6"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["ff_product"].as_f64().unwrap() > 0.0);
}
