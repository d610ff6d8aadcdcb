use std::process::Command;

fn xxzff(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_xxzff")).args(args).output().unwrap()
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = xxzff(&["thermo", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_density_is_validation_error() {
    let out = xxzff(&["thermo", "--zeta", "1.0", "--density", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_passes_on_small_chain() {
    let out = xxzff(&["oracle", "--zeta", "1.0471975511965976", "--M", "8", "--N", "2", "--channel", "zz"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
}
