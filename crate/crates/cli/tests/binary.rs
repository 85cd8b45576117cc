//! Exit-code contract of the installed binary.

use std::process::Command;

fn mpoc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpoc"))
}

#[test]
fn oracle_check_exits_zero_on_defaults() {
    let out = mpoc().arg("oracle-check").output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_config_exits_two_with_named_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"outpt_dir\": \"x\"}").unwrap();
    let out = mpoc()
        .args(["--config", path.to_str().unwrap(), "oracle-check"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outpt_dir"));
}

#[test]
fn degenerate_identification_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("degenerate.json");
    std::fs::write(
        &path,
        "{\"dgp\": {\"gamma0\": {\"form\": \"poly\", \"c0\": 5e-13, \"c1\": 0.0, \"c2\": 0.0},\
          \"gamma1_tilde\": {\"form\": \"poly\", \"c0\": 1e-13, \"c1\": 0.0, \"c2\": 0.0}}}",
    )
    .unwrap();
    let out = mpoc()
        .args(["--config", path.to_str().unwrap(), "oracle-check"])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_data_file_exits_two() {
    let out = mpoc()
        .args(["estimate", "--data", "/nonexistent/data.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn print_config_emits_valid_json() {
    let out = mpoc()
        .args(["--print-config", "oracle-check"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["grid_points"], 201);
}
