//! End-to-end tests of the `qsna` binary and its exit-code contract:
//! 0 success / no-arbitrage holds, 1 domain-negative, 2 input error.

use std::path::Path;
use std::process::{Command, Output};

fn qsna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsna"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

const BALANCED: &str = r#"{
    "horizon": 1,
    "asset_dim": 1,
    "alphabets": [["up", "down"]],
    "prices": {"": ["0/1"], "up": ["1/1"], "down": ["-1/1"]},
    "priors": {"": [["1/2", "1/2"]]}
}"#;

const ONE_SIDED: &str = r#"{
    "horizon": 1,
    "asset_dim": 1,
    "alphabets": [["up", "down"]],
    "prices": {"": ["0/1"], "up": ["1/1"], "down": ["2/1"]},
    "priors": {"": [["1/2", "1/2"]]}
}"#;

#[test]
fn validate_accepts_well_formed_instance() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ok.json", BALANCED);
    let out = qsna(&["validate", "--input", &input]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("valid"));
}

#[test]
fn validate_reports_missing_price_with_node_key() {
    let dir = tempfile::tempdir().unwrap();
    let broken = BALANCED.replace("\"up\": [\"1/1\"], ", "");
    let input = write(dir.path(), "broken.json", &broken);
    let out = qsna(&["validate", "--input", &input]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("up") && text.contains("price absent"), "{text}");
}

#[test]
fn validate_rejects_float_rationals_as_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = BALANCED.replace("\"1/2\", \"1/2\"", "\"0.5\", \"1/2\"");
    let input = write(dir.path(), "float.json", &bad);
    let out = qsna(&["validate", "--input", &input]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("floats are rejected"));
}

#[test]
fn validate_missing_file_is_input_error() {
    let out = qsna(&["validate", "--input", "/nonexistent/instance.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn check_na_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", BALANCED);
    let out = qsna(&["check-na", "--input", &good]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("\"global_na\": true"));

    let bad = write(dir.path(), "bad.json", ONE_SIDED);
    let out = qsna(&["check-na", "--input", &bad]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("\"global_na\": false"));
    assert!(text.contains("\"witness\""), "{text}");
}

#[test]
fn find_arbitrage_round_trips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", ONE_SIDED);
    let witness_path = dir.path().join("witness.json");
    let out = qsna(&[
        "find-arbitrage",
        "--input",
        &input,
        "--output",
        witness_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = std::fs::read_to_string(&witness_path).unwrap();
    assert!(text.contains("\"1/1\""));

    let out = qsna(&[
        "verify-witness",
        "--input",
        &input,
        "--witness",
        witness_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("witness verified"));
}

#[test]
fn find_arbitrage_on_arbitrage_free_instance_is_negative() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "good.json", BALANCED);
    let out = qsna(&["find-arbitrage", "--input", &input]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no arbitrage exists"));
}

#[test]
fn verify_witness_rejects_flipped_sign() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", ONE_SIDED);
    let witness_path = dir.path().join("witness.json");
    qsna(&["find-arbitrage", "--input", &input, "--output", witness_path.to_str().unwrap()]);
    let flipped = std::fs::read_to_string(&witness_path)
        .unwrap()
        .replace("\"1/1\"", "\"-1/1\"");
    let bad_witness = write(dir.path(), "flipped.json", &flipped);
    let out = qsna(&["verify-witness", "--input", &input, "--witness", &bad_witness]);
    assert_eq!(code(&out), 1, "{out:?}");
}

#[test]
fn verify_witness_rejects_mismatched_instance() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", ONE_SIDED);
    let witness_path = dir.path().join("witness.json");
    qsna(&["find-arbitrage", "--input", &bad, "--output", witness_path.to_str().unwrap()]);

    // different alphabet: the witness addresses nodes this tree lacks
    let other = BALANCED.replace("up", "hi").replace("down", "lo");
    let other = write(dir.path(), "other.json", &other);
    let out = qsna(&["verify-witness", "--input", &other, "--witness", witness_path.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{out:?}");
}

#[test]
fn construct_pstar_is_idempotent_and_tracks_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", BALANCED);
    let cert_a = dir.path().join("a.json");
    let cert_b = dir.path().join("b.json");
    let out = qsna(&["construct-pstar", "--input", &good, "--output", cert_a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{out:?}");
    let out = qsna(&["construct-pstar", "--input", &good, "--output", cert_b.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        std::fs::read_to_string(&cert_a).unwrap(),
        std::fs::read_to_string(&cert_b).unwrap()
    );

    let bad = write(dir.path(), "bad.json", ONE_SIDED);
    let out = qsna(&["construct-pstar", "--input", &bad]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["valid"], serde_json::Value::Bool(false));
}

#[test]
fn gen_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&qsna(&["gen", "--seed", "5", "--output", a.to_str().unwrap()])), 0);
    assert_eq!(code(&qsna(&["gen", "--seed", "5", "--output", b.to_str().unwrap()])), 0);
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap()
    );
    assert_eq!(code(&qsna(&["validate", "--input", a.to_str().unwrap()])), 0);
}

#[test]
fn gen_forced_arbitrage_fails_check_na() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("forced.json");
    let out = qsna(&[
        "gen",
        "--seed",
        "12",
        "--force-arbitrage",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = qsna(&["check-na", "--input", path.to_str().unwrap(), "--format", "text"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAILS"));
}

#[test]
fn harness_small_run_is_clean_and_deterministic() {
    let out = qsna(&["harness", "--seed", "3", "--instances", "5", "--format", "json"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let again = qsna(&["harness", "--seed", "3", "--instances", "5", "--format", "json"]);
    assert_eq!(stdout(&out), stdout(&again));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["instances"], serde_json::json!(5));
}

#[test]
fn usage_errors_exit_2() {
    let out = qsna(&["no-such-command"]);
    assert_eq!(code(&out), 2);
    let out = qsna(&["gen", "--periods", "0"]);
    assert_eq!(code(&out), 2);
}
