use std::process::{Command, Output};

use serde_json::Value;

fn kdent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn kd_dist_bell_table() {
    let out = kdent(&["kd-dist", "--builtin", "bell", "--basis-a", "computational", "--basis-y", "computational"]);
    let v = report(&out);
    assert_eq!(v["nonreality"], 0.0);
    let halves = v["table"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|row| row["re"] == 0.5 && row["im"] == 0.0)
        .count();
    assert_eq!(halves, 2);
}

#[test]
fn kd_dist_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kd.csv");
    let out = kdent(&["kd-dist", "--builtin", "bell", "--out", path.to_str().unwrap()]);
    report(&out);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,re,im"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn kd_dist_bad_dims_in_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    std::fs::write(
        &path,
        r#"{"dims": [2, 3], "kind": "pure", "data": [[1, 0], [0, 0], [0, 0], [0, 0]]}"#,
    )
    .unwrap();
    let out = kdent(&["kd-dist", "--state", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dims"), "{}", stderr(&out));
}

#[test]
fn kd_dist_singular_reconstruction() {
    let out = kdent(&["kd-dist", "--builtin", "bell", "--reconstruct"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn kd_dist_reconstruction_round_trip() {
    let out = kdent(&[
        "kd-dist", "--builtin", "random-mixed:3:5", "--basis-a", "fourier", "--basis-b", "fourier",
        "--basis-y", "computational", "--reconstruct",
    ]);
    let v = report(&out);
    assert!(v["reconstruction_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn pure_bell() {
    let v = report(&kdent(&["pure", "--builtin", "bell"]));
    assert_eq!(v["value"], 1.0);
    assert_eq!(v["schmidt_rank"], 2);
}

#[test]
fn pure_on_density_file() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = dir.path().join("mixed.json");
    std::fs::write(
        &mixed,
        r#"{"dims": [2, 2], "kind": "density", "data": [
            [[0.5, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [0.5, 0]]]}"#,
    )
    .unwrap();
    assert_eq!(code(&kdent(&["pure", "--state", mixed.to_str().unwrap()])), 2);
    let projector = dir.path().join("bell.json");
    std::fs::write(
        &projector,
        r#"{"dims": [2, 2], "kind": "density", "data": [
            [[0.5, 0], [0, 0], [0, 0], [0.5, 0]],
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]]}"#,
    )
    .unwrap();
    let v = report(&kdent(&["pure", "--state", projector.to_str().unwrap()]));
    assert_eq!(v["value"], 1.0);
}

#[test]
fn mixed_werner_half() {
    let v = report(&kdent(&["mixed", "--builtin", "werner:0.5", "--restarts", "8", "--terms", "4"]));
    assert!((v["normalized"].as_f64().unwrap() - 0.25).abs() <= 2e-3, "{v}");
}

#[test]
fn bounds_maximally_mixed() {
    let v = report(&kdent(&["bounds", "--builtin", "werner:0.0", "--restarts", "2"]));
    assert!(v["bounds"]["lower"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["bounds"]["upper"], 1.0);
}

#[test]
fn verify_suites() {
    let v = report(&kdent(&["verify", "--suite", "prop2", "--seed", "7"]));
    assert_eq!(v["passed"], true);
    assert!(v["suites"][0]["max_deviation"].as_f64().unwrap() <= 1e-4);
    assert_eq!(report(&kdent(&["verify", "--suite", "lemma1"]))["passed"], true);
}

#[test]
fn verify_rejects_large_dims() {
    let out = kdent(&["verify", "--suite", "all", "--dims", "5x5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dims"));
}

#[test]
fn verify_rejects_unknown_suite() {
    assert_eq!(code(&kdent(&["verify", "--suite", "prop9"])), 2);
}

#[test]
fn weak_sim_bell_and_product() {
    let v = report(&kdent(&["weak-sim", "--builtin", "bell"]));
    assert!((v["estimate"].as_f64().unwrap() - 1.0).abs() <= 0.02);
    let v = report(&kdent(&["weak-sim", "--builtin", "product"]));
    assert!(v["estimate"].as_f64().unwrap().abs() <= 0.02);
}

#[test]
fn weak_sim_input_errors() {
    assert_eq!(code(&kdent(&["weak-sim", "--builtin", "bell", "--shots", "10"])), 2);
    assert_eq!(code(&kdent(&["weak-sim", "--builtin", "werner:0.5"])), 2);
}

#[test]
fn weak_sim_records_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shots.csv");
    report(&kdent(&["weak-sim", "--builtin", "bell", "--shots", "1000", "--out", path.to_str().unwrap()]));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("preparation,basis,outcome,count"));
    let total: u64 = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 2 * 1000);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&kdent(&["pure"])), 2);
    assert_eq!(code(&kdent(&["pure", "--builtin", "bell", "--state", "x.json"])), 2);
    assert_eq!(code(&kdent(&["pure", "--builtin", "nonsense"])), 2);
    assert_eq!(code(&kdent(&["frobnicate"])), 2);
    assert_eq!(code(&kdent(&["kd-dist", "--builtin", "bell", "--basis-a", "no-such-file.json"])), 2);
    assert_eq!(code(&kdent(&["mixed", "--builtin", "bell", "--tol", "0"])), 2);
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["mixed", "--builtin", "random-mixed:2:3", "--restarts", "2", "--seed", "11"][..],
        &["weak-sim", "--builtin", "random-pure:4", "--shots", "5000", "--seed", "3"][..],
        &["kd-dist", "--builtin", "random-pure:9", "--basis-a", "random:1", "--basis-y", "random:2", "--format", "csv"][..],
    ] {
        let a = kdent(args);
        let b = kdent(args);
        assert_eq!(code(&a), 0, "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout);
    }
}
