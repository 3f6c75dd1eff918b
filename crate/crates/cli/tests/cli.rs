//! End-to-end tests driving the built binary: exit-code contract, wire
//! formats, determinism, and the optimize/interact equality pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geomech"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn gen_restricted_writes_exact_rows() {
    let output = run(&["gen", "--n", "3", "--alpha", "1/4"]);
    assert_eq!(exit_code(&output), 0);
    let json = stdout_json(&output);
    assert_eq!(
        json["matrix"]["entries"][0],
        serde_json::json!(["4/5", "3/20", "3/80", "1/80"])
    );
}

#[test]
fn gen_endpoint_alpha_one() {
    let output = run(&["gen", "--n", "1", "--alpha", "1"]);
    assert_eq!(exit_code(&output), 0);
    let json = stdout_json(&output);
    assert_eq!(
        json["matrix"]["entries"],
        serde_json::json!([["1/2", "1/2"], ["1/2", "1/2"]])
    );
}

#[test]
fn gen_rejects_alpha_above_one() {
    let output = run(&["gen", "--n", "3", "--alpha", "2"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn gen_full_pmf_lists_masses() {
    let output = run(&["gen", "--alpha", "1/2", "--form", "full-pmf", "--bound", "2"]);
    assert_eq!(exit_code(&output), 0);
    let json = stdout_json(&output);
    let pmf = json["pmf"].as_array().unwrap();
    assert_eq!(pmf.len(), 5);
    assert_eq!(pmf[0], serde_json::json!({"z": -2, "p": "1/12"}));
    assert_eq!(pmf[2], serde_json::json!({"z": 0, "p": "1/3"}));
}

#[test]
fn check_dp_verdicts_and_exit_codes() {
    let non_derivable = fixture("non_derivable_half_dp.json");
    let ok = run(&["check", "dp", "--mechanism", non_derivable.to_str().unwrap(), "--alpha", "1/2"]);
    assert_eq!(exit_code(&ok), 0);
    assert_eq!(stdout_json(&ok)["verdict"], "ok");

    let identity = fixture("identity_n1.json");
    let bad = run(&["check", "dp", "--mechanism", identity.to_str().unwrap(), "--alpha", "1/2"]);
    assert_eq!(exit_code(&bad), 1);
    assert_eq!(stdout_json(&bad)["verdict"], "violation");
}

#[test]
fn check_derivable_reports_margin() {
    let non_derivable = fixture("non_derivable_half_dp.json");
    let output = run(&[
        "check",
        "derivable",
        "--mechanism",
        non_derivable.to_str().unwrap(),
        "--alpha",
        "1/2",
    ]);
    assert_eq!(exit_code(&output), 1);
    let json = stdout_json(&output);
    assert_eq!(json["derivable"], false);
    assert_eq!(json["violation"]["column"], 1);
    assert_eq!(json["violation"]["row"], 0);
    assert_eq!(json["violation"]["margin"], "-1/12");
}

#[test]
fn optimize_matches_hand_analysis() {
    let output = run(&[
        "optimize", "--n", "1", "--alpha", "1/2", "--loss", "zero_one", "--side", "0..1",
    ]);
    assert_eq!(exit_code(&output), 0);
    assert_eq!(stdout_json(&output)["loss"], "1/3");
}

#[test]
fn optimize_rejects_non_monotone_loss_file() {
    let loss_arg = format!("@{}", fixture("nonmonotone_loss.json").display());
    let output = run(&["optimize", "--n", "3", "--alpha", "1/4", "--loss", &loss_arg, "--side", "0..3"]);
    assert_eq!(exit_code(&output), 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    // The error names the violated pair.
    assert!(stderr.contains("monotone") && stderr.contains("l(1,2)"), "{stderr}");
}

#[test]
fn optimize_equals_interact_pipeline() {
    let dir = std::env::temp_dir().join(format!("geomech-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let deployed = dir.join("g.json");
    let gen = run(&[
        "gen", "--n", "3", "--alpha", "1/4", "--out", deployed.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&gen), 0);

    let optimize = run(&["optimize", "--n", "3", "--alpha", "1/4", "--loss", "abs", "--side", "0..3"]);
    assert_eq!(exit_code(&optimize), 0);
    let interact = run(&[
        "interact", "--mechanism", deployed.to_str().unwrap(), "--loss", "abs", "--side", "0..3",
    ]);
    assert_eq!(exit_code(&interact), 0);
    assert_eq!(stdout_json(&optimize)["loss"], stdout_json(&interact)["loss"]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn interact_rejects_shape_mismatch() {
    let identity = fixture("identity_n1.json");
    // Loss file is 4x4 but the mechanism is 2x2.
    let loss_arg = format!("@{}", fixture("nonmonotone_loss.json").display());
    let output = run(&[
        "interact", "--mechanism", identity.to_str().unwrap(), "--loss", &loss_arg, "--side", "0..1",
    ]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn release_is_byte_deterministic() {
    let args = ["release", "--n", "3", "--alphas", "1/4,1/2", "--true-result", "2", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(exit_code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let json = stdout_json(&a);
    assert_eq!(json["results"].as_array().unwrap().len(), 2);
}

#[test]
fn release_rejects_decreasing_alphas() {
    let output = run(&["release", "--n", "3", "--alphas", "1/2,1/4", "--true-result", "2"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn release_seed_comes_from_environment() {
    let args = ["release", "--n", "2", "--alphas", "1/3", "--true-result", "1"];
    let via_env = bin()
        .args(args)
        .env("GEOMECH_SEED", "41")
        .output()
        .unwrap();
    let via_flag = run(&["release", "--n", "2", "--alphas", "1/3", "--true-result", "1", "--seed", "41"]);
    assert_eq!(via_env.stdout, via_flag.stdout);
}

#[test]
fn audit_reports_worst_ratio_at_min_alpha() {
    let output = run(&["audit", "--n", "2", "--alphas", "1/3,1/2"]);
    assert_eq!(exit_code(&output), 0);
    let json = stdout_json(&output);
    assert_eq!(json["ok"], true);
    assert_eq!(json["worst_ratio"], "1/3");
}

#[test]
fn reduce_audits_db_mechanism() {
    let db = fixture("db_lifted_geometric.json");
    let dir = std::env::temp_dir().join(format!("geomech-reduce-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("oblivious.json");
    let output = run(&[
        "reduce",
        "--db-mechanism",
        db.to_str().unwrap(),
        "--alpha",
        "1/2",
        "--loss",
        "abs",
        "--side",
        "0..2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    assert_eq!(report["dp_preserved"], true);
    assert_eq!(report["loss_dominated"], true);
    // Lifted geometric reduces to the geometric mechanism itself.
    let oblivious: Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(
        oblivious["matrix"]["entries"][1],
        serde_json::json!(["1/3", "1/3", "1/3"])
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_named_suites_pass() {
    for suite in ["non-derivable", "determinant", "add-privacy", "collusion", "sampling"] {
        let output = run(&["verify", "--suite", suite]);
        assert_eq!(exit_code(&output), 0, "suite {suite} failed");
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(stdout.contains(&format!("PASS {suite}")), "{stdout}");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["gen", "--n", "4", "--alpha", "2/3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["optimize", "--n", "2", "--alpha", "1/2", "--loss", "square", "--side", "0,2"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
