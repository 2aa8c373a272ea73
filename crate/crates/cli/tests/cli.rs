//! End-to-end tests of the `specvol` binary: file formats, exit codes,
//! idempotence, and agreement with direct library calls.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specvol"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specvol-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn simulate_writes_idempotent_csv() {
    let dir = tmp_dir("simulate");
    let out_path = dir.join("obs.csv");
    let run = || {
        bin()
            .args([
                "simulate",
                "--curve",
                "quartic:0.02,0.2,0.5",
                "--n",
                "300",
                "--delta",
                "0.01",
                "--seed",
                "7",
                "--out",
            ])
            .arg(&out_path)
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success());
    let bytes_first = fs::read(&out_path).unwrap();
    let text = String::from_utf8(bytes_first.clone()).unwrap();
    assert!(text.starts_with("i,y\n"));
    assert_eq!(text.lines().count(), 301);
    assert!(text.lines().nth(1).unwrap().starts_with("1,"));

    let second = run();
    assert!(second.status.success());
    assert_eq!(bytes_first, fs::read(&out_path).unwrap(), "re-run changed the file");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn estimate_iv_matches_library_pipeline() {
    let dir = tmp_dir("estimate");
    let obs_path = dir.join("obs.csv");
    bin()
        .args([
            "simulate", "--curve", "const:0.02", "--n", "3000", "--delta", "0.01", "--seed",
            "42", "--out",
        ])
        .arg(&obs_path)
        .output()
        .unwrap();

    let run = || {
        bin()
            .args(["estimate", "iv", "--obs"])
            .arg(&obs_path)
            .args([
                "--delta", "0.01", "--blocks", "30", "--J", "20", "--weights", "oracle",
                "--curve", "const:0.02",
            ])
            .output()
            .unwrap()
    };
    let out = run();
    let json = stdout_json(&out);
    let iv_cli = json["iv_hat"].as_f64().unwrap();

    // Same computation straight through the library, reading the same file.
    let series = {
        let text = fs::read_to_string(&obs_path).unwrap();
        let values: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
            .collect();
        specvol::ObservationSeries::from_values(values, 0.01).unwrap()
    };
    let curve = specvol::VolatilityCurve::constant(0.02).unwrap();
    let config = specvol::EstimatorConfig::new(3000, 30, 20, 0.01)
        .unwrap()
        .with_weight_mode(specvol::WeightMode::Oracle);
    let direct = specvol::estimate_iv_from_series(&series, &config, Some(&curve)).unwrap();
    assert_eq!(iv_cli, direct.iv_hat, "CLI and library disagree");
    assert!(json["asymptotic_sd"].as_f64().unwrap() > 0.0);

    // Idempotence: identical inputs give byte-identical stdout.
    assert_eq!(out.stdout, run().stdout);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn estimate_spot_returns_block_centers() {
    let dir = tmp_dir("spot");
    let obs_path = dir.join("obs.csv");
    bin()
        .args([
            "simulate", "--curve", "const:1.0", "--n", "600", "--delta", "0.02", "--seed",
            "3", "--out",
        ])
        .arg(&obs_path)
        .output()
        .unwrap();
    let out = bin()
        .args(["estimate", "spot", "--obs"])
        .arg(&obs_path)
        .args(["--delta", "0.02", "--blocks", "6", "--bandwidth", "0.5"])
        .output()
        .unwrap();
    let json = stdout_json(&out);
    assert_eq!(json["centers"].as_array().unwrap().len(), 6);
    assert_eq!(json["values"].as_array().unwrap().len(), 6);
    let first_center = json["centers"][0].as_f64().unwrap();
    assert!((first_center - 1.0 / 12.0).abs() < 1e-12);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_weights_without_curve_is_a_validation_error() {
    let dir = tmp_dir("oracle-missing");
    let obs_path = dir.join("obs.csv");
    bin()
        .args([
            "simulate", "--curve", "const:1.0", "--n", "100", "--delta", "0.01", "--seed", "1",
            "--out",
        ])
        .arg(&obs_path)
        .output()
        .unwrap();
    let out = bin()
        .args(["estimate", "iv", "--obs"])
        .arg(&obs_path)
        .args(["--delta", "0.01", "--blocks", "10", "--J", "5", "--weights", "oracle"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn malformed_curve_spec_reports_position_and_exits_one() {
    let out = bin()
        .args([
            "simulate", "--curve", "quartic:0.02,0.2", "--n", "10", "--delta", "0", "--out",
            "/dev/null",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position"), "stderr: {err}");
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "stderr: {err}");
}

#[test]
fn fisher_subcommand_emits_report() {
    let out = bin()
        .args(["fisher", "--theta", "1.0", "--h0", "10.0", "--J", "1000"])
        .output()
        .unwrap();
    let json = stdout_json(&out);
    assert!((json["value_closed"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert!(json["value_partial"].as_f64().unwrap() <= json["value_closed"].as_f64().unwrap());
}

#[test]
fn verify_subcommands_pass() {
    let series = stdout_json(
        &bin()
            .args(["verify", "series", "--lambda", "1.0", "--J", "200000"])
            .output()
            .unwrap(),
    );
    assert_eq!(series["pass"], serde_json::Value::Bool(true));
    assert!(series["abs_diff"].as_f64().unwrap() <= 1e-10);

    let fisher = stdout_json(
        &bin()
            .args(["verify", "fisher", "--theta", "1.0", "--h0", "10.0"])
            .output()
            .unwrap(),
    );
    assert_eq!(fisher["pass"], serde_json::Value::Bool(true));

    let counter = stdout_json(
        &bin()
            .args(["verify", "counterexample", "--n-freq", "10", "--alpha", "0.5"])
            .output()
            .unwrap(),
    );
    assert_eq!(counter["pass"], serde_json::Value::Bool(true));

    let hellinger = stdout_json(
        &bin()
            .args(["verify", "hellinger", "--pairs", "40", "--max-dim", "4"])
            .output()
            .unwrap(),
    );
    assert_eq!(hellinger["pass"], serde_json::Value::Bool(true));

    let regression = stdout_json(
        &bin()
            .args(["verify", "regression-bound", "--sizes", "8,16,32", "--knots", "512"])
            .output()
            .unwrap(),
    );
    assert_eq!(regression["strictly_decreasing"], serde_json::Value::Bool(true));
}

#[test]
fn tabulated_curves_load_from_knot_files() {
    let dir = tmp_dir("table");
    let knots_path = dir.join("curve.csv");
    fs::write(&knots_path, "t,sigma\n0,0.5\n0.5,1.5\n1,0.5\n").unwrap();
    let obs_path = dir.join("obs.csv");
    let out = bin()
        .args(["simulate", "--curve"])
        .arg(format!("table:{}", knots_path.display()))
        .args(["--n", "50", "--delta", "0.01", "--seed", "2", "--out"])
        .arg(&obs_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&obs_path).unwrap().lines().count(), 51);
    // Nonpositive knots are rejected up front.
    fs::write(&knots_path, "t,sigma\n0,0.5\n0.5,-1.0\n1,0.5\n").unwrap();
    let out = bin()
        .args(["simulate", "--curve"])
        .arg(format!("table:{}", knots_path.display()))
        .args(["--n", "50", "--delta", "0.01", "--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn thread_env_variable_does_not_change_results() {
    let dir = tmp_dir("mc-env");
    let cfg_path = dir.join("mc.json");
    fs::write(
        &cfg_path,
        r#"{
  "curve": {"kind": "constant", "sigma": 0.5},
  "n": 120, "delta": 0.02, "blocks": 3, "j_max": 6,
  "reps": 8, "base_seed": 31, "weight_mode": "oracle"
}"#,
    )
    .unwrap();
    let plain = bin().args(["mc", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(plain.status.success());
    let forced = bin()
        .args(["mc", "--config"])
        .arg(&cfg_path)
        .env("SPECVOL_THREADS", "2")
        .output()
        .unwrap();
    assert!(forced.status.success());
    assert_eq!(plain.stdout, forced.stdout);
    let bad = bin()
        .args(["mc", "--config"])
        .arg(&cfg_path)
        .env("SPECVOL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn mc_subcommand_runs_config_and_writes_replicates() {
    let dir = tmp_dir("mc");
    let cfg_path = dir.join("mc.json");
    let csv_path = dir.join("reps.csv");
    fs::write(
        &cfg_path,
        r#"{
  "curve": {"kind": "constant", "sigma": 1.0},
  "n": 240,
  "delta": 0.01,
  "blocks": 4,
  "j_max": 8,
  "reps": 12,
  "base_seed": 99,
  "weight_mode": "oracle"
}"#,
    )
    .unwrap();
    let run = || {
        bin()
            .args(["mc", "--config"])
            .arg(&cfg_path)
            .args(["--reps-csv"])
            .arg(&csv_path)
            .output()
            .unwrap()
    };
    let out = run();
    let json = stdout_json(&out);
    assert_eq!(json["reps"].as_u64(), Some(12));
    assert!(json["rmse"].as_f64().unwrap() >= 0.0);
    assert!(json.get("wall_time_s").is_none(), "wall time must stay out of the report");
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("rep,iv_hat\n"));
    assert_eq!(csv.lines().count(), 13);

    // Determinism across invocations.
    assert_eq!(out.stdout, run().stdout);
    fs::remove_dir_all(&dir).unwrap();
}
