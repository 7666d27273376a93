//! End-to-end runs of the `ness` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ness(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ness"))
        .args(args)
        .current_dir(dir)
        .env_remove("NESS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// CSV body without the timestamp metadata line.
fn stable_csv(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# timestamp"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn exact_point_writes_results_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["ness-exact", "--n", "4", "--delta", "0", "--f", "1", "--gamma", "0.1"];
    let out = ness(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let expect = -1.0 / (1.0 + 1.0 + 4.0 * 0.1 * 3.0);
    let line = stdout(&out);
    assert!(line.contains(&format!("J = {expect:.6}")), "{line}");
    let csv = dir.path().join("ness-exact.csv");
    let first = stable_csv(&csv);
    assert!(first.contains("N,delta,f,gamma,B,solver,J,S,purity,converged,residual"));
    assert!(dir.path().join("ness-exact.json").exists());

    assert_eq!(ness(dir.path(), &args).status.code(), Some(0));
    assert_eq!(first, stable_csv(&csv));
}

#[test]
fn invalid_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = ness(dir.path(), &["ness-exact", "--n", "4", "--f", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ness(dir.path(), &["ness-exact", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, "{\n  \"schema_version\": 1,\n  \"chain\": { \"n_sites\": 4, \"bais\": 0.5 }\n}\n").unwrap();
    let out = ness(dir.path(), &["ness-exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bais"));
}

#[test]
fn flags_override_config_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1, "chain": {"n_sites": 3, "interaction": 1.0, "bias": 0.5, "dephasing": 0.2}}"#,
    )
    .unwrap();
    let out = ness(dir.path(), &["ness-exact", "--config", cfg.to_str().unwrap(), "--delta", "2.5", "--name", "run"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    let chain = &json["metadata"]["config"]["chain"];
    assert_eq!(chain["interaction"], 2.5);
    assert_eq!(chain["bias"], 0.5);
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    fs::create_dir(&out_dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ness"))
        .args(["predict", "--n", "6", "--f", "0.5", "--gamma", "0.1"])
        .current_dir(dir.path())
        .env("NESS_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(out_dir.join("predict.csv").exists());
    assert!(!dir.path().join("predict.csv").exists());
}

#[test]
fn unconverged_mpo_run_writes_output_and_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1,
            "chain": {"n_sites": 4, "interaction": 2.0, "bias": 1.0, "dephasing": 0.0},
            "solver": {"schedule": {"min_time": 0.5, "max_time": 1.0, "drift_tol": 1e-14}}}"#,
    )
    .unwrap();
    let out = ness(dir.path(), &["ness-mpo", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let csv = stable_csv(&dir.path().join("ness-mpo.csv"));
    assert!(csv.lines().last().unwrap().contains("false"), "{csv}");
}

#[test]
fn sector_probabilities_and_toy_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = ness(dir.path(), &["predict", "--pn", "--n", "6", "--delta", "10"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let pn = stable_csv(&dir.path().join("predict.csv"));
    assert_eq!(pn.lines().filter(|l| !l.starts_with('#')).count(), 1 + 7);

    let cfg = dir.path().join("grid.json");
    fs::write(&cfg, r#"{"schema_version": 1, "toy_grid": {"bias": [0.5, 1.0], "dephasing": [0.0, 0.01]}}"#).unwrap();
    let out = ness(dir.path(), &["toy", "--grid", "--k", "5", "--delta", "4", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).starts_with("4 toy points"));
    let rows = stable_csv(&dir.path().join("toy.csv"));
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn sweep_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1, "subcommand": "sweep",
            "sweep": {"n_sites": [3], "interaction": [0.5], "bias": [-1.0, 1.0], "dephasing": [0.0, 0.1],
                      "output": "grid"}}"#,
    )
    .unwrap();
    let out = ness(dir.path(), &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("grid.json")).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let j = |i: usize| rows[i]["record"]["current"].as_f64().unwrap();
    assert!((j(0) + j(2)).abs() < 1e-10 && (j(1) + j(3)).abs() < 1e-10);

    let wrong = ness(dir.path(), &["ness-exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}
