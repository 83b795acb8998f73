use std::path::Path;
use std::process::{Command, Output};

fn bihari(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bihari")).args(args).env_remove("BIHARI_WORKERS").output().unwrap()
}

fn with_workers(workers: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bihari")).args(args).env("BIHARI_WORKERS", workers).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn version_lists_artifact_and_schema() {
    let o = bihari(&["--version"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains(env!("CARGO_PKG_VERSION")) && s.contains("config schema 1"), "{s}");
}

#[test]
fn linear_bound_is_eight_e_squared() {
    let o = bihari(&["bound", "--eta", "linear", "--p", "0.5", "--case", "pred", "--variant", "sup", "--h-norm", "1", "--a-t", "1"]);
    assert!(o.status.success());
    let v: f64 = csv_column(&stdout(&o), "value")[0].parse().unwrap();
    assert!((v - 59.112).abs() < 1e-3, "{v}");
    assert!((v - 8.0 * std::f64::consts::E.powi(2)).abs() < 1e-9);
}

#[test]
fn counterexample_row_has_the_lower_bound() {
    let o = bihari(&["counterexample", "--p", "0.5", "--gamma", "100", "--T", "10", "--trials", "20000"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lb: f64 = csv_column(&s, "lower_bound")[0].parse().unwrap();
    assert!((lb - 5.1472).abs() < 1e-4);
    assert_eq!(csv_column(&s, "verdict"), vec!["PASS"]);
}

#[test]
fn counterexample_column_grows_with_gamma() {
    let o = bihari(&["counterexample", "--gamma", "1,10,100", "--T", "10", "--trials", "0"]);
    assert!(o.status.success());
    let col: Vec<f64> = csv_column(&stdout(&o), "lower_bound").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(col.len(), 3);
    assert!(col.windows(2).all(|w| w[1] > w[0]), "{col:?}");
}

#[test]
fn transform_eval_and_invert() {
    let o = bihari(&["transform", "eval", "--x", "2.718281828459045"]);
    let g: f64 = csv_column(&stdout(&o), "value")[0].parse().unwrap();
    assert!((g - 1.0).abs() < 1e-12);
    let o = bihari(&["transform", "--eta", "square", "invert", "--y", "0.5,2"]);
    assert_eq!(csv_column(&stdout(&o), "value"), vec!["2.0", "infinity"]);
    let o = bihari(&["transform", "--p", "0.75", "eval", "--x", "16", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((rows[0]["value"].as_f64().unwrap() - 0.25 * 16f64.powf(4.0 / 3.0).ln()).abs() < 1e-10);
}

#[test]
fn verify_concave_passes_and_exits_zero() {
    let o = bihari(&["verify", "--check", "concave", "--trials", "3000", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["verdict"], "PASS");
    assert_eq!(doc["results"][0]["theoretical_bound"].as_f64().map(|b| (b - 59.112).abs() < 1e-3), Some(true));
}

#[test]
fn every_check_runs_on_its_default_config() {
    for (check, trials) in [("random-integrator", "2000"), ("general-eta", "2000"), ("counterexample", "5000"), ("osgood", "300"), ("cauchy", "100")] {
        let o = bihari(&["verify", "--check", check, "--trials", trials]);
        assert!(o.status.success(), "{check}: {}", String::from_utf8_lossy(&o.stderr));
        let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(doc["check"], check);
        assert_ne!(doc["verdict"], "FAIL", "{check}");
    }
}

#[test]
fn config_errors_exit_two_with_the_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"quadruple": {"eta": {"kind": "linear"}, "a": {"kind": "deterministic"}, "kappa": "x", "n_per_unit": 8}}"#).unwrap();
    let o = bihari(&["verify", "--check", "concave", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("quadruple.kappa"), "{err}");

    std::fs::write(&bad, r#"{"n_list": [16, 24]}"#).unwrap();
    let o = bihari(&["cauchy", "--config", bad.to_str().unwrap(), "--trials", "5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = bihari(&["verify", "--check", "concave", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bihari(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bihari(&["counterexample", "--T", "0.5", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn simulate_summaries_and_paths() {
    let o = bihari(&["simulate", "--trials", "4", "--n", "16", "--seed", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 5);
    assert!(csv_column(&s, "exit_flag").iter().all(|e| e == "completed"));
    let o = bihari(&["simulate", "--trials", "2", "--n", "4", "--paths"]);
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 5);
    let o = bihari(&["simulate", "--trials", "1", "--n", "16", "--cap-R", "1"]);
    assert_eq!(csv_column(&stdout(&o), "exit_flag"), vec!["capped"]);
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn outputs_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["verify", "--check", "concave", "--trials", "4000", "--seed", "11"],
        &["verify", "--check", "cauchy", "--trials", "64", "--seed", "2"],
        &["simulate", "--trials", "50", "--n", "64", "--seed", "5"],
        &["counterexample", "--gamma", "1,10", "--trials", "5000", "--seed", "8"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for workers in ["1", "3", "8"] {
            let out = dir.path().join(format!("run{i}_{workers}.out"));
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", out.to_str().unwrap()]);
            let o = with_workers(workers, &full);
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(dir.path().join(format!("run{i}_{workers}.out.meta.json")).exists());
            outputs.push(read(&out));
        }
        assert!(!outputs[0].is_empty());
        assert!(outputs.iter().all(|o| *o == outputs[0]), "{args:?} differs across worker counts");
        let flag = with_workers("2", &[args, &["--workers", "1"][..]].concat());
        assert_eq!(flag.stdout, outputs[0], "{args:?} on stdout");
    }
}

#[test]
fn interface_aliases_are_accepted() {
    for check in ["thm31", "cor36", "thm38"] {
        let o = bihari(&["verify", "--check", check, "--trials", "200"]);
        assert!(o.status.success(), "{check}");
    }
    let a = bihari(&["simulate", "--model", "example43", "--n", "8", "--cap", "100"]);
    let b = bihari(&["simulate", "--model", "delay", "--n", "8", "--cap-R", "100"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_reads_a_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gbm.json");
    std::fs::write(&cfg, r#"{"model": {"kind": "linear", "a": 0.0, "b": 0.0, "z0": 2.5}}"#).unwrap();
    let o = bihari(&["simulate", "--model", cfg.to_str().unwrap(), "--n", "8", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_column(&stdout(&o), "X_T"), vec!["2.5", "2.5"]);
    std::fs::write(&cfg, r#"{"model": {"kind": "linear", "slope": 1.0}}"#).unwrap();
    let o = bihari(&["simulate", "--model", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model"));
}
