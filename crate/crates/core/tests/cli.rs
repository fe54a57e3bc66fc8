use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polar-gscl"));
    c.env_remove(polar_gscl::cli::WORKERS_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn construct(dir: &Path, n: usize, k: usize, gamma_star: usize) -> PathBuf {
    let path = dir.join(format!("code_{n}_{k}.json"));
    let o = run(&[
        "construct",
        "--n",
        &n.to_string(),
        "--k",
        &k.to_string(),
        "--gamma-star",
        &gamma_star.to_string(),
        "--design-param",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn construct_writes_code_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct(dir.path(), 64, 48, 8);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["n"], 64);
    assert_eq!(v["metadata"]["gamma_star"], 8);
    assert_eq!(v["metadata"]["design_snr_db"], 2.0);
    assert_eq!(v["metadata"]["metric_kind"], "gaussian-approximation-mean-llr");
    assert!(v["metadata"]["gamma_achieved"].as_u64().unwrap() <= 8);
    assert_eq!(v["gamma"], v["metadata"]["gamma_achieved"]);

    let o =
        run(&["construct", "--n", "16", "--k", "6", "--gamma-star", "0", "--channel", "bec", "--design-param", "0.5"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["frozen"], serde_json::json!((1..=10).collect::<Vec<_>>()));
    assert_eq!(v["metadata"]["epsilon"], 0.5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("L = 1"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["construct", "--n", "8", "--k", "9", "--design-param", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["construct", "--n", "8", "--k", "2", "--gamma-star", "3", "--design-param", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["construct", "--n", "12", "--k", "2", "--design-param", "1"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["decode", "--code", "/nonexistent/code.json", "--llrs", "-"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&["simulate", "--code", "/nonexistent.json", "--snr", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists(), "nothing is written before inputs are validated");
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn encode_then_decode() {
    let dir = tempfile::tempdir().unwrap();
    let code = construct(dir.path(), 16, 8, 3);
    let code_s = code.to_str().unwrap();
    let o = run(&["encode", "--code", code_s, "--info", "10110010"]);
    assert_eq!(o.status.code(), Some(0));
    let x = stdout(&o).trim().to_owned();
    assert_eq!(x.len(), 16);
    assert_eq!(run(&["encode", "--code", code_s, "--info", "101"]).status.code(), Some(2));

    let llrs: String = x.chars().map(|c| if c == '0' { "2.5\n" } else { "-2.5\n" }).collect();
    let llr_path = dir.path().join("y.txt");
    std::fs::write(&llr_path, llrs).unwrap();
    let o = run(&["decode", "--code", code_s, "--llrs", llr_path.to_str().unwrap(), "--threshold-T", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"], "decision");
    assert_eq!(v["decision"], Value::String(x.clone()));
    assert!(v["log_w_best"].as_f64().unwrap() > v["log_p_y"].as_f64().unwrap());

    let o = run(&["decode", "--code", code_s, "--llrs", llr_path.to_str().unwrap(), "--threshold-T", "neg-inf"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["threshold_log"], "-inf");
    assert_eq!(v["T"], "-inf");

    let weak: String = x.chars().map(|c| if c == '0' { "0.01\n" } else { "-0.01\n" }).collect();
    std::fs::write(&llr_path, weak).unwrap();
    let o = run(&["decode", "--code", code_s, "--llrs", llr_path.to_str().unwrap(), "--threshold-T", "0.1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"], "erasure");
    assert!(v["decision"].is_null());

    let o = run(&["decode", "--code", code_s, "--llrs", llr_path.to_str().unwrap(), "--list-size", "0"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&llr_path, "1.0\n2.0\n").unwrap();
    assert_eq!(run(&["decode", "--code", code_s, "--llrs", llr_path.to_str().unwrap()]).status.code(), Some(1));
}

fn simulate(code: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--code", code.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let code = construct(dir.path(), 32, 16, 4);
    let common = ["--snr", "1,2.5", "--T", "neg-inf,0,0.05", "--frames", "600", "--min-errors", "30", "--seed", "9"];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let plot = dir.path().join("plot.gp");
    let mut with_plot = common.to_vec();
    with_plot.extend_from_slice(&["--workers", "1", "--emit-gnuplot", plot.to_str().unwrap()]);
    assert_eq!(simulate(&code, &a, &with_plot).status.code(), Some(0));
    let o = bin()
        .args(["simulate", "--code", code.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .args(common)
        .env(polar_gscl::cli::WORKERS_ENV, "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv_a = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv_a, std::fs::read_to_string(&b).unwrap());
    let mut lines = csv_a.lines();
    assert_eq!(lines.next(), Some(polar_gscl::sim::CSV_HEADER));
    assert_eq!(lines.count(), 6);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("dt 2"));

    let meta_path = a.with_extension("json");
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
    assert_eq!(meta["config"]["master_seed"], 9);
    assert_eq!(meta["config"]["thresholds"][0], "-inf");
    assert_eq!(meta["config"]["workers"], 1);
    let b_meta: Value = serde_json::from_str(&std::fs::read_to_string(b.with_extension("json")).unwrap()).unwrap();
    assert_eq!(b_meta["config"]["workers"], 3);

    let c = dir.path().join("c.csv");
    let o = run(&["simulate", "--config", meta_path.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_a, std::fs::read_to_string(&c).unwrap());
    let c_meta: Value = serde_json::from_str(&std::fs::read_to_string(c.with_extension("json")).unwrap()).unwrap();
    assert_eq!(c_meta["config"], meta["config"]);
}

#[test]
fn complete_decoder_never_erases() {
    let dir = tempfile::tempdir().unwrap();
    let code = construct(dir.path(), 32, 20, 5);
    let out = dir.path().join("inf.csv");
    let o = simulate(
        &code,
        &out,
        &["--snr", "0,1,2", "--T", "neg-inf", "--frames", "400", "--seed", "1", "--workers", "1"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[6], "-inf");
        assert_eq!(f[9], "0");
        assert_eq!(f[11], f[12]);
    }
}

#[test]
fn simulate_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let code = construct(dir.path(), 16, 8, 2);
    let out = dir.path().join("x.csv");
    assert_eq!(simulate(&code, &out, &["--snr", "1", "--frames", "0"]).status.code(), Some(2));
    assert_eq!(simulate(&code, &out, &[]).status.code(), Some(2));
    assert_eq!(simulate(&code, &out, &["--snr", "1", "--T", "banana"]).status.code(), Some(2));
    let nested = dir.path().join("missing/x.csv");
    assert_eq!(simulate(&code, &nested, &["--snr", "1"]).status.code(), Some(2));
}

#[test]
fn oracle_check_exit_status() {
    let o = run(&["oracle-check", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["oracle-check", "--trials", "20", "--codes-per-length", "3", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("output-distribution"));
    let o = run(&["oracle-check", "--trials", "20", "--codes-per-length", "3", "--corrupt-pm", "0.001"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trial"));
    assert_eq!(run(&["oracle-check", "--n-max", "32"]).status.code(), Some(2));
    let o = run(&["oracle-check", "--trials", "5", "--codes-per-length", "1", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 7);
}
