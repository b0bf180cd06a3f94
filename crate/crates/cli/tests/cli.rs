use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use ttexp::tt::json::{tensor_from_json, tensor_to_json};
use ttexp::tt::{Core3, TTTensor};

fn ttexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttexp"))
        .args(args)
        .output()
        .expect("spawn ttexp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// h(y) = y, i.e. coefficient one on the first-degree polynomial.
fn linear_exponent(dir: &TempDir) -> String {
    let t = TTTensor::new(vec![Core3::new(1, 2, 1, vec![0.0, 1.0]).unwrap()]).unwrap();
    write(dir, "h.json", &tensor_to_json(&t).unwrap())
}

/// Rank-2 exponent in two variables: 0.3 y1 + 0.2 y2 + 0.1 y1 y2.
fn bilinear_exponent(dir: &TempDir) -> String {
    // h = 1 * (0.2 y2) + y1 * (0.3 + 0.1 y2)
    let c0 = Core3::new(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let c1 = Core3::new(2, 2, 1, vec![0.0, 0.2, 0.3, 0.1]).unwrap();
    let t = TTTensor::new(vec![c0, c1]).unwrap();
    write(dir, "h2.json", &tensor_to_json(&t).unwrap())
}

fn without_time(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("time_s");
    }
    v
}

#[test]
fn exp_of_linear_exponent_converges() {
    let dir = TempDir::new().unwrap();
    let h = linear_exponent(&dir);
    let cfg = write(&dir, "c.json", &format!(r#"{{"input":"{h}","solver":{{"d_a":25,"tol":1e-8}}}}"#));
    let out = dir.path().join("u.json");
    let o = ttexp(&["exp", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["converged"], Value::Bool(true));
    assert!(report["res"].as_f64().unwrap() <= 1e-8);
    let u = tensor_from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(u.dims(), vec![25]);
    // e^y has Gaussian mean sqrt(e)
    let mean = u.cores()[0].data()[0];
    assert!((mean - 0.5f64.exp()).abs() < 1e-10);
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.json");
    let o = ttexp(&["exp", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.json"));

    let o = ttexp(&["exp", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.json"));
}

#[test]
fn bad_config_is_rejected_before_solving() {
    let dir = TempDir::new().unwrap();
    let h = linear_exponent(&dir);
    let cfg = write(&dir, "c.json", r#"{"solver":{"d_a":10,"typo":1}}"#);
    let o = ttexp(&["exp", &h, "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("c.json"));
}

#[test]
fn zero_sweeps_reports_non_convergence() {
    let dir = TempDir::new().unwrap();
    let h = linear_exponent(&dir);
    let cfg = write(&dir, "c.json", r#"{"solver":{"max_sweeps":0}}"#);
    let out = dir.path().join("u.json");
    let o = ttexp(&["exp", &h, "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["converged"], Value::Bool(false));
    assert_eq!(report["sweeps"], 0);
    assert!(out.exists(), "best iterate must still be written");
}

#[test]
fn exp_csv_report_and_report_file() {
    let dir = TempDir::new().unwrap();
    let h = linear_exponent(&dir);
    let rep = dir.path().join("r.csv");
    let cfg = write(&dir, "c.json", &format!(r#"{{"report":"{}"}}"#, rep.to_str().unwrap()));
    let o = ttexp(&["exp", &h, "--config", &cfg, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&rep).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("sweeps,res,converged"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let h = bilinear_exponent(&dir);
    let cfg = write(&dir, "c.json", r#"{"solver":{"d_a":6,"rank":3,"max_sweeps":1,"seed":1}}"#);
    let run = |extra: &[&str]| {
        let mut args = vec!["exp", h.as_str(), "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        let o = ttexp(&args);
        without_time(serde_json::from_str(&stdout(&o)).unwrap())
    };
    let base = run(&[]);
    assert_eq!(base, run(&["--seed", "1"]));
    assert_ne!(base, run(&["--seed", "2"]));
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let h = bilinear_exponent(&dir);
    let cfg = write(&dir, "c.json", r#"{"solver":{"d_a":8,"s":2,"rank":4}}"#);
    let a = ttexp(&["exp", &h, "--config", &cfg]);
    let b = ttexp(&["exp", &h, "--config", &cfg]);
    assert_eq!(a.status.code(), b.status.code());
    let va = without_time(serde_json::from_str(&stdout(&a)).unwrap());
    let vb = without_time(serde_json::from_str(&stdout(&b)).unwrap());
    assert_eq!(va.to_string(), vb.to_string());

    let bench = write(&dir, "b.json", r#"{"benchmark":"bayes","m":3,"n_mc":100,"seed":4}"#);
    let a = ttexp(&["benchmark", "--config", &bench, "--format", "json"]);
    let b = ttexp(&["benchmark", "--config", &bench, "--format", "json"]);
    let va = without_time(serde_json::from_str(&stdout(&a)).unwrap());
    let vb = without_time(serde_json::from_str(&stdout(&b)).unwrap());
    assert_eq!(va.to_string(), vb.to_string());
}

fn csv_row(text: &str) -> Vec<(String, String)> {
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    lines[0]
        .split(',')
        .map(String::from)
        .zip(lines[1].split(',').map(String::from))
        .collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == name).unwrap().1
}

#[test]
fn gaussian_density_benchmark_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "b.json", r#"{"benchmark":"gaussian_density","m":5,"mu":1.0,"n_mc":200}"#);
    let o = ttexp(&["benchmark", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = csv_row(&stdout(&o));
    assert_eq!(field(&row, "benchmark"), "gaussian_density");
    assert_eq!(field(&row, "M"), "5");
    assert!(field(&row, "res").parse::<f64>().unwrap() < 1e-3);
    assert!(field(&row, "eps_inf").parse::<f64>().unwrap() < 1e-3);
    assert!(field(&row, "time_s").parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn kl_fourier_benchmark_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "b.json", r#"{"benchmark":"kl_fourier","m":5,"sigma":2.0,"n_mc":100}"#);
    let out = dir.path().join("u.json");
    let o = ttexp(&["benchmark", "--config", &cfg, "--out", out.to_str().unwrap()]);
    // the fixed-rank sweep stalls above the inner tolerance; the row is written anyway
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let row = csv_row(&stdout(&o));
    assert_eq!(field(&row, "parameter"), "M");
    let eps_inf: f64 = field(&row, "eps_inf").parse().unwrap();
    assert!(eps_inf > 0.0 && eps_inf < 1e-2);
    assert!(out.exists());
}

#[test]
fn unknown_benchmark_lists_options() {
    let o = ttexp(&["benchmark", "heat_equation"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    for name in ["kl_fourier", "kl_gaussian", "gaussian_density", "bayes"] {
        assert!(e.contains(name), "{e}");
    }
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "b.json", r#"{"benchmark":"heat_equation"}"#);
    let o = ttexp(&["benchmark", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gaussian_density"));
}

#[test]
fn inspect_constant_tensor() {
    let dir = TempDir::new().unwrap();
    let dims = [3usize, 4, 5];
    let t = TTTensor::constant(&dims, 2.0).unwrap();
    let p = write(&dir, "c.json", &tensor_to_json(&t).unwrap());
    let o = ttexp(&["inspect", &p]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["order"], 3);
    assert_eq!(v["ranks"], serde_json::json!([1, 1, 1, 1]));
    // unit ranks: every interior bond removes one gauge degree of freedom
    let dofs = dims.iter().sum::<usize>() - (dims.len() - 1);
    assert_eq!(v["tt_dofs"], dofs);
    assert!((v["norm"].as_f64().unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn inspect_rejects_corrupt_json() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", r#"{"order": 2, "dims": [2, 2], "ranks": [1, 1"#);
    let o = ttexp(&["inspect", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.json"));
    assert!(stderr(&o).contains("line"));
}

#[test]
fn inspect_matches_in_memory_profile() {
    let dir = TempDir::new().unwrap();
    let data = |n: usize, k: f64| (0..n).map(|i| ((i as f64 + 1.0) * k).sin()).collect::<Vec<_>>();
    let t = TTTensor::new(vec![
        Core3::new(1, 3, 2, data(6, 0.7)).unwrap(),
        Core3::new(2, 4, 3, data(24, 1.3)).unwrap(),
        Core3::new(3, 2, 1, data(6, 2.1)).unwrap(),
    ])
    .unwrap();
    let p = write(&dir, "t.json", &tensor_to_json(&t).unwrap());
    let o = ttexp(&["inspect", &p]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let prof = t.rank_profile();
    assert_eq!(v["dims"], serde_json::json!(t.dims()));
    assert_eq!(v["ranks"], serde_json::json!(prof.ranks));
    assert_eq!(v["max_rank"], prof.max_rank);
    assert_eq!(v["tt_dofs"], prof.tt_dofs);
    let rel = (v["norm"].as_f64().unwrap() - t.norm()).abs() / t.norm();
    assert!(rel < 1e-15);

    let o = ttexp(&["inspect", &p, "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("3,3 4 2,1 2 3 1,"));
    assert!(Path::new(&p).exists());
}
