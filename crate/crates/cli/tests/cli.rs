use std::path::PathBuf;
use std::process::{Command, Output};

fn soplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soplab")).args(args).output().expect("spawn soplab")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("soplab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SCENARIO: &str = r#"{
  "fso": {"a": 2.902, "b": 2.51, "xi": 1.1, "r": 1, "omega_sr_db": 20.0},
  "rf_d": {"m": 2, "n_antennas": 3, "alpha": 0.5, "d": 10.0, "eta": 3.0, "lc": 0.03597,
           "pt_dbm": 30.0, "n0": 1.0, "sigma2": 1.0, "omega_db": 5.0},
  "rf_e": {"m": 2, "n_antennas": 2, "alpha": 0.5, "d": 10.0, "eta": 3.0, "lc": 0.03597,
           "pt_dbm": 30.0, "n0": 1.0, "sigma2": 1.0, "omega_db": 0.0},
  "rs_nats": 0.01,
  "varphi": 1.0
}"#;

fn spec(engines: &str) -> String {
    format!(
        r#"{{"scenario": {SCENARIO}, "sweep_axis": "omega_sr_db", "grid": [10.0, 30.0],
            "engines": {engines},
            "curves": [{{"label": "r=1", "set": {{"r": 1}}}}, {{"label": "r=2", "set": {{"r": 2}}}}],
            "mc": {{"n_samples": 20000, "master_seed": 5, "n_workers": 1, "batch_size": 3000}}}}"#
    )
}

#[test]
fn run_writes_csv_with_stable_header() {
    let p = scratch("spec_analytic.json", &spec(r#"["analytic"]"#));
    let out = soplab(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "curve,omega_sr_db,engine,sop,h1,h2,varrho,std_error,series_terms,wall_time_ms,status"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn worker_count_does_not_change_output() {
    let p = scratch("spec_mc.json", &spec(r#"["analytic", "montecarlo"]"#));
    let a = soplab(&["run", p.to_str().unwrap(), "--workers", "1"]);
    let b = soplab(&["run", p.to_str().unwrap(), "--workers", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = soplab(&["run", p.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn validation_errors_exit_with_two() {
    let p = scratch("spec_empty.json", &spec("[]"));
    assert_eq!(soplab(&["run", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(soplab(&["preset", "fig1"]).status.code(), Some(2));
    assert_eq!(soplab(&["run", "/nonexistent/spec.json"]).status.code(), Some(2));
    let s = scratch("scenario.json", SCENARIO);
    assert_eq!(soplab(&["oracle", "h99", s.to_str().unwrap()]).status.code(), Some(2));
    let bad = scratch("bad_scenario.json", &SCENARIO.replace("\"r\": 1", "\"r\": 3"));
    assert_eq!(soplab(&["oracle", "h11", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn oracle_prints_term_value() {
    let s = scratch("scenario_oracle.json", SCENARIO);
    let out = soplab(&["oracle", "h12", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["term"], "h12");
    let x = v["value"].as_f64().unwrap();
    assert!(x > 0.0 && x < 1.0);
}

#[test]
fn specfun_eval_handles_lists() {
    let g = scratch(
        "g.json",
        r#"[{"m": 1, "n": 0, "a": [], "b": [0.0], "z": 2.0}, {"m": 1, "n": 1, "a": [0.0], "b": [0.0], "z": 0.5}]"#,
    );
    let out = soplab(&["specfun", "eval", g.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["value"].as_f64().unwrap())
        .collect();
    // G^{1,0}_{0,1}[z | -; 0] = e^{-z}, G^{1,1}_{1,1}[z | 0; 0] = 1/(1+z)
    assert!((vals[0] - (-2.0f64).exp()).abs() < 1e-14);
    assert!((vals[1] - 1.0 / 1.5).abs() < 1e-14);
}
