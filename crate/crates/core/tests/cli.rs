use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fracdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdual")).args(args).env("FRACDUAL_THREADS", "2").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn metric(report: &Value, name: &str) -> f64 {
    report["metrics"].as_array().unwrap().iter().find(|m| m[0] == name).unwrap()[1].as_f64().unwrap()
}

const ZERO_PROBLEM: &str = r#"{
  "problem": {
    "frac_params": { "alpha": 0.5, "s": 0.5 },
    "grid": {
      "axes": [{ "x_min": -1.0, "x_max": 1.0, "n": 21 }],
      "domain_kind": { "kind": "interval", "a": -0.8, "b": 0.8 }
    },
    "solve": { "dt": 0.1, "n_steps": 5 }
  }
}"#;

#[test]
fn simulate_zero_problem_writes_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    std::fs::write(&cfg, ZERO_PROBLEM).unwrap();
    let out = dir.path().join("run");
    let o = fracdual(&["simulate", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,t,node,x,u"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6 * 21);
    assert!(rows.iter().all(|r| r.ends_with(",0.0")));
    let manifest = read_json(&out.join("MANIFEST.json"));
    assert_eq!(manifest["complete"], true);
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    for f in &files {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(files.contains(&"trajectory.csv") && files.contains(&"trajectory.json"));
}

#[test]
fn identical_runs_give_identical_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    std::fs::write(&cfg, ZERO_PROBLEM.replace("\"solve\"", "\"prehistory\": {\"terms\": [{\"space\": {\"family\": \"gaussian_bump\", \"params\": [1.0, 0.0, 0.3]}, \"time\": {\"family\": \"constant\", \"params\": [1.0]}}]}, \"solve\"")).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = fracdual(&["simulate", "--config", cfg.to_str().unwrap(), "--output", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ca, cb) = (std::fs::read(a.join("trajectory.csv")).unwrap(), std::fs::read(b.join("trajectory.csv")).unwrap());
    assert_eq!(ca, cb);
    assert!(String::from_utf8(ca).unwrap().lines().skip(1).any(|r| !r.ends_with(",0.0")));
}

#[test]
fn invalid_alpha_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"problem": {"frac_params": {"alpha": 1.2, "s": 0.5}}}"#).unwrap();
    let o = fracdual(&["operators", "--config", cfg.to_str().unwrap(), "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("problem.frac_params.alpha"));
    let o = fracdual(&["operators", "--alpha", "1.2", "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"problem\": {").unwrap();
    assert_eq!(code(&fracdual(&["operators", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, r#"{"problme": {}}"#).unwrap();
    assert_eq!(code(&fracdual(&["operators", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&fracdual(&["operators", "--config", dir.path().join("missing.json").to_str().unwrap()])), 2);
    assert_eq!(code(&fracdual(&["no-such-command"])), 2);
}

#[test]
fn counterexample_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce");
    let o = fracdual(&["counterexample", "--alpha", "0.5", "--R", "100", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("reports/counterexample.json"));
    assert!(metric(&r, "min_derivative") >= -1e-6);
    assert_eq!(metric(&r, "min_u"), -1.0);
    assert_eq!(r["conclusion"]["verdict"], "inconclusive");
    let plot = std::fs::read_to_string(out.join("plot/derivative.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("t,value"));
    assert_eq!(plot.lines().count(), 201);
}

#[test]
fn verify_appendix_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("va");
    let o = fracdual(&["verify-appendix", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bounds = std::fs::read_to_string(out.join("cutoff_bound.csv")).unwrap();
    assert_eq!(bounds.lines().count(), 4);
    for row in bounds.lines().skip(1) {
        let c: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(c[1] < c[2], "{row}");
    }
    let scaling = std::fs::read_to_string(out.join("scaling_identity.csv")).unwrap();
    assert_eq!(scaling.lines().count(), 1 + 3 * 3);
    for row in scaling.lines().skip(1) {
        assert!(row.split(',').nth(2).unwrap().parse::<f64>().unwrap() < 1e-4);
    }
}

#[test]
fn check_mode_compares_with_stored_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce");
    let o = out.to_str().unwrap();
    assert_eq!(code(&fracdual(&["counterexample", "--output", o])), 0);
    let before = std::fs::read(out.join("MANIFEST.json")).unwrap();
    assert_eq!(code(&fracdual(&["counterexample", "--output", o, "--check"])), 0);
    assert_eq!(code(&fracdual(&["counterexample", "--output", o, "--check", "--R", "50"])), 4);
    assert_eq!(std::fs::read(out.join("MANIFEST.json")).unwrap(), before);
    let cfg = out.join("config.json");
    assert_eq!(code(&fracdual(&["counterexample", "--config", cfg.to_str().unwrap(), "--output", o, "--check"])), 0);
}

#[test]
fn expectation_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, r#"{"expectations": {"counterexample": "holds"}}"#).unwrap();
    let out = dir.path().join("ce");
    let o = fracdual(&["counterexample", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let m = read_json(&out.join("MANIFEST.json"));
    assert_eq!(m["verdicts"][0]["expected"], "holds");
    assert_eq!(m["verdicts"][0]["verdict"], "inconclusive");
}

#[test]
fn numerical_failure_exits_5_with_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("geo.json");
    std::fs::write(&cfg, r#"{"averaging": {"d": [0.3, 4.0]}}"#).unwrap();
    let out = dir.path().join("avg");
    let o = fracdual(&["averaging", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("principles"));
    let m = read_json(&out.join("MANIFEST.json"));
    assert_eq!(m["complete"], false);
}

#[test]
fn narrow_region_width_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nr");
    let o = fracdual(&["narrow-region", "--l", "0.1", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("narrow_sweep.csv")).unwrap();
    assert_eq!(
        table.lines().collect::<Vec<_>>(),
        vec!["l,min_w,verdict", &format!("0.1,{},holds", table.lines().nth(1).unwrap().split(',').nth(1).unwrap())]
    );
}

#[test]
fn report_summarizes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_eq!(code(&fracdual(&["counterexample", "--output", root.join("ce").to_str().unwrap()])), 0);
    assert_eq!(code(&fracdual(&["operators", "--output", root.join("ops").to_str().unwrap()])), 0);
    let o = fracdual(&["report", "--output", root.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = read_json(&root.join("summary.json"));
    assert_eq!(s["runs"].as_array().unwrap().len(), 2);
    assert_eq!(s["all_as_expected"], true);
    assert!(String::from_utf8_lossy(&o.stdout).contains("fourier_symbol"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        let cfg = read_json(&p);
        let cmd = cfg["command"].as_str().unwrap().to_string();
        let out = dir.path().join(&cmd);
        // exit 3 rather than 2 means the file parsed and reached validation
        let o = fracdual(&[&cmd, "--config", p.to_str().unwrap(), "--output", out.to_str().unwrap(), "--alpha=1.5"]);
        assert_eq!(code(&o), 3, "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        if ["counterexample", "verify-appendix", "operators"].contains(&cmd.as_str()) || p.ends_with("simulate_zero.json") {
            let o = fracdual(&[&cmd, "--config", p.to_str().unwrap(), "--output", out.to_str().unwrap()]);
            assert_eq!(code(&o), 0, "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        }
    }
}
