use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("experiment.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_kdvkam"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

const FORCED: &str = r#"
lambda = 1.118
[nonlinearity]
builtin = "strongly_forced_cubic"
[truncation]
n_phi = 4
n_x = 4
"#;

#[test]
fn solve_with_zero_epsilon_returns_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve"], &format!("epsilon = 0.0\n{FORCED}"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(dir.path());
    let run0 = &rep["runs"][0];
    assert_eq!(run0["status"], "converged");
    assert_eq!(run0["summary"]["solution_norm"], 0.0);
    let path = dir.path().join("out").join(run0["summary"]["solution_ref"].as_str().unwrap());
    let field: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(field["entries"].as_array().unwrap().len(), 0);
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(trace.starts_with("epsilon,lambda,n,"));
}

#[test]
fn forced_solve_converges_and_records_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--seed", "17"], &format!("epsilon = 1e-3\n{FORCED}"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rep = report(dir.path());
    assert_eq!(rep["seed"], 17);
    assert_eq!(rep["command"], "solve");
    let s = &rep["runs"][0]["summary"];
    assert!(s["residual_history"].as_array().unwrap().last().unwrap().as_f64().unwrap() < 1e-9);
}

#[test]
fn measure_reports_one_fraction_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
epsilon = [1e-3, 1e-5]
lambda = { points = 5 }
[nonlinearity]
builtin = "strongly_forced_cubic"
[truncation]
n_phi = 3
n_x = 3
"#;
    let out = run(&["measure"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(dir.path());
    let fr = rep["measure"]["fractions"].as_array().unwrap();
    assert_eq!(fr.len(), 2);
    assert!(fr.iter().all(|f| (0.0..=1.0).contains(&f.as_f64().unwrap())));
    assert_eq!(rep["measure"]["gamma_rule"]["a"], 0.5);
    let rows = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 2 * 5);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = r#"
epsilon = 1e-3
lambda = [1.118, 1.2]
[nonlinearity]
builtin = "quasilinear_cubic"
[truncation]
n_phi = 4
n_x = 4
[reduce]
at = "random"
"#;
    let read = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["reduce", "--seed", seed], cfg, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let o = dir.path().join("out");
        [
            fs::read(o.join("report.json")).unwrap(),
            fs::read(o.join("trace.csv")).unwrap(),
            fs::read(o.join("fields/point_e0_l1.json")).unwrap(),
        ]
    };
    let (a, b, c) = (read("5"), read("5"), read("6"));
    assert_eq!(a, b);
    assert_ne!(a[2], c[2]);
}

#[test]
fn stability_reruns_are_byte_identical() {
    let cfg = format!("epsilon = 1e-3\n{FORCED}\n[dynamics]\nT = 0.5\ndt = 1e-3\nn_samples = 2\ninitial_states = 2\n");
    let read = || {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["stability", "--workers", "2"], &cfg, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(dir.path().join("out/report.json")).unwrap(), fs::read(dir.path().join("out/fields/h0_1.json")).unwrap())
    };
    let (a, b) = (read(), read());
    assert_eq!(a, b);
    let rep: Value = serde_json::from_slice(&a.0).unwrap();
    let tr = &rep["runs"][0]["trajectories"];
    assert_eq!(tr.as_array().unwrap().len(), 2);
    assert!(tr[0]["v_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn resonant_lambda_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = FORCED.replace("lambda = 1.118", "lambda = 1.0");
    let out = run(&["solve"], &format!("epsilon = 1e-3\n{cfg}"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rep = report(dir.path());
    assert_eq!(rep["runs"][0]["status"], "excluded");
    assert!(rep["runs"][0]["summary"]["exclusion"].as_str().unwrap().contains("divisor"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve"], "[truncation]\nn_phi = 0\n[kam]\nchi = 3.0\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("truncation.n_phi") && err.contains("kam.chi"), "{err}");

    let out = run(&["solve"], "[truncation]\nn_phy = 4\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_phy"));

    let out = run(&["solve"], "lambda = 2.0\n", dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda[0]"));
}

#[test]
fn low_tau_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "epsilon = 0.0\n[truncation]\nn_phi = 2\nn_x = 2\n[kam]\ntau = 1.5\n";
    let out = run(&["solve"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: kam.tau"));
}

#[test]
fn verify_prints_a_passing_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify"], "", dir.path());
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{table}");
    for module in ["spectral", "nonlin", "opalg", "regularize", "kamreduce", "solver", "dynamics"] {
        assert!(table.lines().any(|l| l.starts_with(module) && l.ends_with("PASS")), "{module}");
    }
    assert!(!table.contains("FAIL"));
    assert!(report(dir.path())["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}
