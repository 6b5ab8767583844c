use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adelic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn generate_with_empty_parameters_is_the_dilaton() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", &json!({}));
    let o = run(&["--R", "3", "generate", s(&params)]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let texts: Vec<&str> = v["entries"].as_array().unwrap().iter().map(|e| e["text"].as_str().unwrap()).collect();
    assert_eq!(texts, vec!["1 - q"; 3]);
}

#[test]
fn generate_with_one_parameter() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", &json!({"tau": {"1": "tau1"}}));
    let o = run(&["--D", "1", "--E", "4", "--R", "2", "--M-max", "2", "generate", s(&params)]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let f1 = adelic_core::qfun::RationalQ::from_json(&v["entries"][0], 1).unwrap();
    let want = adelic_core::qfun::RationalQ::parse("(1-q) + Psi1(tau1)", 1).unwrap();
    assert_eq!(f1, want);
}

#[test]
fn generate_rejects_a_constant_parameter() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", &json!({"tau": {"1": "2"}}));
    let o = run(&["generate", s(&params)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Λ₊"));
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let point = dir.path().join("dilaton.json");
    assert_eq!(run(&["--D", "2", "--E", "6", "generate", "-o", s(&point)]).status.code(), Some(0));
    let o = run(&["check", s(&point)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["accepted"], json!(true));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&point).unwrap()).unwrap();
    v["entries"][1] = json!({"num": "(1-q)*(1-q^2) + tau5*q", "den": [[2, 1]]});
    let bad = write(&dir, "bad.json", &v);
    let o = run(&["check", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let cert = stdout_json(&o);
    assert!(!cert["failures"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("r2_zeta"));

    let small = dir.path().join("small.json");
    assert_eq!(run(&["--R", "1", "--M-max", "2", "--D", "1", "--E", "4", "generate", "-o", s(&small)]).status.code(), Some(0));
    assert_eq!(run(&["check", s(&small)]).status.code(), Some(3));
}

#[test]
fn reconstruct_recovers_parameters_and_round_trips_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let targets = json!({"config": {"D": 1, "E": 4, "R": 3, "M_max": 2}, "targets": ["1 - q + tau1", "1 - q + tau2", "1 - q + tau3"]});
    let t = write(&dir, "targets.json", &targets);
    let params1 = dir.path().join("params1.json");
    let point1 = dir.path().join("point1.json");
    let o = run(&["reconstruct", s(&t), "--params-out", s(&params1), "--point-out", s(&point1)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let p: Value = serde_json::from_str(&std::fs::read_to_string(&params1).unwrap()).unwrap();
    for r in 1..=3 {
        let got = adelic_core::LambdaElement::from_json(&p["tau"][r.to_string()], 1).unwrap();
        assert_eq!(got, adelic_core::LambdaElement::tau(r, 1));
    }
    assert_eq!(run(&["check", s(&point1)]).status.code(), Some(0));

    let point2 = dir.path().join("point2.json");
    let projected = dir.path().join("projected.json");
    let params2 = dir.path().join("params2.json");
    let cfg = ["--D", "1", "--E", "4", "--R", "3", "--M-max", "2"];
    assert_eq!(bin().args(cfg).args(["generate", s(&params1), "-o", s(&point2)]).status().unwrap().code(), Some(0));
    assert_eq!(run(&["project", s(&point2), "-o", s(&projected)]).status.code(), Some(0));
    assert_eq!(run(&["reconstruct", s(&projected), "--params-out", s(&params2), "-o", s(&dir.path().join("all.json"))]).status.code(), Some(0));
    assert_eq!(std::fs::read(&params1).unwrap(), std::fs::read(&params2).unwrap());
}

#[test]
fn reconstruct_rejects_far_targets() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", &json!({"config": {"R": 2}, "targets": ["1", "1 - q"]}));
    assert_eq!(run(&["reconstruct", s(&t)]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", &json!({"tau": {"1": "tau1 + 1/2*tau2", "2": "tau1^2"}, "t": {"1": "1 + tau3*q"}}));
    let a = run(&["--D", "2", "--E", "6", "generate", s(&params)]);
    let b = run(&["--D", "2", "--E", "6", "generate", s(&params)]);
    assert_eq!(a.stdout, b.stdout);
    let point = dir.path().join("pt.json");
    std::fs::write(&point, &a.stdout).unwrap();
    let c1 = run(&["check", s(&point)]);
    let c2 = run(&["check", s(&point)]);
    assert_eq!(c1.status.code(), Some(0));
    assert_eq!(c1.stdout, c2.stdout);
    let e1 = run(&["adelic-expand", s(&point)]);
    assert_eq!(e1.stdout, run(&["adelic-expand", s(&point)]).stdout);
    assert!(stdout_json(&e1).get("r1_zeta2_1").is_some());
}

#[test]
fn stdio_mode() {
    let o = run_stdin(&["--stdio", "--R", "2", "--M-max", "2", "generate"], r#"{"tau": {"2": "tau2"}}"#);
    assert_eq!(o.status.code(), Some(0));
    let point = String::from_utf8(o.stdout).unwrap();
    let o = run_stdin(&["--stdio", "check"], &point);
    assert_eq!(o.status.code(), Some(0));
    let o = run_stdin(&["--stdio", "project"], &point);
    assert_eq!(stdout_json(&o)["targets"].as_array().unwrap().len(), 2);
}

#[test]
fn flows_and_multiplication_keep_points_on_the_cone() {
    let dir = TempDir::new().unwrap();
    let point = dir.path().join("pt.json");
    let cfg = ["--D", "2", "--E", "6", "--R", "4", "--M-max", "2"];
    assert_eq!(bin().args(cfg).args(["generate", "-o", s(&point)]).status().unwrap().code(), Some(0));
    let string = write(&dir, "s.json", &json!({"tau": {"1": "tau1", "2": "tau2 + tau1^2"}}));
    let general = write(&dir, "g.json", &json!({"D": {"1": "tau1*q^-1 + tau2", "3": "Psi2(tau1)"}}));
    let mult = write(&dir, "m.json", &json!({"D": {"2": "1 + tau1*q"}}));
    let cases: Vec<Vec<&str>> = vec![
        vec!["flow", "--kind", "string", "--with", s(&string), s(&point)],
        vec!["flow", "--kind", "generalized", "--with", s(&general), s(&point)],
        vec!["multiply", "--with", s(&mult), s(&point)],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out = dir.path().join(format!("moved{i}.json"));
        let o = bin().args(args).args(["-o", s(&out)]).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(run(&["check", s(&out)]).status.code(), Some(0), "case {i}");
    }
    let bad = write(&dir, "bad.json", &json!({"D": {"1": "1 + tau1"}}));
    assert_eq!(run(&["flow", "--kind", "generalized", "--with", s(&bad), s(&point)]).status.code(), Some(2));
}

#[test]
fn operator_transforms() {
    let dir = TempDir::new().unwrap();
    let t3 = write(
        &dir,
        "t3.json",
        &json!({
            "config": {"D": 2, "E": 4, "G": 2},
            "nil": [1],
            "f": [[[[0], "1"]], [[[1], "q"]]],
            "ops": {"1": {"tag": 1, "terms": [[[0], [1], "tau1"]]}}
        }),
    );
    let o = run(&["transform3", s(&t3)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["g"].as_array().unwrap().len(), 2);

    let t4 = write(
        &dir,
        "t4.json",
        &json!({
            "config": {"D": 2, "E": 4, "G": 2},
            "nil": [1],
            "basis": [[0], [1]],
            "f": [[[[0], "1"], [[1], "tau2"]]],
            "c": [[0, 1, "1 + tau1*q"], [1, 1, "2"]],
            "tau": [[0, 1, "tau1"], [1, 2, "tau2"]]
        }),
    );
    let o = run(&["transform4", s(&t4)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["operator_form_agrees"], json!(true));
}

#[test]
fn identity_suites() {
    let o = run(&["identities", "todd"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["passed"], json!(true));
    let o = run(&["--E", "6", "identities", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["--E", "6", "identities", "box-delta", "--perturb"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("box"));
    assert_eq!(run(&["identities", "nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &json!({"D": 1, "E": 4, "R": 5}));
    let o = run(&["--config", s(&cfg), "--R", "2", "generate"]);
    let v = stdout_json(&o);
    assert_eq!(v["config"]["R"], json!(2));
    assert_eq!(v["config"]["D"], json!(1));
    let bad = write(&dir, "bad.json", &json!({"D": 3, "E": 3}));
    assert_eq!(run(&["--config", s(&bad), "generate"]).status.code(), Some(2));
}
