use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fig4").join(name)
}

fn revy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revy"))
        .args(args)
        .env_remove("REVY_STATE_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn c(name: &str) -> String {
    corpus(name).to_str().unwrap().to_string()
}

#[test]
fn fmt_normalizes_layout() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "m.ccs", "eps:a .( b.0+c.0 )");
    let o = revy(&["fmt", &f]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "eps: a.(b.0 + c.0)");
    let g = write_temp(&dir, "again.ccs", stdout(&o).trim());
    assert_eq!(stdout(&revy(&["fmt", &g])), stdout(&o));
}

#[test]
fn fmt_reports_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "bad.ccs", "eps: a.");
    let o = revy(&["fmt", &f]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset 7"));
}

#[test]
fn fmt_accepts_tests_and_configurations() {
    assert_eq!(stdout(&revy(&["fmt", &c("t34.test")])).trim(), "omega + 'a.tau(g).(roll<g> | 'b.'d.omega)");
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "conf.ccs", "1 |- 1: b.0 | mem[eps: a.b.0; 1]");
    let o = revy(&["fmt", &f]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("1 |- "));
}

#[test]
fn lts_dumps() {
    let o = revy(&["lts", "--depth", "4", &c("m1.ccs")]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("states: 3"), "{out}");
    assert!(out.contains("edges: 3"), "{out}");

    let dir = tempfile::tempdir().unwrap();
    let nil = write_temp(&dir, "nil.ccs", "eps: 0");
    let o = revy(&["lts", "--output", "json", &nil]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 1);

    let o = revy(&["lts", "--backward", "--dot", &c("intro_n_tested.ccs")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("style=dashed"));
}

#[test]
fn check_safety() {
    for (a, b) in [("m1.ccs", "m2.ccs"), ("m2.ccs", "m1.ccs"), ("m1.ccs", "m1.ccs"), ("m5.ccs", "m6.ccs")] {
        let o = revy(&["check", "safety", &c(a), &c(b)]);
        assert_eq!(code(&o), 0, "{a} {b}: {}", stdout(&o));
    }
    let o = revy(&["check", "safety", &c("m1.ccs"), &c("m3.ccs")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness trace: a,b,c"));
}

#[test]
fn check_liveness() {
    let o = revy(&["check", "liveness", &c("m1.ccs"), &c("m2.ccs")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness refusal: ([a], {eps, b}, {b})"), "{}", stdout(&o));
    assert_eq!(code(&revy(&["check", "liveness", &c("m1.ccs"), &c("m1.ccs")])), 0);
    let o = revy(&["--output", "json", "check", "liveness", &c("m6.ccs"), &c("m5.ccs")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "fails");
    assert!(v["witness"]["V"].is_array());
}

#[test]
fn golden_test_runs() {
    let table = std::fs::read_to_string(corpus("expected.tsv")).unwrap();
    for line in table.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let [mode, system, test, verdict] = cols[..] else { panic!("bad row {line}") };
        let o = revy(&["run-test", "--mode", mode, &c(system), &c(test)]);
        assert!(stdout(&o).starts_with(verdict), "{line}: {}", stdout(&o));
        assert_eq!(code(&o), if verdict == "pass" { 0 } else { 1 }, "{line}");
    }
}

#[test]
fn run_test_json_and_witness() {
    let o = revy(&["run-test", "--output", "json", &c("intro_m.ccs"), &c("intro.test")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "fail");
    assert_eq!(v["truncated"], false);
    assert!(!v["witness_run"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = revy(&["--state-cap", "1", "lts", &c("m1.ccs")]);
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_revy"))
        .args(["lts", &c("m1.ccs")])
        .env("REVY_STATE_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);

    let looping = write_temp(&dir, "loop.ccs", "eps: rec X. tau.X");
    let t = write_temp(&dir, "t.test", "tau.0");
    assert_eq!(code(&revy(&["--depth", "2", "run-test", &looping, &t])), 3);

    assert_eq!(code(&revy(&["check", "safety", "/nonexistent.ccs", &c("m1.ccs")])), 4);
    let bad = write_temp(&dir, "bad.ccs", "eps: a.");
    assert_eq!(code(&revy(&["run-test", &bad, &t])), 4);
}

#[test]
fn verify_is_clean_and_deterministic() {
    let a = revy(&["--output", "json", "verify", "--suite", "zip", "--n", "15"]);
    assert_eq!(code(&a), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["violations"], 0);
    let b = revy(&["--output", "json", "verify", "--suite", "zip", "--n", "15"]);
    assert_eq!(stdout(&a), stdout(&b));
    let o = revy(&["verify", "--suite", "lemmas", "--n", "20", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("total violations: 0"));
}
