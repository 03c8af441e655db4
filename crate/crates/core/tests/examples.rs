//! The corpus under `corpus/fig4`, driven through the library.

mod support;

use std::path::PathBuf;

use revy_core::preorders::{liveness_leq_refusal, safety_leq, RefusalBounds, Verdict};
use revy_core::syntax::{parse_process, parse_system, Process, System};
use revy_core::testing::{gen_liveness_test, gen_safety_test, may_pass, shd_pass, TestStatus};
use support::*;

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fig4").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn system(name: &str) -> System {
    parse_system(&corpus(name)).unwrap()
}

fn test(name: &str) -> Process {
    parse_process(&corpus(name)).unwrap()
}

#[test]
fn corpus_files_match_fixtures() {
    for (i, (_, src)) in FIG4.iter().enumerate() {
        assert_eq!(system(&format!("m{}.ccs", i + 1)), sys(src));
    }
    assert_eq!(system("intro_m.ccs"), sys(INTRO_M));
    assert_eq!(system("intro_n.ccs"), sys(INTRO_N));
    assert_eq!(test("intro.test"), parse_process(INTRO_TEST).unwrap());
}

#[test]
fn expected_table() {
    let table = corpus("expected.tsv");
    let mut rows = 0;
    for line in table.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let [mode, m, t, verdict] = cols[..] else { panic!("bad row {line}") };
        let v = match mode {
            "shd" => shd_pass(&system(m), &test(t), 6).unwrap(),
            "may" => may_pass(&system(m), &test(t), 6).unwrap(),
            _ => panic!("mode {mode}"),
        };
        assert_eq!(v.status.as_str(), verdict, "{line}");
        assert!(!v.truncated, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 10);
}

#[test]
fn failing_should_tests_come_with_a_run() {
    let v = shd_pass(&system("intro_m.ccs"), &test("intro.test"), 6).unwrap();
    assert_eq!(v.status, TestStatus::Fail);
    let run = v.witness_run.expect("witness run");
    assert!(!run.is_empty());
    assert!(shd_pass(&system("intro_n.ccs"), &test("intro.test"), 6).unwrap().witness_run.is_none());
}

#[test]
fn distinguishing_tests_separate_the_pair() {
    let (m1, m3) = (system("m1.ccs"), system("m3.ccs"));
    let Verdict::Fails(t) = safety_leq(&m3, &m1, 6).unwrap() else { panic!("M3 has extra traces") };
    let probe = gen_safety_test(&t);
    assert!(may_pass(&m3, &probe, 6).unwrap().passed());
    assert!(may_pass(&m1, &probe, 6).unwrap().failed());

    let (m1, m2) = (system("m1.ccs"), system("m2.ccs"));
    let Verdict::Fails(r) = liveness_leq_refusal(&m2, &m1, 6, None, &RefusalBounds::default()).unwrap() else {
        panic!("M2 has extra refusals")
    };
    let probe = gen_liveness_test(&r);
    assert!(shd_pass(&m2, &probe, 6).unwrap().failed());
    assert!(shd_pass(&m1, &probe, 6).unwrap().passed());
}

#[test]
fn rollback_only_matters_for_liveness() {
    let (m5, m6) = (system("m5.ccs"), system("m6.ccs"));
    assert!(safety_leq(&m5, &m6, 6).unwrap().holds());
    assert!(safety_leq(&m6, &m5, 6).unwrap().holds());
    let v = liveness_leq_refusal(&m5, &m6, 6, None, &RefusalBounds::default()).unwrap();
    assert_eq!(v.status(), "fails");
}
