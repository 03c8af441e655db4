//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on failure.

mod support;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use revy_core::preorders::{liveness_leq_refusal, refusal_member, safety_leq, trace_set, Refusal, RefusalBounds, Verdict};
use revy_core::syntax::{parse_process, Action};
use revy_core::testing::{gen_liveness_test, gen_safety_test, may_pass, shd_pass, TestStatus};
use revy_core::traces::Trace;
use revy_core::verify::{run_suite, Suite, SuiteReport};
use support::*;

const DEPTH: usize = 6;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg.into()) }
}

fn shd(system: &str, test: &str) -> Result<(TestStatus, bool, Duration), String> {
    let start = Instant::now();
    let v = shd_pass(&sys(system), &parse_process(test).map_err(|e| e.to_string())?, DEPTH).map_err(|e| e.to_string())?;
    Ok((v.status, v.truncated, start.elapsed()))
}

fn intro_example() -> Check {
    for (name, m, want) in [("M", INTRO_M, TestStatus::Fail), ("N", INTRO_N, TestStatus::Pass)] {
        let (got, truncated, took) = shd(m, INTRO_TEST)?;
        ensure(got == want, format!("{name}: {got:?}"))?;
        ensure(!truncated, format!("{name}: truncated graph"))?;
        ensure(took < Duration::from_secs(1), format!("{name}: {took:?}"))?;
    }
    Ok("M fails, N passes".into())
}

fn liveness_table() -> Check {
    let rows = [
        (M1, "omega + 'a.'b.omega", TestStatus::Pass),
        (M2, "omega + 'a.'b.omega", TestStatus::Fail),
        (M3, "omega + 'a.tau(g).(roll<g> | 'b.'d.omega)", TestStatus::Pass),
        (M4, "omega + 'a.tau(g).(roll<g> | 'b.'d.omega)", TestStatus::Fail),
        (M6, "omega + 'a.'b.0", TestStatus::Pass),
        (M5, "omega + 'a.'b.0", TestStatus::Fail),
    ];
    let start = Instant::now();
    for (m, t, want) in rows {
        let (got, truncated, _) = shd(m, t)?;
        ensure(got == want && !truncated, format!("{m} against {t}: {got:?}"))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), format!("{took:?}"))?;
    Ok(format!("6 rows in {took:.2?}"))
}

fn words(m: &str) -> Result<BTreeSet<String>, String> {
    let ts = trace_set(&init(m), DEPTH).map_err(|e| e.to_string())?;
    ensure(ts.complete, format!("{m}: incomplete trace set"))?;
    Ok(ts.traces.iter().map(Trace::action_string).collect())
}

fn safety_equivalences() -> Check {
    let expected: BTreeSet<String> = ["eps", "a", "a,b", "a,c"].map(String::from).into();
    let group_a = [M1, M2, M5, M6];
    let group_b = [M3, M4];
    for m in group_a {
        ensure(words(m)? == expected, format!("{m}: {:?}", words(m)?))?;
    }
    ensure(words(M3)? == words(M4)?, "M3 and M4 differ")?;
    let mut witnesses = Vec::new();
    for (i, x) in group_a.iter().chain(&group_b).enumerate() {
        for (j, y) in group_a.iter().chain(&group_b).enumerate() {
            let same = (i < 4) == (j < 4);
            let v = safety_leq(&sys(x), &sys(y), DEPTH).map_err(|e| e.to_string())?;
            match (&v, same) {
                (Verdict::Holds, true) => {}
                (Verdict::Fails(t), false) => witnesses.push(t.action_string()),
                _ => return Err(format!("{x} vs {y}: {}", v.status())),
            }
        }
    }
    witnesses.sort();
    witnesses.dedup();
    Ok(format!("cross-group witnesses {}", witnesses.join(" ")))
}

fn refusal_witnesses() -> Check {
    let cases = [(M2, M1, "a", vec!["eps", "b"], vec!["b"]), (M5, M6, "a", vec!["eps", "b"], vec![])];
    let mut found = Vec::new();
    for (inside, outside, t, v, w) in &cases {
        let r = Refusal::parse(t, v, w).map_err(|e| e.to_string())?;
        let a = refusal_member(&sys(inside), &r, DEPTH).map_err(|e| e.to_string())?;
        let b = refusal_member(&sys(outside), &r, DEPTH).map_err(|e| e.to_string())?;
        ensure(a.conclusive && b.conclusive, format!("{r}: inconclusive"))?;
        ensure(a.member && !b.member, format!("{r}: membership {} / {}", a.member, b.member))?;
        ensure(refuses(inside, t, v, w, DEPTH), format!("{r}: oracle rejects"))?;
        ensure(!refuses(outside, t, v, w, DEPTH), format!("{r}: oracle accepts"))?;
        let verdict = liveness_leq_refusal(&sys(inside), &sys(outside), DEPTH, None, &RefusalBounds::default())
            .map_err(|e| e.to_string())?;
        match verdict {
            Verdict::Fails(found_r) => found.push(found_r.to_string()),
            other => return Err(format!("liveness check: {}", other.status())),
        }
    }
    Ok(format!("liveness witnesses {}", found.join(" ")))
}

fn suite(s: Suite, n: usize, limit: Option<Duration>) -> Check {
    let start = Instant::now();
    let r: SuiteReport = run_suite(s, n, 42);
    let took = start.elapsed();
    if r.violations() != 0 {
        return Err(format!("{} violations\n{r}", r.violations()));
    }
    if let Some(limit) = limit {
        ensure(took < limit, format!("{took:?}"))?;
    }
    let checked: usize = r.properties.iter().map(|p| p.checked).sum();
    Ok(format!("n={n}, {checked} checks, {took:.2?}"))
}

fn all_traces(max: usize) -> Vec<Trace> {
    let actions: Vec<Action> = ["a", "b", "c", "d"]
        .iter()
        .flat_map(|n| [Action::input(n), Action::output(n)])
        .collect();
    let mut level = vec![Vec::<Action>::new()];
    let mut out = vec![Trace::empty()];
    for _ in 0..max {
        level = level
            .iter()
            .flat_map(|w| actions.iter().map(move |a| [w.clone(), vec![a.clone()]].concat()))
            .collect();
        out.extend(level.iter().cloned().map(Trace::from_actions));
    }
    out
}

fn coherence() -> Check {
    let ts = all_traces(3);
    let mut checked = 0;
    for (name, src) in FIG4 {
        let m = sys(src);
        let tr = trace_set(&init(src), DEPTH).map_err(|e| e.to_string())?;
        for t in &ts {
            let v = may_pass(&m, &gen_safety_test(t), DEPTH).map_err(|e| e.to_string())?;
            ensure(v.passed() == tr.contains(t), format!("{name} {}: may {:?}", t.action_string(), v.status))?;
            checked += 1;
        }
    }
    let refusals = [("a", vec!["eps", "b"], vec!["b"]), ("a", vec!["eps", "b"], vec![])];
    for (name, src) in FIG4 {
        for (t, v, w) in &refusals {
            let r = Refusal::parse(t, v, w).map_err(|e| e.to_string())?;
            if refusal_member(&sys(src), &r, DEPTH).map_err(|e| e.to_string())?.member {
                let shd = shd_pass(&sys(src), &gen_liveness_test(&r), DEPTH).map_err(|e| e.to_string())?;
                ensure(shd.failed(), format!("{name} {r}: {:?}", shd.status))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} checks"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 introductory should-testing example", intro_example),
        ("2 liveness test table", liveness_table),
        ("3 safety equivalences", safety_equivalences),
        ("4 refusal witnesses", refusal_witnesses),
        ("5 lemma suite", || suite(Suite::Lemmas, 300, Some(Duration::from_secs(60)))),
        ("6 zip/unzip suite", || suite(Suite::Zip, 200, None)),
        ("7 reachability properties", || suite(Suite::Props, 200, None)),
        ("8 test-generation coherence", coherence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
