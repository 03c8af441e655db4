//! Running tests against systems and generating characteristic tests.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::lts::{build_graph, Edge, GraphOptions, StateGraph};
use crate::preorders::Refusal;
use crate::reduction::omega_barb_state;
use crate::syntax::{Action, Configuration, Key, KeyRef, KeyVar, Process, System};
use crate::traces::{observable, Trace};

/// `ε ⊢ m ∥ ε: t`.
pub fn compose(m: &System, t: &Process) -> Configuration {
    Configuration::initial(System::par(m.clone(), System::Named(Key::Eps, t.clone())))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl TestStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TestStatus::Pass => "pass",
            TestStatus::Fail => "fail",
            TestStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct RunStep {
    pub direction: &'static str,
    pub key: String,
    pub state: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct TestVerdict {
    pub status: TestStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_run: Option<Vec<RunStep>>,
    pub states: usize,
    pub truncated: bool,
}

impl TestVerdict {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("verdicts serialize")
    }

    pub fn passed(&self) -> bool {
        self.status == TestStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == TestStatus::Fail
    }
}

fn run_to(g: &StateGraph, target: usize) -> Vec<RunStep> {
    g.path_to(target)
        .into_iter()
        .map(|(_, edge, to)| {
            let (direction, key) = match edge {
                Edge::Forward(l) => ("forward", l.key.to_string()),
                Edge::Backward(k) => ("backward", k.to_string()),
            };
            RunStep { direction, key, state: g.states[to].to_string() }
        })
        .collect()
}

/// Passes when some forward run of the composition reaches an `omega` barb.
/// Rollback cannot reach anything new from an initial configuration, so
/// the search is forward only.
pub fn may_pass(m: &System, t: &Process, depth: usize) -> Result<TestVerdict> {
    let g = build_graph(&compose(m, t), &GraphOptions::reductions(depth, false))?;
    let hit = g.states.iter().any(omega_barb_state);
    let status = match (hit, g.truncated) {
        (true, _) => TestStatus::Pass,
        (false, false) => TestStatus::Fail,
        (false, true) => TestStatus::Inconclusive,
    };
    Ok(TestVerdict { status, witness_run: None, states: g.len(), truncated: g.truncated })
}

/// States from which some state satisfying `seed` is reachable.
fn co_reachable(g: &StateGraph, seed: impl Fn(usize) -> bool) -> Vec<bool> {
    let n = g.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (_, j) in &g.forward[i] {
            preds[*j].push(i);
        }
        for (_, j) in &g.backward[i] {
            preds[*j].push(i);
        }
    }
    let mut mark = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| seed(i)).collect();
    for &i in &queue {
        mark[i] = true;
    }
    while let Some(j) = queue.pop_front() {
        for &i in &preds[j] {
            if !mark[i] {
                mark[i] = true;
                queue.push_back(i);
            }
        }
    }
    mark
}

/// Passes when every reachable state, including those reached by rollback,
/// can still reach an `omega` barb. A state that cannot reach a barb fails
/// the test only if it also cannot reach the unexplored frontier.
pub fn shd_pass(m: &System, t: &Process, depth: usize) -> Result<TestVerdict> {
    let g = build_graph(&compose(m, t), &GraphOptions::reductions(depth, true))?;
    let good = co_reachable(&g, |i| omega_barb_state(&g.states[i]));
    let open = co_reachable(&g, |i| g.frontier[i]);
    let stuck = (0..g.len()).filter(|&i| !good[i] && !open[i]).min_by(|&a, &b| g.states[a].cmp(&g.states[b]));
    let (status, witness_run) = match stuck {
        Some(i) => (TestStatus::Fail, Some(run_to(&g, i))),
        None if g.truncated => (TestStatus::Inconclusive, None),
        None => (TestStatus::Pass, None),
    };
    Ok(TestVerdict { status, witness_run, states: g.len(), truncated: g.truncated })
}

fn complement_prefix(l: &crate::lts::Label, cont: Process) -> Process {
    Process::prefix(l.action.complement().unwrap_or(Action::Internal), None, cont)
}

/// Sequential complement of `t` ending in `omega`.
pub fn gen_safety_test(t: &Trace) -> Process {
    observable(t).labels().iter().rev().fold(Process::omega(), |acc, l| complement_prefix(l, acc))
}

fn sum(parts: impl IntoIterator<Item = Process>) -> Process {
    parts.into_iter().fold(Process::nil(), |acc, p| Process::choice(acc, p).expect("summands are sums"))
}

fn along(t: &Trace, tail: Process) -> Process {
    t.labels().iter().rev().fold(tail, |acc, l| complement_prefix(l, acc))
}

/// Test `(t; V; W)`: follow `t` with `omega` offered at every point, then
/// commit under a fresh key to offer `V`, with success only through `W`
/// or by rolling back.
pub fn gen_liveness_test(r: &Refusal) -> Process {
    let g = KeyVar::new("g");
    let refused: BTreeSet<&Trace> = r.v.difference(&r.w).collect();
    let offers = sum(
        refused
            .into_iter()
            .map(|t| along(t, Process::nil()))
            .chain(r.w.iter().map(|t| along(t, Process::omega()))),
    );
    let inner = Process::prefix(
        Action::Internal,
        Some(g.clone()),
        Process::par(offers, Process::Roll(KeyRef::Var(g))),
    );
    let start = sum([Process::omega(), Process::prefix(Action::Internal, None, inner)]);
    r.t.labels()
        .iter()
        .rev()
        .fold(start, |acc, l| sum([Process::omega(), complement_prefix(l, acc)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{omega_barb, well_formed};
    use crate::syntax::{parse_process, parse_system};

    const M: &str = "new a. (eps: a.c.0 | eps: a.0 | eps: 'a.0)";
    const N: &str = "new a. (eps: a.c.0 | eps: a(g).roll<g> | eps: 'a.0)";
    const M1: &str = "eps: a.(b.0 + c.0)";
    const M2: &str = "eps: a.b.0 + a.c.0";
    const M3: &str = "eps: a.(b.c.0 + b.d.0)";
    const M4: &str = "eps: a.b.c.0 + a.b.d.0";
    const M5: &str = "eps: a.(b(g).roll<g> + c.0)";
    const M6: &str = "eps: a(g).(b.roll<g> + c.0)";

    fn sys(s: &str) -> System {
        parse_system(s).unwrap()
    }

    fn test(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    #[test]
    fn composition() {
        let c = compose(&sys("eps: 0"), &Process::omega());
        assert_eq!(c.to_string(), "eps |- eps: 0 | eps: omega");
        let c = compose(&sys(M1), &test("'a.'b.omega"));
        assert!(c.is_initial());
        assert!(well_formed(&c));
    }

    #[test]
    fn may() {
        assert!(may_pass(&sys(M1), &test("'a.'b.omega"), 6).unwrap().passed());
        let v = may_pass(&sys(M1), &test("'a.'d.omega"), 6).unwrap();
        assert!(v.failed());
        assert!(!v.truncated);
        assert!(may_pass(&sys("eps: 0"), &Process::omega(), 6).unwrap().passed());
    }

    #[test]
    fn intro_example() {
        let t = test("'c.omega");
        let v = shd_pass(&sys(M), &t, 6).unwrap();
        assert!(v.failed());
        assert!(!v.witness_run.as_ref().unwrap().is_empty());
        assert!(shd_pass(&sys(N), &t, 6).unwrap().passed());
    }

    #[test]
    fn distinguishing_tests() {
        let t12 = test("omega + 'a.'b.omega");
        assert!(shd_pass(&sys(M1), &t12, 6).unwrap().passed());
        assert!(shd_pass(&sys(M2), &t12, 6).unwrap().failed());
        let t34 = test("omega + 'a.tau(g).(roll<g> | 'b.'d.omega)");
        assert!(shd_pass(&sys(M3), &t34, 6).unwrap().passed());
        assert!(shd_pass(&sys(M4), &t34, 6).unwrap().failed());
        let t56 = test("omega + 'a.'b.0");
        assert!(shd_pass(&sys(M6), &t56, 6).unwrap().passed());
        assert!(shd_pass(&sys(M5), &t56, 6).unwrap().failed());
    }

    #[test]
    fn shd_inconclusive_on_truncation() {
        let v = shd_pass(&sys("eps: rec X. tau.X"), &test("tau.0"), 2).unwrap();
        assert_eq!(v.status, TestStatus::Inconclusive);
        assert!(v.truncated);
    }

    #[test]
    fn safety_tests() {
        assert_eq!(gen_safety_test(&Trace::empty()).to_string(), "omega");
        assert_eq!(gen_safety_test(&Trace::parse("a,b").unwrap()).to_string(), "'a.'b.omega");
    }

    #[test]
    fn liveness_tests() {
        let r = Refusal::parse("eps", &["eps"], &[]).unwrap();
        assert_eq!(gen_liveness_test(&r).to_string(), "omega + tau.tau(g).(0 | roll<g>)");
        let r = Refusal::parse("a", &["eps", "b"], &["b"]).unwrap();
        assert_eq!(
            gen_liveness_test(&r).to_string(),
            "omega + 'a.(omega + tau.tau(g).('b.omega | roll<g>))"
        );
        let r = Refusal::parse("a", &["eps", "b", "c"], &["b"]).unwrap();
        assert_eq!(
            gen_liveness_test(&r).to_string(),
            "omega + 'a.(omega + tau.tau(g).('c.0 + 'b.omega | roll<g>))"
        );
    }

    #[test]
    fn inner_liveness_term_has_no_barb() {
        let r = Refusal::parse("a", &["eps", "b"], &["b"]).unwrap();
        let Process::Sum(bs) = gen_liveness_test(&r) else { panic!() };
        let after_a = &bs.iter().find(|b| !b.action.is_internal() && b.action.channel().is_some_and(|c| !c.is_omega())).unwrap().continuation;
        let Process::Sum(inner) = after_a else { panic!() };
        let committed = &inner.iter().find(|b| b.action.is_internal()).unwrap().continuation;
        assert!(!omega_barb(&Configuration::initial(System::Named(Key::Eps, committed.clone()))));
    }

    #[test]
    fn refused_tests_fail() {
        let r2 = Refusal::parse("a", &["eps", "b"], &["b"]).unwrap();
        assert!(shd_pass(&sys(M2), &gen_liveness_test(&r2), 8).unwrap().failed());
        assert!(shd_pass(&sys(M1), &gen_liveness_test(&r2), 8).unwrap().passed());
        let r5 = Refusal::parse("a", &["eps", "b"], &[]).unwrap();
        assert!(shd_pass(&sys(M5), &gen_liveness_test(&r5), 8).unwrap().failed());
        assert!(shd_pass(&sys(M6), &gen_liveness_test(&r5), 8).unwrap().passed());
    }

    #[test]
    fn verdict_json() {
        let v = shd_pass(&sys(M), &test("'c.omega"), 6).unwrap().to_json();
        assert_eq!(v["status"], "fail");
        assert!(v["witness_run"].is_array());
        assert_eq!(v["truncated"], false);
        let v = may_pass(&sys(M1), &test("'a.'b.omega"), 6).unwrap().to_json();
        assert!(v.get("witness_run").is_none());
    }
}
