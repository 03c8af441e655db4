//! Shared fixtures and a brute-force reference for trace, rollback-trace
//! and refusal computations.
//!
//! The reference walks labelled transitions of plain configurations run by
//! run. It never builds a state graph, renumbers keys or shares a state
//! between runs, so it serves as an independent check of the
//! graph-based procedures.

#![allow(dead_code)]

use std::collections::BTreeSet;

use revy_core::lts::lts_transitions;
use revy_core::syntax::{parse_system, Action, Configuration, Key, KeyRef, Process, System};

pub const M1: &str = "eps: a.(b.0 + c.0)";
pub const M2: &str = "eps: a.b.0 + a.c.0";
pub const M3: &str = "eps: a.(b.c.0 + b.d.0)";
pub const M4: &str = "eps: a.b.c.0 + a.b.d.0";
pub const M5: &str = "eps: a.(b(g).roll<g> + c.0)";
pub const M6: &str = "eps: a(g).(b.roll<g> + c.0)";
pub const FIG4: [(&str, &str); 6] = [("M1", M1), ("M2", M2), ("M3", M3), ("M4", M4), ("M5", M5), ("M6", M6)];

pub const INTRO_M: &str = "new a. (eps: a.c.0 | eps: a.0 | eps: 'a.0)";
pub const INTRO_N: &str = "new a. (eps: a.c.0 | eps: a(g).roll<g> | eps: 'a.0)";
pub const INTRO_TEST: &str = "'c.omega";

pub fn sys(s: &str) -> System {
    parse_system(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub fn init(s: &str) -> Configuration {
    Configuration::initial(sys(s))
}

/// Keyless rendering of an action sequence, `eps` when empty.
pub fn word(actions: &[Action]) -> String {
    if actions.is_empty() {
        "eps".into()
    } else {
        actions.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Every run of at most `depth` transitions: observable actions and the end.
pub fn runs(c: &Configuration, depth: usize) -> Vec<(Vec<Action>, Configuration)> {
    let mut out = vec![(Vec::new(), c.clone())];
    let mut frontier = vec![(Vec::new(), c.clone())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (obs, conf) in &frontier {
            for (label, succ) in lts_transitions(conf).expect("transitions") {
                let mut obs = obs.clone();
                if !label.action.is_internal() {
                    obs.push(label.action.clone());
                }
                next.push((obs, succ));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn traces(c: &Configuration, depth: usize) -> BTreeSet<String> {
    runs(c, depth).into_iter().map(|(obs, _)| word(&obs)).collect()
}

fn process_offers_roll(p: &Process, ks: &BTreeSet<Key>) -> bool {
    match p {
        Process::Roll(KeyRef::Key(k)) => ks.contains(k),
        Process::Par(a, b) => process_offers_roll(a, ks) || process_offers_roll(b, ks),
        Process::Restrict(_, q) => process_offers_roll(q, ks),
        _ => false,
    }
}

/// Some top-level thread is `roll<k>` for a `k` in `ks`.
pub fn offers_roll(m: &System, ks: &BTreeSet<Key>) -> bool {
    match m {
        System::Par(a, b) => offers_roll(a, ks) || offers_roll(b, ks),
        System::Restrict(_, body) => offers_roll(body, ks),
        System::Named(_, p) => process_offers_roll(p, ks),
        System::Nil | System::Memory { .. } => false,
    }
}

pub fn rolls(c: &Configuration, depth: usize) -> BTreeSet<String> {
    let ks: BTreeSet<Key> = c.history.keys().iter().copied().collect();
    runs(c, depth)
        .into_iter()
        .filter(|(_, end)| offers_roll(&end.system, &ks))
        .map(|(obs, _)| word(&obs))
        .collect()
}

/// Brute-force membership of `(t; V; W)` in the refusal set of `m`; traces
/// are keyless words such as `a,b`.
pub fn refuses(m: &str, t: &str, v: &[&str], w: &[&str], depth: usize) -> bool {
    runs(&init(m), depth).into_iter().filter(|(obs, _)| word(obs) == t).any(|(_, c)| {
        let tr = traces(&c, depth);
        let rl = rolls(&c, depth);
        v.iter().all(|x| !rl.contains(*x)) && w.iter().all(|x| !tr.contains(*x))
    })
}
