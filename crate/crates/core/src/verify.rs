//! Randomised property suites over generated systems.
//!
//! Each suite runs a fixed list of properties over `n` seeded terms and
//! reports, per property, how many instances were checked and how many
//! failed, with the first failure for reproduction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gen::{GenConfig, TermGen};
use crate::lts::{build_graph, lts_states_with_key, GraphOptions, Label, StateGraph};
use crate::preorders::{earliest_state, roll_set, trace_set};
use crate::reduction::{backward_states, forward_steps, rollback_one, rollback_to, well_formed, State};
use crate::syntax::{canonicalize, keys_of_system, Configuration, DepHistory, Key, System};
use crate::traces::{canonical_keys, complement, observable, type_trace, unzip_trace, zip_traces, Trace, TypedTrace};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Suite {
    Lemmas,
    Zip,
    Props,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "zip" => Ok(Suite::Zip),
            "props" => Ok(Suite::Props),
            other => Err(Error::Invalid(format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemmas => "lemmas",
            Suite::Zip => "zip",
            Suite::Props => "props",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct PropertyCount {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub n: usize,
    pub seed: u64,
    pub properties: Vec<PropertyCount>,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.properties.iter().map(|p| p.violations).sum()
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v["violations"] = self.violations().into();
        v
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} (n = {}, seed = {})", self.suite, self.n, self.seed)?;
        let width = self.properties.iter().map(|p| p.name.len()).max().unwrap_or(0);
        for p in &self.properties {
            writeln!(f, "  {:width$}  checked {:>7}  violations {}", p.name, p.checked, p.violations)?;
            if let Some(e) = &p.example {
                writeln!(f, "    first violation: {e}")?;
            }
        }
        write!(f, "total violations: {}", self.violations())
    }
}

struct Tally(Vec<PropertyCount>);

impl Tally {
    fn new(names: &[&'static str]) -> Self {
        Tally(names.iter().map(|&name| PropertyCount { name, checked: 0, violations: 0, example: None }).collect())
    }

    fn check(&mut self, i: usize, ok: bool, detail: impl FnOnce() -> String) {
        let p = &mut self.0[i];
        p.checked += 1;
        if !ok {
            p.violations += 1;
            if p.example.is_none() {
                p.example = Some(detail());
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            a.checked += b.checked;
            a.violations += b.violations;
            if a.example.is_none() {
                a.example = b.example;
            }
        }
        self
    }
}

/// Depth that exhausts every recursion-free term of the default generator.
const SUITE_DEPTH: usize = 8;
const ZIP_DEPTH: usize = 4;

pub fn run_suite(suite: Suite, n: usize, seed: u64) -> SuiteReport {
    let (names, tallies): (&[&'static str], Vec<Tally>) = match suite {
        Suite::Lemmas => {
            let terms = TermGen::new(seed, GenConfig::default()).systems(n);
            (LEMMA_NAMES, terms.par_iter().map(lemma_checks).collect())
        }
        Suite::Zip => {
            let cfg = GenConfig { max_prefixes: 3, max_components: 2, ..GenConfig::default() };
            let mut g = TermGen::new(seed, cfg);
            let pairs: Vec<(System, System, u64)> = (0..n).map(|i| (g.system(), g.system(), seed ^ i as u64)).collect();
            (ZIP_NAMES, pairs.par_iter().map(|(l, r, s)| zip_checks(l, r, *s)).collect())
        }
        Suite::Props => {
            let terms = TermGen::new(seed, GenConfig::default()).systems(n);
            (PROP_NAMES, terms.par_iter().map(prop_checks).collect())
        }
    };
    let total = tallies.into_iter().fold(Tally::new(names), Tally::merge);
    SuiteReport { suite: suite.to_string(), n, seed, properties: total.0 }
}

const LEMMA_NAMES: &[&str] = &[
    "rollback determinism",
    "forward-then-rollback roundtrip",
    "well-formedness preserved",
    "Roll subset of Tr",
    "keys preserved by canonicalization",
    "roll-free terms have no rollback",
];

fn mirrored(m: &System) -> System {
    match m {
        System::Par(a, b) => System::par(mirrored(b), mirrored(a)),
        System::Restrict(n, b) => System::restrict(n.clone(), mirrored(b)),
        other => other.clone(),
    }
}

fn lemma_checks(m: &System) -> Tally {
    let mut t = Tally::new(LEMMA_NAMES);
    let root = Configuration::initial(m.clone());
    let g = match build_graph(&root, &GraphOptions::reductions(SUITE_DEPTH, true)) {
        Ok(g) => g,
        Err(e) => {
            t.check(2, false, || format!("{m}: {e}"));
            return t;
        }
    };
    let has_roll = m.contains_roll();
    for s in &g.states {
        let c = s.to_configuration();
        t.check(2, well_formed(&c), || format!("{c}"));

        // Rollback results agree across presentations of the same state.
        if let Ok(back) = backward_states(s) {
            for (k, undone, target) in back {
                let agree = [c.system.clone(), mirrored(&c.system)].iter().all(|sys| {
                    canonicalize(&rollback_to(sys, &undone)).is_ok_and(|r| r == target.system)
                });
                t.check(0, agree, || format!("{c} rolling back {k}"));
            }
        }

        match forward_steps(&c) {
            Ok(steps) => {
                for step in steps {
                    let undone = rollback_one(&step.successor.system, step.key);
                    let ok = step.successor.history.tail() == c.history
                        && canonicalize(&undone).is_ok_and(|u| u == s.system);
                    t.check(1, ok, || format!("{c} via key {}", step.key));
                    let raw = &step.successor.system;
                    let ok = canonicalize(raw).is_ok_and(|cs| cs.keys() == keys_of_system(raw));
                    t.check(4, ok, || format!("{}", step.successor));
                }
            }
            Err(e) => t.check(1, false, || format!("{c}: {e}")),
        }

        let ok = match (roll_set(&c, SUITE_DEPTH), trace_set(&c, SUITE_DEPTH)) {
            (Ok(r), Ok(tr)) => r.traces.is_subset(&tr.traces),
            _ => false,
        };
        t.check(3, ok, || format!("{c}"));

        if !has_roll {
            t.check(5, g.backward.iter().all(Vec::is_empty), || format!("{m}"));
        }
    }
    t
}

const ZIP_NAMES: &[&str] = &[
    "unzip then zip recovers the run",
    "zipped component traces are realizable",
    "explored traces are typed",
    "key permutation invariance",
];

/// Label sequences and end states of forward paths of at most `depth` edges.
fn paths(g: &StateGraph, depth: usize, cap: usize) -> Vec<(Trace, usize)> {
    let mut out = vec![(Trace::empty(), StateGraph::ROOT)];
    let mut i = 0;
    while i < out.len() && out.len() < cap {
        let (t, node) = out[i].clone();
        i += 1;
        if t.len() == depth {
            continue;
        }
        for (l, j) in &g.forward[node] {
            if out.len() >= cap {
                break;
            }
            out.push((t.extended(l.clone()), *j));
        }
    }
    out
}

/// Whether `s` can perform exactly the labelled trace `t`.
fn realizable(s: &State, t: &[Label]) -> Result<bool> {
    let Some((l, rest)) = t.split_first() else {
        return Ok(true);
    };
    if s.history.contains(l.key) {
        return Ok(false);
    }
    for (m, next) in lts_states_with_key(s, l.key)? {
        if m == *l && realizable(&next, rest)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Injective renamings of `t2`'s keys into `t1`'s keys or fresh keys.
fn key_alignments(t1: &Trace, t2: &Trace) -> Vec<Trace> {
    let k1 = t1.keys();
    let k2 = t2.keys();
    let mut out = Vec::new();
    fn go(i: usize, k1: &[Key], k2: &[Key], used: &mut Vec<Key>, acc: &mut Vec<Key>, out: &mut Vec<Vec<Key>>) {
        if i == k2.len() {
            out.push(acc.clone());
            return;
        }
        let fresh = Key::Id(100 + i as u32);
        for &k in k1.iter().chain(std::iter::once(&fresh)) {
            if !used.contains(&k) {
                used.push(k);
                acc.push(k);
                go(i + 1, k1, k2, used, acc, out);
                acc.pop();
                used.pop();
            }
        }
    }
    let mut maps = Vec::new();
    go(0, &k1, &k2, &mut Vec::new(), &mut Vec::new(), &mut maps);
    for keys in maps {
        out.push(Trace(t2.0.iter().zip(keys).map(|(l, k)| Label::new(l.action.clone(), k)).collect()));
    }
    out
}

fn zip_checks(left: &System, right: &System, seed: u64) -> Tally {
    let mut t = Tally::new(ZIP_NAMES);
    let composed = System::par(left.clone(), right.clone());
    let opts = GraphOptions::lts(ZIP_DEPTH);
    let g = match build_graph(&Configuration::initial(composed.clone()), &opts) {
        Ok(g) => g,
        Err(e) => {
            t.check(0, false, || format!("{composed}: {e}"));
            return t;
        }
    };
    let eps = DepHistory::empty();
    for (trace, end) in paths(&g, ZIP_DEPTH, 400) {
        let ok = type_trace(&eps, &trace).is_ok_and(|ty| ty.after == g.states[end].history);
        t.check(2, ok, || format!("{composed}: {trace}"));
        if !trace.is_empty() && observable(&trace).is_empty() {
            let run = TypedTrace { before: eps.clone(), trace: trace.clone(), after: g.states[end].history.clone() };
            let ok = unzip_trace(left, right, &run).is_ok_and(|pairs| {
                !pairs.is_empty()
                    && pairs.iter().all(|(a, b)| {
                        observable(&a.trace) == complement(&observable(&b.trace))
                            && zip_traces(a, b, &eps).is_ok_and(|z| z.contains(&run))
                    })
            });
            t.check(0, ok, || format!("{left} || {right}: {trace}"));
        }
    }

    // Zip independently enumerated component traces and replay the result.
    let component = |m: &System| -> Vec<Trace> {
        build_graph(&Configuration::initial(m.clone()), &GraphOptions::lts(2))
            .map(|g| paths(&g, 2, 40).into_iter().map(|(tr, _)| tr).collect())
            .unwrap_or_default()
    };
    let (lt, rt) = (component(left), component(right));
    let start = State::initial(&composed);
    for t1 in &lt {
        for t2 in &rt {
            for t2k in key_alignments(t1, t2) {
                let (Ok(a), Ok(b)) = (type_trace(&eps, t1), type_trace(&eps, &t2k)) else { continue };
                let Ok(zs) = zip_traces(&a, &b, &eps) else { continue };
                for z in zs {
                    let ok = start.as_ref().is_ok_and(|s| realizable(s, &z.trace.0).unwrap_or(false));
                    t.check(1, ok, || format!("{left} || {right}: {} with {} gives {}", t1, t2k, z.trace));
                }
            }
        }
    }

    // Renaming the keys of a trace keeps it realizable.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Ok(lg) = build_graph(&Configuration::initial(left.clone()), &opts) {
        let root = lg.root().clone();
        for (trace, _) in paths(&lg, ZIP_DEPTH, 200).into_iter().filter(|(tr, _)| !tr.is_empty()) {
            let mut keys: BTreeSet<u32> = BTreeSet::new();
            while keys.len() < trace.len() {
                keys.insert(rng.gen_range(1..1000));
            }
            let mut keys: Vec<u32> = keys.into_iter().collect();
            for i in (1..keys.len()).rev() {
                keys.swap(i, rng.gen_range(0..=i));
            }
            let permuted = Trace(trace.0.iter().zip(&keys).map(|(l, k)| Label::new(l.action.clone(), Key::Id(*k))).collect());
            let ok = canonical_keys(&permuted) == canonical_keys(&trace) && realizable(&root, &permuted.0).unwrap_or(false);
            t.check(3, ok, || format!("{left}: {trace} as {permuted}"));
        }
    }
    t
}

const PROP_NAMES: &[&str] = &[
    "rollback adds no reachable state to an initial configuration",
    "earliest state reaches only forward-reachable states",
];

fn state_set(g: &StateGraph) -> BTreeSet<&State> {
    g.states.iter().collect()
}

fn prop_checks(m: &System) -> Tally {
    let mut t = Tally::new(PROP_NAMES);
    let root = Configuration::initial(m.clone());
    let graphs = (
        build_graph(&root, &GraphOptions::reductions(SUITE_DEPTH, true)),
        build_graph(&root, &GraphOptions::reductions(SUITE_DEPTH, false)),
    );
    let (Ok(full), Ok(fwd)) = graphs else {
        t.check(0, false, || format!("{m}: exploration failed"));
        return t;
    };
    t.check(0, state_set(&full) == state_set(&fwd), || format!("{m}"));

    let mut memo: BTreeMap<State, bool> = BTreeMap::new();
    for s in &full.states {
        let c = s.to_configuration();
        let ok = earliest_state(&c, SUITE_DEPTH).and_then(|e| {
            let key = crate::lts::canonical_state(&e)?;
            if let Some(&v) = memo.get(&key) {
                return Ok(v);
            }
            let a = build_graph(&e, &GraphOptions::reductions(SUITE_DEPTH, true))?;
            let b = build_graph(&e, &GraphOptions::reductions(SUITE_DEPTH, false))?;
            let v = state_set(&a) == state_set(&b);
            memo.insert(key, v);
            Ok(v)
        });
        t.check(1, ok.unwrap_or(false), || format!("{c}"));
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_are_clean() {
        for suite in [Suite::Lemmas, Suite::Zip, Suite::Props] {
            let r = run_suite(suite, 12, 3);
            assert_eq!(r.violations(), 0, "{r}");
            assert!(r.properties.iter().all(|p| p.checked > 0 || p.name.contains("roll-free")), "{r}");
        }
    }

    #[test]
    fn deterministic_reports() {
        assert_eq!(run_suite(Suite::Zip, 6, 9), run_suite(Suite::Zip, 6, 9));
    }

    #[test]
    fn suite_names() {
        assert_eq!("zip".parse::<Suite>().unwrap(), Suite::Zip);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn alignments() {
        let t1 = Trace::parse("a(1)").unwrap();
        let t2 = Trace::parse("'a(1)").unwrap();
        let al = key_alignments(&t1, &t2);
        assert_eq!(al.len(), 2);
    }
}
