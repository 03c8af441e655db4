//! Bounded trace sets, rollback traces, tree refusals and the two preorder
//! checks built on them.
//!
//! Every exploration is cut at a forward depth. Results carry a
//! completeness flag and verdicts are three-valued: a bound that hides
//! behaviour yields `Inconclusive` rather than a guess.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lts::{build_graph, build_graph_from, well_formed_lts, GraphOptions, StateGraph};
use crate::reduction::{rollback_barb_state, State};
use crate::syntax::{Action, Configuration, Key, System};
use crate::traces::Trace;

/// Observable traces of a configuration up to a forward depth, keys positional.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceSet {
    pub depth: usize,
    pub traces: BTreeSet<Trace>,
    pub complete: bool,
}

impl TraceSet {
    pub fn contains(&self, t: &Trace) -> bool {
        self.traces.contains(&canonical(t))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "depth": self.depth,
            "complete": self.complete,
            "traces": self.traces.iter().map(Trace::to_string).collect::<Vec<_>>(),
        })
    }
}

fn canonical(t: &Trace) -> Trace {
    Trace::from_actions(t.actions())
}

/// Every `(state, observable trace)` pair reachable in at most `depth`
/// forward edges of `g`, grouped by trace.
fn observable_runs(g: &StateGraph, depth: usize) -> BTreeMap<Trace, BTreeSet<usize>> {
    let mut seen: BTreeSet<(usize, Vec<Action>)> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert((StateGraph::ROOT, Vec::new()));
    queue.push_back((StateGraph::ROOT, Vec::new(), 0usize));
    while let Some((i, obs, steps)) = queue.pop_front() {
        if steps == depth {
            continue;
        }
        for (l, j) in &g.forward[i] {
            let mut next = obs.clone();
            if !l.is_internal() {
                next.push(l.action.clone());
            }
            if seen.insert((*j, next.clone())) {
                queue.push_back((*j, next, steps + 1));
            }
        }
    }
    let mut out: BTreeMap<Trace, BTreeSet<usize>> = BTreeMap::new();
    for (i, obs) in seen {
        out.entry(Trace::from_actions(obs)).or_default().insert(i);
    }
    out
}

/// Trace set and rollback-trace set of one state, explored from scratch.
#[derive(Clone, Debug)]
struct Observations {
    traces: BTreeSet<Trace>,
    rolls: BTreeSet<Trace>,
    complete: bool,
}

fn observe_graph(g: &StateGraph, depth: usize) -> Observations {
    let delta: BTreeSet<Key> = g.root().history.keys().iter().copied().collect();
    let runs = observable_runs(g, depth);
    let rolls = runs
        .iter()
        .filter(|(_, nodes)| nodes.iter().any(|&i| rollback_barb_state(&g.states[i], &delta)))
        .map(|(t, _)| t.clone())
        .collect();
    Observations { traces: runs.into_keys().collect(), rolls, complete: !g.truncated }
}

fn observe(s: &State, depth: usize) -> Result<Observations> {
    let g = build_graph_from(s.clone(), &GraphOptions::lts(depth))?;
    Ok(observe_graph(&g, depth))
}

fn checked_graph(c: &Configuration, depth: usize) -> Result<StateGraph> {
    if !well_formed_lts(c) {
        return Err(Error::IllFormed(format!("{c}")));
    }
    build_graph(c, &GraphOptions::lts(depth))
}

pub fn trace_set(c: &Configuration, depth: usize) -> Result<TraceSet> {
    let g = checked_graph(c, depth)?;
    let o = observe_graph(&g, depth);
    Ok(TraceSet { depth, traces: o.traces, complete: o.complete })
}

/// Observable traces leading to a state that offers a rollback of a key
/// already in the history of `c`.
pub fn roll_set(c: &Configuration, depth: usize) -> Result<TraceSet> {
    let g = checked_graph(c, depth)?;
    let o = observe_graph(&g, depth);
    Ok(TraceSet { depth, traces: o.rolls, complete: o.complete })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict<W> {
    Holds,
    Fails(W),
    Inconclusive(String),
}

impl<W> Verdict<W> {
    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails(_) => "fails",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Fails(w) => Some(w),
            _ => None,
        }
    }
}

impl Verdict<Trace> {
    pub fn to_json(&self) -> Value {
        verdict_json(self.status(), self.witness().map(|t| Value::String(t.action_string())), self)
    }
}

impl Verdict<Refusal> {
    pub fn to_json(&self) -> Value {
        verdict_json(self.status(), self.witness().map(Refusal::to_json), self)
    }
}

fn verdict_json<W>(status: &str, witness: Option<Value>, v: &Verdict<W>) -> Value {
    let mut out = json!({ "status": status });
    if let Some(w) = witness {
        out["witness"] = w;
    }
    if let Verdict::Inconclusive(reason) = v {
        out["reason"] = Value::String(reason.clone());
    }
    out
}

/// Trace inclusion `Tr(m) ⊆ Tr(n)` for initial systems.
pub fn safety_leq(m: &System, n: &System, depth: usize) -> Result<Verdict<Trace>> {
    let tm = trace_set(&Configuration::initial(m.clone()), depth)?;
    let tn = trace_set(&Configuration::initial(n.clone()), depth)?;
    let missing = tm.traces.difference(&tn.traces).next();
    Ok(match missing {
        Some(t) if tn.complete => Verdict::Fails(t.clone()),
        Some(t) => Verdict::Inconclusive(format!("{} not found before the depth bound", t.action_string())),
        None if tm.complete => Verdict::Holds,
        None => Verdict::Inconclusive("exploration of the left system truncated".into()),
    })
}

/// A tree refusal `(t; V; W)`. All traces are observable and kept with
/// positional keys; each stands for its class under key permutation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Refusal {
    pub t: Trace,
    pub v: BTreeSet<Trace>,
    pub w: BTreeSet<Trace>,
}

impl Refusal {
    pub fn new<V, W>(t: Trace, v: V, w: W) -> Result<Refusal>
    where
        V: IntoIterator<Item = Trace>,
        W: IntoIterator<Item = Trace>,
    {
        let v: BTreeSet<Trace> = v.into_iter().map(|x| canonical(&x)).collect();
        let w: BTreeSet<Trace> = w.into_iter().map(|x| canonical(&x)).collect();
        let bad = |m: &str| Err(Error::Invalid(format!("not a tree refusal: {m}")));
        if !t.is_observable() || !v.iter().chain(&w).all(Trace::is_observable) {
            return bad("traces must be observable");
        }
        if !v.contains(&Trace::empty()) {
            return bad("V must contain eps");
        }
        if v.iter().any(|x| !x.is_empty() && !v.contains(&x.prefix(x.len() - 1))) {
            return bad("V must be prefix-closed");
        }
        if w.contains(&Trace::empty()) {
            return bad("W must not contain eps");
        }
        if !w.is_subset(&v) {
            return bad("W must be a subset of V");
        }
        Ok(Refusal { t: canonical(&t), v, w })
    }

    /// Builds a refusal from keyless action strings, e.g. `("a", ["eps", "b"], ["b"])`.
    pub fn parse(t: &str, v: &[&str], w: &[&str]) -> Result<Refusal> {
        Refusal::new(
            Trace::parse(t)?,
            v.iter().map(|s| Trace::parse(s)).collect::<Result<Vec<_>>>()?,
            w.iter().map(|s| Trace::parse(s)).collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn to_json(&self) -> Value {
        let set = |s: &BTreeSet<Trace>| s.iter().map(Trace::action_string).collect::<Vec<_>>();
        json!({ "t": self.t.action_string(), "V": set(&self.v), "W": set(&self.w) })
    }

    fn refused_by(&self, o: &Observations) -> bool {
        self.v.is_disjoint(&o.rolls) && self.w.is_disjoint(&o.traces)
    }
}

impl fmt::Display for Refusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &BTreeSet<Trace>| s.iter().map(Trace::action_string).collect::<Vec<_>>().join(", ");
        write!(f, "([{}], {{{}}}, {{{}}})", self.t.action_string(), set(&self.v), set(&self.w))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Membership {
    pub member: bool,
    /// False when a deeper exploration could change the answer.
    pub conclusive: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tri {
    In,
    Out,
    Unknown,
}

/// Explored initial system with lazily observed post-trace states.
struct Explorer {
    graph: StateGraph,
    runs: BTreeMap<Trace, BTreeSet<usize>>,
    depth: usize,
    cache: HashMap<usize, Observations>,
}

impl Explorer {
    fn new(m: &System, depth: usize) -> Result<Explorer> {
        let graph = checked_graph(&Configuration::initial(m.clone()), depth)?;
        let runs = observable_runs(&graph, depth);
        Ok(Explorer { graph, runs, depth, cache: HashMap::new() })
    }

    fn complete(&self) -> bool {
        !self.graph.truncated
    }

    fn post(&mut self, t: &Trace) -> Result<Vec<Observations>> {
        let nodes: Vec<usize> = self.runs.get(t).map(|s| s.iter().copied().collect()).unwrap_or_default();
        let mut out = Vec::with_capacity(nodes.len());
        for i in nodes {
            if !self.cache.contains_key(&i) {
                let o = observe(&self.graph.states[i], self.depth)?;
                self.cache.insert(i, o);
            }
            out.push(self.cache[&i].clone());
        }
        Ok(out)
    }

    fn member(&mut self, r: &Refusal) -> Result<Tri> {
        let post = self.post(&r.t)?;
        Ok(classify(r, &post, self.complete()))
    }
}

fn classify(r: &Refusal, post: &[Observations], runs_complete: bool) -> Tri {
    if post.iter().any(|o| o.complete && r.refused_by(o)) {
        Tri::In
    } else if runs_complete && post.iter().all(|o| !r.refused_by(o)) {
        Tri::Out
    } else {
        Tri::Unknown
    }
}

/// Whether `r ∈ Ref(m)` at the given depth.
pub fn refusal_member(m: &System, r: &Refusal, depth: usize) -> Result<Membership> {
    let mut ex = Explorer::new(m, depth)?;
    Ok(match ex.member(r)? {
        Tri::In => Membership { member: true, conclusive: true },
        Tri::Out => Membership { member: false, conclusive: true },
        Tri::Unknown => Membership { member: false, conclusive: false },
    })
}

#[derive(Clone, Copy, Debug)]
pub struct RefusalBounds {
    /// Maximum number of refusals examined.
    pub budget: usize,
    pub max_v: usize,
    pub max_w: usize,
}

impl Default for RefusalBounds {
    fn default() -> Self {
        RefusalBounds { budget: 100_000, max_v: 8, max_w: 4 }
    }
}

/// Prefix-closed subsets of `pool` containing `eps`, with at most `max` elements.
fn downsets(pool: &BTreeSet<Trace>, max: usize) -> Vec<BTreeSet<Trace>> {
    let mut items: Vec<&Trace> = pool.iter().filter(|t| !t.is_empty()).collect();
    items.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let mut out = Vec::new();
    let mut cur = BTreeSet::from([Trace::empty()]);
    fn go(i: usize, items: &[&Trace], max: usize, cur: &mut BTreeSet<Trace>, out: &mut Vec<BTreeSet<Trace>>) {
        if i == items.len() {
            out.push(cur.clone());
            return;
        }
        go(i + 1, items, max, cur, out);
        let t = items[i];
        if cur.len() < max && cur.contains(&t.prefix(t.len() - 1)) {
            cur.insert(t.clone());
            go(i + 1, items, max, cur, out);
            cur.remove(t);
        }
    }
    go(0, &items, max, &mut cur, &mut out);
    out
}

fn subsets_upto(items: &[Trace], max: usize) -> Vec<BTreeSet<Trace>> {
    let mut out = vec![BTreeSet::new()];
    for t in items {
        let extended: Vec<BTreeSet<Trace>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut s = s.clone();
                s.insert(t.clone());
                s
            })
            .collect();
        out.extend(extended);
    }
    out
}

/// Searches for a refusal in `Ref(m) \ Ref(n)`; `Holds` means `Ref(m) ⊆ Ref(n)`
/// within the bounds. Without an explicit universe, `t` ranges over the
/// traces of `m` and `V`, `W` over sets built from traces available after `t`
/// in either system.
pub fn liveness_leq_refusal(
    m: &System,
    n: &System,
    depth: usize,
    universe: Option<&[Refusal]>,
    bounds: &RefusalBounds,
) -> Result<Verdict<Refusal>> {
    let mut em = Explorer::new(m, depth)?;
    let mut en = Explorer::new(n, depth)?;
    let mut best: Option<Refusal> = None;
    let mut unsure = false;
    let mut examined = 0usize;
    let mut exhausted = false;

    let mut consider = |r: Refusal, em: &mut Explorer, en: &mut Explorer| -> Result<bool> {
        if examined >= bounds.budget {
            return Ok(false);
        }
        examined += 1;
        match (em.member(&r)?, en.member(&r)?) {
            (Tri::In, Tri::Out) => {
                if best.as_ref().is_none_or(|b| r < *b) {
                    best = Some(r);
                }
            }
            (Tri::Out, _) | (_, Tri::In) => {}
            _ => unsure = true,
        }
        Ok(true)
    };

    match universe {
        Some(rs) => {
            for r in rs {
                if !consider(r.clone(), &mut em, &mut en)? {
                    exhausted = true;
                    break;
                }
            }
        }
        None => {
            let ts: Vec<Trace> = em.runs.keys().cloned().collect();
            'outer: for t in ts {
                let mut pool = BTreeSet::new();
                for o in em.post(&t)?.into_iter().chain(en.post(&t)?) {
                    pool.extend(o.traces);
                }
                for v in downsets(&pool, bounds.max_v) {
                    let nonempty: Vec<Trace> = v.iter().filter(|x| !x.is_empty()).cloned().collect();
                    for w in subsets_upto(&nonempty, bounds.max_w) {
                        let r = Refusal { t: t.clone(), v: v.clone(), w };
                        if !consider(r, &mut em, &mut en)? {
                            exhausted = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    Ok(match best {
        Some(r) => Verdict::Fails(r),
        None if exhausted => Verdict::Inconclusive(format!("refusal budget of {} exhausted", bounds.budget)),
        None if unsure || !em.complete() => Verdict::Inconclusive("exploration truncated".into()),
        None => Verdict::Holds,
    })
}

/// The reachable state with the shortest history, ties broken by the
/// canonical order. Reachability uses forward and rollback steps.
pub fn earliest_state(c: &Configuration, depth: usize) -> Result<Configuration> {
    let g = build_graph(c, &GraphOptions::reductions(depth, true))?;
    let best = g
        .states
        .iter()
        .min_by(|a, b| a.history.len().cmp(&b.history.len()).then(a.cmp(b)))
        .expect("graph has a root");
    Ok(best.to_configuration())
}
