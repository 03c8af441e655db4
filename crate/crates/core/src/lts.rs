//! Forward labelled transitions and bounded state-graph exploration.
//!
//! Transitions are derived directly on the system tree: the base rule for a
//! named prefix or recursion, parallel interleaving and synchronisation,
//! restriction blocking its channel, and the two key-distribution laws for
//! named processes. This is independent of the redex enumeration in
//! [`crate::reduction`], so the two can be checked against each other.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::reduction::{backward_states, forward_states, rollback_one, State};
use crate::syntax::{
    canonicalize, keys_of_history, keys_of_system, substitute_keyvar, unfold_rec, Action, Configuration, DepHistory, Key, Process,
    System,
};

/// An action tagged with the key of the transition performing it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Label {
    pub action: Action,
    pub key: Key,
}

impl Label {
    pub fn new(action: Action, key: Key) -> Self {
        Label { action, key }
    }

    pub fn is_internal(&self) -> bool {
        self.action.is_internal()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.action, self.key)
    }
}

fn named_transitions(l: Key, p: &Process, key: Key) -> Vec<(Action, System)> {
    match p {
        Process::Par(a, b) => system_transitions(
            &System::par(System::Named(l, (**a).clone()), System::Named(l, (**b).clone())),
            key,
        ),
        Process::Restrict(a, body) => {
            system_transitions(&System::restrict(a.clone(), System::Named(l, (**body).clone())), key)
        }
        Process::Sum(bs) => bs
            .iter()
            .map(|b| {
                let cont = match &b.binder {
                    Some(g) => substitute_keyvar(&b.continuation, g, key),
                    None => b.continuation.clone(),
                };
                let memory = System::Memory { origin: l, process: p.clone(), key };
                (b.action.clone(), System::par(System::Named(key, cont), memory))
            })
            .collect(),
        Process::Rec { .. } => {
            let unfolded = unfold_rec(p, key).expect("recursion");
            let memory = System::Memory { origin: l, process: p.clone(), key };
            vec![(Action::Internal, System::par(System::Named(key, unfolded), memory))]
        }
        Process::Var(_) | Process::Roll(_) => Vec::new(),
    }
}

fn system_transitions(m: &System, key: Key) -> Vec<(Action, System)> {
    match m {
        System::Nil | System::Memory { .. } => Vec::new(),
        System::Named(l, p) => named_transitions(*l, p, key),
        System::Restrict(a, body) => system_transitions(body, key)
            .into_iter()
            .filter(|(act, _)| act.channel() != Some(a))
            .map(|(act, n)| (act, System::restrict(a.clone(), n)))
            .collect(),
        System::Par(left, right) => {
            let lt = system_transitions(left, key);
            let rt = system_transitions(right, key);
            let mut out = Vec::new();
            for (act, l2) in &lt {
                out.push((act.clone(), System::par(l2.clone(), (**right).clone())));
            }
            for (act, r2) in &rt {
                out.push((act.clone(), System::par((**left).clone(), r2.clone())));
            }
            for (a1, l2) in &lt {
                for (_, r2) in rt.iter().filter(|(a2, _)| a1.is_complement_of(a2)) {
                    out.push((Action::Internal, System::par(l2.clone(), r2.clone())));
                }
            }
            out
        }
    }
}

/// Transitions of a canonical state with an explicit key, deduplicated.
pub fn lts_states_with_key(s: &State, key: Key) -> Result<Vec<(Label, State)>> {
    let history = s
        .history
        .push(key)
        .ok_or_else(|| Error::Invalid(format!("key {key} is not fresh")))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (action, m) in system_transitions(&s.system.to_system(), key) {
        let next = State { history: history.clone(), system: canonicalize(&m)? };
        let label = Label::new(action, key);
        if seen.insert((label.clone(), next.clone())) {
            out.push((label, next));
        }
    }
    Ok(out)
}

pub fn lts_states(s: &State) -> Result<Vec<(Label, State)>> {
    if !s.keys_compatible() {
        return Err(Error::IllFormed(format!("system keys not recorded in history: {s}")));
    }
    lts_states_with_key(s, s.history.fresh_key())
}

/// Well-formedness for the LTS: like [`crate::reduction::well_formed`], but
/// each history key may have been produced by any labelled transition, so
/// states reached by visible actions qualify.
pub fn well_formed_lts(c: &Configuration) -> bool {
    let mut history = c.history.clone();
    let mut system = c.system.clone();
    loop {
        if !keys_of_system(&system).is_subset(&keys_of_history(&history)) {
            return false;
        }
        let Some(k) = history.newest() else {
            return true;
        };
        let Ok(target) = canonicalize(&system) else {
            return false;
        };
        let previous = rollback_one(&system, k);
        let earlier = history.tail();
        if keys_of_system(&previous).contains(&k) {
            return false;
        }
        let Ok(prev) = canonicalize(&previous) else {
            return false;
        };
        let start = State { history: earlier.clone(), system: prev };
        let redone = lts_states_with_key(&start, k).is_ok_and(|ts| ts.iter().any(|(_, n)| n.system == target));
        if !redone {
            return false;
        }
        history = earlier;
        system = previous;
    }
}

/// All forward labelled transitions of a configuration.
pub fn lts_transitions(c: &Configuration) -> Result<Vec<(Label, Configuration)>> {
    let s = State::from_configuration(c)?;
    Ok(lts_states(&s)?.into_iter().map(|(l, n)| (l, n.to_configuration())).collect())
}

/// Renames keys so that the history, read oldest first, becomes `1, 2, ..`.
pub fn renumber(s: &State) -> Result<State> {
    let keys = s.history.keys();
    let n = keys.len() as u32;
    let already = keys.iter().enumerate().all(|(i, k)| *k == Key::Id(n - i as u32));
    if already {
        return Ok(s.clone());
    }
    let mapping: HashMap<Key, Key> =
        keys.iter().enumerate().map(|(i, k)| (*k, Key::Id(n - i as u32))).collect();
    let f = |k: Key| match k {
        Key::Eps => Key::Eps,
        // Unrecorded keys only occur in ill-formed input; keep them apart.
        Key::Id(x) => mapping.get(&k).copied().unwrap_or(Key::Id(n + x)),
    };
    let history = DepHistory::from_newest_first(keys.iter().map(|k| f(*k)).collect())
        .map_err(Error::IllFormed)?;
    Ok(State { history, system: s.system.map_keys(&f)? })
}

/// Canonical representative up to structural equivalence and key bijection.
pub fn canonical_state(c: &Configuration) -> Result<State> {
    renumber(&State::from_configuration(c)?)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GraphMode {
    /// All labelled transitions.
    Lts,
    /// Forward reductions only, labelled `tau`.
    Reductions,
}

pub const DEFAULT_STATE_CAP: usize = 200_000;

static STATE_CAP_OVERRIDE: AtomicUsize = AtomicUsize::new(0);

/// Sets the cap used by every later [`GraphOptions`] constructor; `0` clears it.
pub fn set_state_cap(cap: usize) {
    STATE_CAP_OVERRIDE.store(cap, Ordering::Relaxed);
}

/// State cap from [`set_state_cap`], else `REVY_STATE_CAP`, else the default.
pub fn default_state_cap() -> usize {
    let cap = STATE_CAP_OVERRIDE.load(Ordering::Relaxed);
    if cap > 0 {
        return cap;
    }
    std::env::var("REVY_STATE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_STATE_CAP)
}

#[derive(Clone, Debug)]
pub struct GraphOptions {
    pub depth: usize,
    pub include_backward: bool,
    pub mode: GraphMode,
    pub state_cap: usize,
}

impl GraphOptions {
    pub fn lts(depth: usize) -> Self {
        GraphOptions { depth, include_backward: false, mode: GraphMode::Lts, state_cap: default_state_cap() }
    }

    pub fn reductions(depth: usize, include_backward: bool) -> Self {
        GraphOptions { depth, include_backward, mode: GraphMode::Reductions, state_cap: default_state_cap() }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.state_cap = cap;
        self
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Edge {
    Forward(Label),
    Backward(Key),
}

#[derive(Clone, Debug)]
pub struct StateGraph {
    pub states: Vec<State>,
    index: HashMap<State, usize>,
    pub forward: Vec<Vec<(Label, usize)>>,
    pub backward: Vec<Vec<(Key, usize)>>,
    /// Least number of forward edges from the root.
    pub depth_of: Vec<usize>,
    /// Discovery edge, for witness paths.
    pub parent: Vec<Option<(usize, Edge)>>,
    /// States at the depth bound with forward successors left unexplored.
    pub frontier: Vec<bool>,
    pub depth_bound: usize,
    pub truncated: bool,
}

impl StateGraph {
    pub const ROOT: usize = 0;

    fn new(root: State) -> Self {
        let mut index = HashMap::new();
        index.insert(root.clone(), 0);
        StateGraph {
            states: vec![root],
            index,
            forward: vec![Vec::new()],
            backward: vec![Vec::new()],
            depth_of: vec![0],
            parent: vec![None],
            frontier: vec![false],
            depth_bound: 0,
            truncated: false,
        }
    }

    fn intern(&mut self, s: State, depth: usize, parent: (usize, Edge), cap: usize) -> Result<(usize, bool)> {
        if let Some(&i) = self.index.get(&s) {
            return Ok((i, false));
        }
        if self.states.len() >= cap {
            return Err(Error::Capacity(format!("state graph exceeds {cap} states")));
        }
        let i = self.states.len();
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.forward.push(Vec::new());
        self.backward.push(Vec::new());
        self.depth_of.push(depth);
        self.parent.push(Some(parent));
        self.frontier.push(false);
        Ok((i, true))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn root(&self) -> &State {
        &self.states[Self::ROOT]
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.iter().map(Vec::len).sum::<usize>() + self.backward.iter().map(Vec::len).sum::<usize>()
    }

    /// Discovery path from the root to `target` as `(from, edge, to)` triples.
    pub fn path_to(&self, target: usize) -> Vec<(usize, Edge, usize)> {
        let mut path = Vec::new();
        let mut cur = target;
        while let Some((from, edge)) = &self.parent[cur] {
            path.push((*from, edge.clone(), cur));
            cur = *from;
        }
        path.reverse();
        path
    }

    pub fn to_dot(&self) -> String {
        let escape = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph lts {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, s) in self.states.iter().enumerate() {
            let shape = if i == Self::ROOT { ", penwidth=2" } else { "" };
            let _ = writeln!(out, "  n{i} [label=\"{}\"{shape}];", escape(&s.to_string()));
        }
        for (i, edges) in self.forward.iter().enumerate() {
            for (l, j) in edges {
                let _ = writeln!(out, "  n{i} -> n{j} [label=\"{}\"];", escape(&l.to_string()));
            }
        }
        for (i, edges) in self.backward.iter().enumerate() {
            for (k, j) in edges {
                let _ = writeln!(out, "  n{i} -> n{j} [label=\"roll {k}\", style=dashed];");
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> Value {
        let forward: Vec<Value> = self
            .forward
            .iter()
            .enumerate()
            .flat_map(|(i, es)| es.iter().map(move |(l, j)| json!({"from": i, "label": l.to_string(), "to": j})))
            .collect();
        let backward: Vec<Value> = self
            .backward
            .iter()
            .enumerate()
            .flat_map(|(i, es)| es.iter().map(move |(k, j)| json!({"from": i, "roll": k.to_string(), "to": j})))
            .collect();
        json!({
            "root": Self::ROOT,
            "depth_bound": self.depth_bound,
            "truncated": self.truncated,
            "states": self.states.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "forward": forward,
            "backward": backward,
        })
    }
}

fn forward_successors(s: &State, mode: GraphMode) -> Result<Vec<(Label, State)>> {
    let raw = match mode {
        GraphMode::Lts => lts_states(s)?,
        GraphMode::Reductions => forward_states(s)?
            .into_iter()
            .map(|(_, n)| (Label::new(Action::Internal, n.history.newest().expect("step key")), n))
            .collect(),
    };
    raw.into_iter().map(|(l, n)| Ok((l, renumber(&n)?))).collect()
}

fn backward_successors(s: &State) -> Result<Vec<(Key, State)>> {
    backward_states(s)?.into_iter().map(|(k, _, n)| Ok((k, renumber(&n)?))).collect()
}

/// Breadth-first exploration up to `depth` forward edges. Rollback edges
/// cost nothing towards the bound. Successor computation for a level runs
/// in parallel; merging is sequential, so numbering is deterministic.
pub fn build_graph(root: &Configuration, opts: &GraphOptions) -> Result<StateGraph> {
    let root = canonical_state(root)?;
    build_graph_from(root, opts)
}

pub fn build_graph_from(root: State, opts: &GraphOptions) -> Result<StateGraph> {
    let mut g = StateGraph::new(renumber(&root)?);
    g.depth_bound = opts.depth;
    let mut level = vec![StateGraph::ROOT];
    for d in 0..=opts.depth {
        if opts.include_backward {
            let mut wave = level.clone();
            while !wave.is_empty() {
                let results: Vec<Result<Vec<(Key, State)>>> =
                    wave.par_iter().map(|&i| backward_successors(&g.states[i])).collect();
                let mut next_wave = Vec::new();
                for (&i, r) in wave.iter().zip(results) {
                    for (k, t) in r? {
                        let (j, fresh) = g.intern(t, d, (i, Edge::Backward(k)), opts.state_cap)?;
                        g.backward[i].push((k, j));
                        if fresh {
                            next_wave.push(j);
                            level.push(j);
                        }
                    }
                }
                wave = next_wave;
            }
        }
        let results: Vec<Result<Vec<(Label, State)>>> =
            level.par_iter().map(|&i| forward_successors(&g.states[i], opts.mode)).collect();
        let mut next = Vec::new();
        for (&i, r) in level.iter().zip(results) {
            for (l, t) in r? {
                if d == opts.depth {
                    match g.index_of(&t) {
                        Some(j) => g.forward[i].push((l, j)),
                        None => {
                            g.frontier[i] = true;
                            g.truncated = true;
                        }
                    }
                    continue;
                }
                let (j, fresh) = g.intern(t, d + 1, (i, Edge::Forward(l.clone())), opts.state_cap)?;
                g.forward[i].push((l, j));
                if fresh {
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(g)
}
