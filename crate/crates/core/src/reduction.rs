//! Forward reductions, rollback, well-formedness and barbs.
//!
//! Redexes are enumerated on the flattened canonical form, so every
//! structurally equivalent presentation of a system has the same steps.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::syntax::{
    canonicalize, canonicalize_flat, keys_of_history, keys_of_system, unfold_rec, Action, Branch,
    CanonicalSystem, Component, Configuration, DepHistory, Flat, Key, KeyRef, Name, Polarity,
    Process, System,
};

/// A configuration whose system is in canonical form. Keys are left as
/// they are; see [`crate::lts::canonical_state`] for key renumbering.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct State {
    pub history: DepHistory,
    pub system: CanonicalSystem,
}

impl State {
    pub fn from_configuration(c: &Configuration) -> Result<State> {
        Ok(State { history: c.history.clone(), system: canonicalize(&c.system)? })
    }

    /// `ε ⊢ m`.
    pub fn initial(m: &System) -> Result<State> {
        Ok(State { history: DepHistory::empty(), system: canonicalize(m)? })
    }

    pub fn to_configuration(&self) -> Configuration {
        Configuration::new(self.history.clone(), self.system.to_system())
    }

    fn flat(&self) -> Flat {
        Flat::from(&self.system)
    }

    /// Cheap part of well-formedness: every key of the system is recorded.
    pub fn keys_compatible(&self) -> bool {
        self.system.keys().is_subset(&keys_of_history(&self.history))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.history, self.system)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RedexKind {
    Sync(Name),
    Internal,
    RecUnfold,
}

/// The named processes consumed by a forward step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Redex {
    pub kind: RedexKind,
    pub participants: Vec<(Key, Process)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ForwardStep {
    pub key: Key,
    pub successor: Configuration,
    pub redex: Redex,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BackwardStep {
    pub target_key: Key,
    /// Newest first, ending with `target_key`.
    pub undone_keys: Vec<Key>,
    pub successor: Configuration,
}

/// Serializable summary of a step.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub direction: &'static str,
    pub kind: String,
    pub key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    pub participants: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub undone: Vec<String>,
    pub successor: String,
}

impl ForwardStep {
    pub fn record(&self) -> StepRecord {
        let (kind, channel) = match &self.redex.kind {
            RedexKind::Sync(a) => ("sync", Some(a.to_string())),
            RedexKind::Internal => ("internal", None),
            RedexKind::RecUnfold => ("rec", None),
        };
        StepRecord {
            direction: "forward",
            kind: kind.into(),
            key: self.key.to_string(),
            channel,
            participants: self.redex.participants.iter().map(|(k, p)| format!("{k}: {p}")).collect(),
            undone: Vec::new(),
            successor: self.successor.to_string(),
        }
    }
}

impl BackwardStep {
    pub fn record(&self) -> StepRecord {
        StepRecord {
            direction: "backward",
            kind: "roll".into(),
            key: self.target_key.to_string(),
            channel: None,
            participants: Vec::new(),
            undone: self.undone_keys.iter().map(Key::to_string).collect(),
            successor: self.successor.to_string(),
        }
    }
}

fn continuation(b: &Branch, key: Key) -> Process {
    match &b.binder {
        Some(g) => crate::syntax::substitute_keyvar(&b.continuation, g, key),
        None => b.continuation.clone(),
    }
}

fn without(flat: &Flat, skip: &[usize]) -> Flat {
    let mut out = Flat::new();
    out.restricted = flat.restricted.clone();
    out.components = flat
        .components
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    out
}

/// Every forward redex of a flattened system, fired with `key`.
pub(crate) fn fire(flat: &Flat, key: Key) -> Vec<(Redex, Flat)> {
    let mut out = Vec::new();
    let named: Vec<(usize, Key, &Process)> = flat
        .components
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            Component::Named(l, p) => Some((i, *l, p)),
            Component::Memory { .. } => None,
        })
        .collect();
    for &(i, l, p) in &named {
        match p {
            Process::Sum(bs) => {
                for b in bs.iter().filter(|b| b.action.is_internal()) {
                    let mut next = without(flat, &[i]);
                    next.push_named(key, &continuation(b, key));
                    next.push_memory(l, p.clone(), key);
                    out.push((Redex { kind: RedexKind::Internal, participants: vec![(l, p.clone())] }, next));
                }
            }
            Process::Rec { .. } => {
                let unfolded = unfold_rec(p, key).expect("recursion");
                let mut next = without(flat, &[i]);
                next.push_named(key, &unfolded);
                next.push_memory(l, p.clone(), key);
                out.push((Redex { kind: RedexKind::RecUnfold, participants: vec![(l, p.clone())] }, next));
            }
            _ => {}
        }
    }
    for (x, &(i, l1, p)) in named.iter().enumerate() {
        let Process::Sum(bs1) = p else { continue };
        for &(j, l2, q) in &named[x + 1..] {
            let Process::Sum(bs2) = q else { continue };
            for b1 in bs1 {
                for b2 in bs2.iter().filter(|b2| b1.action.is_complement_of(&b2.action)) {
                    let mut next = without(flat, &[i, j]);
                    next.push_named(key, &continuation(b1, key));
                    next.push_named(key, &continuation(b2, key));
                    next.push_memory(l1, p.clone(), key);
                    next.push_memory(l2, q.clone(), key);
                    let channel = b1.action.channel().expect("visible").clone();
                    out.push((
                        Redex { kind: RedexKind::Sync(channel), participants: vec![(l1, p.clone()), (l2, q.clone())] },
                        next,
                    ));
                }
            }
        }
    }
    out
}

fn fresh_for(s: &State, key: Key) -> bool {
    key != Key::Eps && !s.history.contains(key) && !s.system.keys().contains(&key)
}

/// Forward successors of a canonical state using an explicit key.
pub fn forward_states_with_key(s: &State, key: Key) -> Result<Vec<(Redex, State)>> {
    if !fresh_for(s, key) {
        return Err(Error::Invalid(format!("key {key} is not fresh")));
    }
    let history = s.history.push(key).expect("fresh key");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (redex, flat) in fire(&s.flat(), key) {
        let next = State { history: history.clone(), system: canonicalize_flat(&flat)? };
        if seen.insert(next.clone()) {
            out.push((redex, next));
        }
    }
    Ok(out)
}

/// Forward successors with the deterministic fresh key `1 + max(history)`.
pub fn forward_states(s: &State) -> Result<Vec<(Redex, State)>> {
    if !s.keys_compatible() {
        return Err(Error::IllFormed(format!("system keys not recorded in history: {s}")));
    }
    forward_states_with_key(s, s.history.fresh_key())
}

pub fn forward_steps(c: &Configuration) -> Result<Vec<ForwardStep>> {
    let s = State::from_configuration(c)?;
    let key = s.history.fresh_key();
    Ok(forward_states(&s)?
        .into_iter()
        .map(|(redex, next)| ForwardStep { key, successor: next.to_configuration(), redex })
        .collect())
}

pub fn forward_steps_with_key(c: &Configuration, key: Key) -> Result<Vec<ForwardStep>> {
    let s = State::from_configuration(c)?;
    Ok(forward_states_with_key(&s, key)?
        .into_iter()
        .map(|(redex, next)| ForwardStep { key, successor: next.to_configuration(), redex })
        .collect())
}

/// `M ↜⟨k⟩`: `k`-processes vanish and `k`-memories reinstate their content.
pub fn rollback_one(m: &System, k: Key) -> System {
    match m {
        System::Nil => System::Nil,
        System::Restrict(a, n) => System::restrict(a.clone(), rollback_one(n, k)),
        System::Par(a, b) => System::par(rollback_one(a, k), rollback_one(b, k)),
        System::Named(l, _) if *l == k => System::Nil,
        System::Memory { origin, process, key } if *key == k => System::Named(*origin, process.clone()),
        System::Named(..) | System::Memory { .. } => m.clone(),
    }
}

fn rollback_flat(flat: &Flat, k: Key) -> Flat {
    let mut out = Flat::new();
    out.restricted = flat.restricted.clone();
    for c in &flat.components {
        match c {
            Component::Named(l, _) if *l == k => {}
            Component::Memory { origin, process, key } if *key == k => out.push_named(*origin, process),
            _ => out.components.push(c.clone()),
        }
    }
    out
}

/// Applies `rollback_one` for each key in order.
pub fn rollback_to(m: &System, keys: &[Key]) -> System {
    keys.iter().fold(m.clone(), |acc, k| rollback_one(&acc, *k))
}

/// Keys `k` recorded in the history with an active `l: roll<k>`, newest first.
pub fn active_rolls(s: &State) -> Vec<Key> {
    let mut targets = BTreeSet::new();
    for c in &s.system.components {
        if let Component::Named(_, Process::Roll(KeyRef::Key(k))) = c {
            if s.history.contains(*k) {
                targets.insert(*k);
            }
        }
    }
    s.history.keys().iter().copied().filter(|k| targets.contains(k)).collect()
}

/// Rollback successors of a canonical state, one per active target key.
pub fn backward_states(s: &State) -> Result<Vec<(Key, Vec<Key>, State)>> {
    let mut out = Vec::new();
    for k in active_rolls(s) {
        let (undone, rest) = s.history.split_at_key(k).expect("recorded key");
        let mut flat = s.flat();
        for u in &undone {
            flat = rollback_flat(&flat, *u);
        }
        out.push((k, undone, State { history: rest, system: canonicalize_flat(&flat)? }));
    }
    Ok(out)
}

pub fn backward_steps(c: &Configuration) -> Result<Vec<BackwardStep>> {
    let s = State::from_configuration(c)?;
    Ok(backward_states(&s)?
        .into_iter()
        .map(|(target_key, undone_keys, next)| BackwardStep {
            target_key,
            undone_keys,
            successor: next.to_configuration(),
        })
        .collect())
}

/// Forward and backward successors, canonical and deduplicated.
pub fn all_steps(c: &Configuration) -> Result<Vec<Configuration>> {
    let s = State::from_configuration(c)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let succ = forward_states(&s)?
        .into_iter()
        .map(|(_, n)| n)
        .chain(backward_states(&s)?.into_iter().map(|(_, _, n)| n));
    for n in succ {
        if seen.insert(n.clone()) {
            out.push(n.to_configuration());
        }
    }
    Ok(out)
}

/// Key compatibility plus the rollback loop, checked by peeling the
/// history newest first and re-deriving each forward step.
pub fn well_formed(c: &Configuration) -> bool {
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
        let Ok(prev_state) = canonicalize(&previous) else {
            return false;
        };
        let redone = fire(&Flat::from(&prev_state), k)
            .into_iter()
            .any(|(_, f)| canonicalize_flat(&f).is_ok_and(|n| n == target));
        if !redone {
            return false;
        }
        history = earlier;
        system = previous;
    }
}

fn is_omega_summand(b: &Branch) -> bool {
    matches!(&b.action, Action::Visible { channel, polarity: Polarity::Positive } if channel.is_omega())
}

fn components_have_omega(components: &[Component]) -> bool {
    components.iter().any(|c| match c {
        Component::Named(_, Process::Sum(bs)) => bs.iter().any(is_omega_summand),
        _ => false,
    })
}

/// Strong barb on `omega`: some named component offers an `omega` summand.
pub fn omega_barb(c: &Configuration) -> bool {
    components_have_omega(&Flat::from_system(&c.system).components)
}

pub fn omega_barb_state(s: &State) -> bool {
    components_have_omega(&s.system.components)
}

/// Some component is `l: roll<k>` with `k` in `ks`.
pub fn rollback_barb(c: &Configuration, ks: &BTreeSet<Key>) -> bool {
    roll_barb_components(&Flat::from_system(&c.system).components, ks)
}

pub fn rollback_barb_state(s: &State, ks: &BTreeSet<Key>) -> bool {
    roll_barb_components(&s.system.components, ks)
}

fn roll_barb_components(components: &[Component], ks: &BTreeSet<Key>) -> bool {
    components.iter().any(|c| matches!(c, Component::Named(_, Process::Roll(KeyRef::Key(k))) if ks.contains(k)))
}
