//! Abstract syntax for processes, systems and configurations.
//!
//! Terms are two-level: [`Process`] is ordinary CCS extended with key-variable
//! decorations and `roll<_>`, while [`System`] tags processes with the key of
//! the reduction that produced them and records memories of consumed
//! processes.

mod canon;
mod keys;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use canon::{
    canonicalize, canonicalize_flat, limited_eq, CanonicalSystem, Component, Flat, MAX_RESTRICTED,
};
pub use keys::{
    free_names, keys_of_history, keys_of_process, keys_of_system, substitute_keyvar,
    substitute_procvar, unfold_rec,
};
pub use parse::{parse_configuration, parse_process, parse_system, ParseError};

/// Channel name. `omega` is reserved for reporting test success.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn omega() -> Self {
        Name::new(OMEGA)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_omega(&self) -> bool {
        &*self.0 == OMEGA
    }
}

pub const OMEGA: &str = "omega";

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Key variable, bound by a prefix or a recursion decoration.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyVar(Arc<str>);

impl KeyVar {
    pub fn new(s: &str) -> Self {
        KeyVar(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for KeyVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Process variable bound by `rec`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcVar(Arc<str>);

impl ProcVar {
    pub fn new(s: &str) -> Self {
        ProcVar(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ProcVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Reduction key. `Eps` annotates processes of initial systems and is never
/// counted as a key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Key {
    Eps,
    Id(u32),
}

impl Key {
    pub fn id(self) -> Option<u32> {
        match self {
            Key::Eps => None,
            Key::Id(n) => Some(n),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Eps => f.write_str("eps"),
            Key::Id(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// A prefix: internal `tau` or a visible action on a channel.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Action {
    Internal,
    Visible { channel: Name, polarity: Polarity },
}

impl Action {
    pub fn input(channel: &str) -> Self {
        Action::Visible { channel: Name::new(channel), polarity: Polarity::Positive }
    }

    pub fn output(channel: &str) -> Self {
        Action::Visible { channel: Name::new(channel), polarity: Polarity::Negative }
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Action::Internal)
    }

    pub fn channel(&self) -> Option<&Name> {
        match self {
            Action::Internal => None,
            Action::Visible { channel, .. } => Some(channel),
        }
    }

    /// Co-action; `None` for `tau`.
    pub fn complement(&self) -> Option<Action> {
        match self {
            Action::Internal => None,
            Action::Visible { channel, polarity } => {
                Some(Action::Visible { channel: channel.clone(), polarity: polarity.flip() })
            }
        }
    }

    pub fn is_complement_of(&self, other: &Action) -> bool {
        match (self, other) {
            (
                Action::Visible { channel: a, polarity: p },
                Action::Visible { channel: b, polarity: q },
            ) => a == b && p != q,
            _ => false,
        }
    }
}

/// Target of a `roll`: a literal key or a key variable awaiting substitution.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum KeyRef {
    Key(Key),
    Var(KeyVar),
}

/// One summand `α(γ).P` of a guarded choice.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Branch {
    pub action: Action,
    pub binder: Option<KeyVar>,
    pub continuation: Process,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Process {
    /// Guarded choice; the empty sum is `0`.
    Sum(Vec<Branch>),
    Par(Box<Process>, Box<Process>),
    Restrict(Name, Box<Process>),
    Rec { var: ProcVar, binder: Option<KeyVar>, body: Box<Process> },
    Var(ProcVar),
    Roll(KeyRef),
}

impl Process {
    pub fn nil() -> Self {
        Process::Sum(Vec::new())
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Process::Sum(b) if b.is_empty())
    }

    pub fn prefix(action: Action, binder: Option<KeyVar>, continuation: Process) -> Self {
        Process::Sum(vec![Branch { action, binder, continuation }])
    }

    pub fn par(left: Process, right: Process) -> Self {
        Process::Par(Box::new(left), Box::new(right))
    }

    /// `omega.0`, the success signal.
    pub fn omega() -> Self {
        Process::prefix(Action::input(OMEGA), None, Process::nil())
    }

    /// Sum of two guarded processes, flattening nested sums. Returns `None`
    /// when either side is not a sum.
    pub fn choice(left: Process, right: Process) -> Option<Self> {
        match (left, right) {
            (Process::Sum(mut a), Process::Sum(b)) => {
                a.extend(b);
                Some(Process::Sum(a))
            }
            _ => None,
        }
    }

    pub fn contains_roll(&self) -> bool {
        match self {
            Process::Sum(bs) => bs.iter().any(|b| b.continuation.contains_roll()),
            Process::Par(p, q) => p.contains_roll() || q.contains_roll(),
            Process::Restrict(_, p) => p.contains_roll(),
            Process::Rec { body, .. } => body.contains_roll(),
            Process::Var(_) => false,
            Process::Roll(_) => true,
        }
    }

    /// Number of prefixes in the term.
    pub fn prefix_count(&self) -> usize {
        match self {
            Process::Sum(bs) => bs.iter().map(|b| 1 + b.continuation.prefix_count()).sum(),
            Process::Par(p, q) => p.prefix_count() + q.prefix_count(),
            Process::Restrict(_, p) => p.prefix_count(),
            Process::Rec { body, .. } => body.prefix_count(),
            Process::Var(_) | Process::Roll(_) => 0,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum System {
    Nil,
    Restrict(Name, Box<System>),
    Par(Box<System>, Box<System>),
    Named(Key, Process),
    /// `[origin: process; key]`: `process`, tagged `origin`, took part in the
    /// reduction `key`.
    Memory { origin: Key, process: Process, key: Key },
}

impl System {
    pub fn par(left: System, right: System) -> Self {
        System::Par(Box::new(left), Box::new(right))
    }

    pub fn restrict(name: Name, body: System) -> Self {
        System::Restrict(name, Box::new(body))
    }

    /// Right-nested parallel composition; `Nil` when empty.
    pub fn par_all<I: IntoIterator<Item = System>>(parts: I) -> Self {
        let mut parts: Vec<System> = parts.into_iter().collect();
        let Some(mut acc) = parts.pop() else {
            return System::Nil;
        };
        while let Some(p) = parts.pop() {
            acc = System::par(p, acc);
        }
        acc
    }

    pub fn contains_roll(&self) -> bool {
        match self {
            System::Nil => false,
            System::Restrict(_, m) => m.contains_roll(),
            System::Par(a, b) => a.contains_roll() || b.contains_roll(),
            System::Named(_, p) => p.contains_roll(),
            System::Memory { process, .. } => process.contains_roll(),
        }
    }

    pub fn has_memory(&self) -> bool {
        match self {
            System::Nil | System::Named(..) => false,
            System::Restrict(_, m) => m.has_memory(),
            System::Par(a, b) => a.has_memory() || b.has_memory(),
            System::Memory { .. } => true,
        }
    }

    fn only_eps_named(&self) -> bool {
        match self {
            System::Nil => true,
            System::Restrict(_, m) => m.only_eps_named(),
            System::Par(a, b) => a.only_eps_named() && b.only_eps_named(),
            System::Named(k, _) => *k == Key::Eps,
            System::Memory { .. } => false,
        }
    }

    /// True when the system has the shape of an initial system: no memories
    /// and every named process tagged `eps`.
    pub fn is_initial(&self) -> bool {
        self.only_eps_named()
    }
}

/// Dependency history, newest key first. Keys are distinct and never `eps`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct DepHistory(Vec<Key>);

impl DepHistory {
    pub fn empty() -> Self {
        DepHistory(Vec::new())
    }

    /// Builds a history from keys listed newest first. Fails on duplicates or
    /// `eps`.
    pub fn from_newest_first(keys: Vec<Key>) -> Result<Self, String> {
        let mut seen = BTreeSet::new();
        for k in &keys {
            if *k == Key::Eps {
                return Err("eps cannot occur inside a dependency history".into());
            }
            if !seen.insert(*k) {
                return Err(format!("key {k} recorded twice in history"));
            }
        }
        Ok(DepHistory(keys))
    }

    pub fn keys(&self) -> &[Key] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: Key) -> bool {
        self.0.contains(&k)
    }

    pub fn newest(&self) -> Option<Key> {
        self.0.first().copied()
    }

    /// `k ≺ D`; `None` if `k` is already recorded or is `eps`.
    pub fn push(&self, k: Key) -> Option<Self> {
        if k == Key::Eps || self.contains(k) {
            return None;
        }
        let mut keys = Vec::with_capacity(self.0.len() + 1);
        keys.push(k);
        keys.extend_from_slice(&self.0);
        Some(DepHistory(keys))
    }

    /// History with the newest key removed.
    pub fn tail(&self) -> Self {
        DepHistory(self.0.iter().skip(1).copied().collect())
    }

    /// Smallest key strictly greater than every recorded key.
    pub fn fresh_key(&self) -> Key {
        let max = self.0.iter().filter_map(|k| k.id()).max().unwrap_or(0);
        Key::Id(max + 1)
    }

    /// Splits at `k`: returns the keys newer than and including `k` (newest
    /// first) and the remaining suffix.
    pub fn split_at_key(&self, k: Key) -> Option<(Vec<Key>, DepHistory)> {
        let pos = self.0.iter().position(|x| *x == k)?;
        Some((self.0[..=pos].to_vec(), DepHistory(self.0[pos + 1..].to_vec())))
    }
}

/// A dependency history paired with a system.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Configuration {
    pub history: DepHistory,
    pub system: System,
}

impl Configuration {
    pub fn new(history: DepHistory, system: System) -> Self {
        Configuration { history, system }
    }

    /// `ε ⊢ system`.
    pub fn initial(system: System) -> Self {
        Configuration { history: DepHistory::empty(), system }
    }

    pub fn is_initial(&self) -> bool {
        self.history.is_empty() && self.system.is_initial()
    }
}
