//! Structural-equivalence normal forms.
//!
//! A system is flattened by distributing keys over parallel composition and
//! hoisting restrictions out of named processes, extruding every restriction
//! to the top. What remains is a set of restricted names and a multiset of
//! atomic components. Bound names, key variables and process variables are
//! renamed to positional names, summands are sorted, and the top-level
//! restricted names are assigned by trying every permutation and keeping the
//! least sorted component vector.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;

use super::keys::{collect_system_keys, free_names};
use super::{Action, Branch, Key, KeyRef, KeyVar, Name, ProcVar, Process, System};
use crate::error::Error;

/// Upper bound on top-level restricted names handled by the permutation search.
pub const MAX_RESTRICTED: usize = 8;

/// An atomic parallel component: a named process whose body is a sum, a
/// recursion, a variable or a roll, or a memory.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Component {
    Named(Key, Process),
    Memory { origin: Key, process: Process, key: Key },
}

impl Component {
    pub fn to_system(&self) -> System {
        match self {
            Component::Named(k, p) => System::Named(*k, p.clone()),
            Component::Memory { origin, process, key } => {
                System::Memory { origin: *origin, process: process.clone(), key: *key }
            }
        }
    }

    fn process(&self) -> &Process {
        match self {
            Component::Named(_, p) => p,
            Component::Memory { process, .. } => process,
        }
    }
}

/// A flattened system that is not necessarily in normal form: restrictions
/// at the top, atomic components below. Restricted names are pairwise
/// distinct.
#[derive(Clone, Debug, Default)]
pub struct Flat {
    pub restricted: Vec<Name>,
    pub components: Vec<Component>,
    next_temp: usize,
}

impl Flat {
    pub fn new() -> Self {
        Flat::default()
    }

    pub fn from_system(m: &System) -> Self {
        let mut flat = Flat::new();
        flat.push_system(m);
        flat
    }

    fn temp(&mut self) -> Name {
        // '#' cannot occur in parsed names, so temporaries never clash.
        let n = Name::new(&format!("#{}", self.next_temp));
        self.next_temp += 1;
        n
    }

    pub fn push_system(&mut self, m: &System) {
        let mut env = Vec::new();
        self.push_system_env(m, &mut env);
    }

    fn push_system_env(&mut self, m: &System, env: &mut Vec<(Name, Name)>) {
        match m {
            System::Nil => {}
            System::Restrict(a, body) => {
                let t = self.temp();
                self.restricted.push(t.clone());
                env.push((a.clone(), t));
                self.push_system_env(body, env);
                env.pop();
            }
            System::Par(a, b) => {
                self.push_system_env(a, env);
                self.push_system_env(b, env);
            }
            System::Named(k, p) => self.push_named_env(*k, p, env),
            System::Memory { origin, process, key } => {
                let process = rename_env(process, env);
                self.components.push(Component::Memory { origin: *origin, process, key: *key });
            }
        }
    }

    /// Adds `k:p`, splitting parallel bodies and extruding restrictions.
    pub fn push_named(&mut self, k: Key, p: &Process) {
        let mut env = Vec::new();
        self.push_named_env(k, p, &mut env);
    }

    fn push_named_env(&mut self, k: Key, p: &Process, env: &mut Vec<(Name, Name)>) {
        match p {
            Process::Par(a, b) => {
                self.push_named_env(k, a, env);
                self.push_named_env(k, b, env);
            }
            Process::Restrict(a, body) => {
                let t = self.temp();
                self.restricted.push(t.clone());
                env.push((a.clone(), t));
                self.push_named_env(k, body, env);
                env.pop();
            }
            _ => self.components.push(Component::Named(k, rename_env(p, env))),
        }
    }

    pub fn push_memory(&mut self, origin: Key, process: Process, key: Key) {
        self.components.push(Component::Memory { origin, process, key });
    }

    pub fn to_system(&self) -> System {
        let body = System::par_all(self.components.iter().map(Component::to_system));
        self.restricted
            .iter()
            .rev()
            .fold(body, |acc, n| System::restrict(n.clone(), acc))
    }
}

impl From<&CanonicalSystem> for Flat {
    fn from(c: &CanonicalSystem) -> Self {
        Flat { restricted: c.restricted.clone(), components: c.components.clone(), next_temp: 0 }
    }
}

/// Renames free channel names according to `env` (innermost binding last).
/// Targets are temporaries that never occur bound inside `p`.
fn rename_env(p: &Process, env: &[(Name, Name)]) -> Process {
    if env.is_empty() {
        return p.clone();
    }
    let lookup = |n: &Name| -> Name {
        env.iter().rev().find(|(from, _)| from == n).map(|(_, to)| to.clone()).unwrap_or_else(|| n.clone())
    };
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|b| Branch {
                    action: match &b.action {
                        Action::Visible { channel, polarity } => {
                            Action::Visible { channel: lookup(channel), polarity: *polarity }
                        }
                        Action::Internal => Action::Internal,
                    },
                    binder: b.binder.clone(),
                    continuation: rename_env(&b.continuation, env),
                })
                .collect(),
        ),
        Process::Par(a, b) => Process::par(rename_env(a, env), rename_env(b, env)),
        Process::Restrict(a, body) => {
            // Shadow: the inner binder maps to itself.
            let mut inner = env.to_vec();
            inner.push((a.clone(), a.clone()));
            Process::Restrict(a.clone(), Box::new(rename_env(body, &inner)))
        }
        Process::Rec { var, binder, body } => Process::Rec {
            var: var.clone(),
            binder: binder.clone(),
            body: Box::new(rename_env(body, env)),
        },
        Process::Var(_) | Process::Roll(_) => p.clone(),
    }
}

/// Normal form of a system up to structural equivalence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonicalSystem {
    pub restricted: Vec<Name>,
    pub components: Vec<Component>,
}

impl CanonicalSystem {
    pub fn nil() -> Self {
        CanonicalSystem { restricted: Vec::new(), components: Vec::new() }
    }

    pub fn to_system(&self) -> System {
        Flat::from(self).to_system()
    }

    pub fn keys(&self) -> BTreeSet<Key> {
        let mut out = BTreeSet::new();
        for c in &self.components {
            collect_system_keys(&c.to_system(), &mut out);
        }
        out
    }

    /// Applies a key renaming to every key occurrence and renormalizes.
    pub fn map_keys(&self, f: &impl Fn(Key) -> Key) -> Result<CanonicalSystem, Error> {
        let components = self
            .components
            .iter()
            .map(|c| match c {
                Component::Named(k, p) => Component::Named(f(*k), map_process_keys(p, f)),
                Component::Memory { origin, process, key } => Component::Memory {
                    origin: f(*origin),
                    process: map_process_keys(process, f),
                    key: f(*key),
                },
            })
            .collect();
        canonicalize_flat(&Flat { restricted: self.restricted.clone(), components, next_temp: 0 })
    }
}

fn map_process_keys(p: &Process, f: &impl Fn(Key) -> Key) -> Process {
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|b| Branch {
                    action: b.action.clone(),
                    binder: b.binder.clone(),
                    continuation: map_process_keys(&b.continuation, f),
                })
                .collect(),
        ),
        Process::Par(a, b) => Process::par(map_process_keys(a, f), map_process_keys(b, f)),
        Process::Restrict(n, q) => Process::Restrict(n.clone(), Box::new(map_process_keys(q, f))),
        Process::Rec { var, binder, body } => Process::Rec {
            var: var.clone(),
            binder: binder.clone(),
            body: Box::new(map_process_keys(body, f)),
        },
        Process::Var(_) | Process::Roll(KeyRef::Var(_)) => p.clone(),
        Process::Roll(KeyRef::Key(k)) => Process::Roll(KeyRef::Key(f(*k))),
    }
}

impl fmt::Display for CanonicalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_system())
    }
}

/// Canonical bound names `h1, h2, ...`, skipping the system's free names.
struct Pool(Vec<Name>);

impl Pool {
    fn new(size: usize, free: &BTreeSet<Name>) -> Self {
        Pool(
            (1..)
                .map(|i| Name::new(&format!("h{i}")))
                .filter(|n| !free.contains(n))
                .take(size)
                .collect(),
        )
    }
}

fn restriction_depth(p: &Process) -> usize {
    match p {
        Process::Sum(bs) => bs.iter().map(|b| restriction_depth(&b.continuation)).max().unwrap_or(0),
        Process::Par(a, b) => restriction_depth(a).max(restriction_depth(b)),
        Process::Restrict(_, q) => 1 + restriction_depth(q),
        Process::Rec { body, .. } => restriction_depth(body),
        Process::Var(_) | Process::Roll(_) => 0,
    }
}

struct Normalizer<'a> {
    pool: &'a Pool,
    names: Vec<(Name, Name)>,
    keyvars: Vec<(KeyVar, KeyVar)>,
    procvars: Vec<(ProcVar, ProcVar)>,
    name_level: usize,
    keyvar_level: usize,
}

impl<'a> Normalizer<'a> {
    fn new(pool: &'a Pool, names: Vec<(Name, Name)>, base: usize) -> Self {
        Normalizer { pool, names, keyvars: Vec::new(), procvars: Vec::new(), name_level: base, keyvar_level: 0 }
    }

    fn name(&self, n: &Name) -> Name {
        self.names
            .iter()
            .rev()
            .find(|(from, _)| from == n)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| n.clone())
    }

    fn keyvar(&self, v: &KeyVar) -> KeyVar {
        self.keyvars
            .iter()
            .rev()
            .find(|(from, _)| from == v)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| v.clone())
    }

    fn procvar(&self, v: &ProcVar) -> ProcVar {
        self.procvars
            .iter()
            .rev()
            .find(|(from, _)| from == v)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| v.clone())
    }

    fn action(&self, a: &Action) -> Action {
        match a {
            Action::Internal => Action::Internal,
            Action::Visible { channel, polarity } => {
                Action::Visible { channel: self.name(channel), polarity: *polarity }
            }
        }
    }

    /// Binder renaming: unused binders are dropped.
    fn with_keyvar<T>(
        &mut self,
        binder: &Option<KeyVar>,
        body: &Process,
        f: impl FnOnce(&mut Self) -> T,
    ) -> (Option<KeyVar>, T) {
        match binder {
            Some(g) if keyvar_free_in(body, g) => {
                let fresh = KeyVar::new(&format!("g{}", self.keyvar_level));
                self.keyvars.push((g.clone(), fresh.clone()));
                self.keyvar_level += 1;
                let out = f(self);
                self.keyvar_level -= 1;
                self.keyvars.pop();
                (Some(fresh), out)
            }
            Some(g) => {
                // Not used: shadow so inner occurrences stay distinct.
                self.keyvars.push((g.clone(), g.clone()));
                let out = f(self);
                self.keyvars.pop();
                (None, out)
            }
            None => (None, f(self)),
        }
    }

    fn process(&mut self, p: &Process) -> Process {
        match p {
            Process::Sum(bs) => {
                let mut out: Vec<Branch> = bs
                    .iter()
                    .map(|b| {
                        let action = self.action(&b.action);
                        let (binder, continuation) =
                            self.with_keyvar(&b.binder, &b.continuation, |s| s.process(&b.continuation));
                        Branch { action, binder, continuation }
                    })
                    .collect();
                out.sort();
                Process::Sum(out)
            }
            Process::Par(a, b) => Process::par(self.process(a), self.process(b)),
            Process::Restrict(a, body) => {
                let fresh = self.pool.0[self.name_level].clone();
                self.names.push((a.clone(), fresh.clone()));
                self.name_level += 1;
                let body = self.process(body);
                self.name_level -= 1;
                self.names.pop();
                Process::Restrict(fresh, Box::new(body))
            }
            Process::Rec { var, binder, body } => {
                let fresh = ProcVar::new(&format!("X{}", self.procvars.len()));
                self.procvars.push((var.clone(), fresh.clone()));
                let (binder, body) = self.with_keyvar(binder, body, |s| s.process(body));
                self.procvars.pop();
                Process::Rec { var: fresh, binder, body: Box::new(body) }
            }
            Process::Var(v) => Process::Var(self.procvar(v)),
            Process::Roll(KeyRef::Var(v)) => Process::Roll(KeyRef::Var(self.keyvar(v))),
            Process::Roll(KeyRef::Key(_)) => p.clone(),
        }
    }

    fn component(&mut self, c: &Component) -> Component {
        match c {
            Component::Named(k, p) => Component::Named(*k, self.process(p)),
            Component::Memory { origin, process, key } => {
                Component::Memory { origin: *origin, process: self.process(process), key: *key }
            }
        }
    }
}

pub(crate) fn keyvar_free_in(p: &Process, g: &KeyVar) -> bool {
    match p {
        Process::Sum(bs) => bs
            .iter()
            .any(|b| b.binder.as_ref() != Some(g) && keyvar_free_in(&b.continuation, g)),
        Process::Par(a, b) => keyvar_free_in(a, g) || keyvar_free_in(b, g),
        Process::Restrict(_, q) => keyvar_free_in(q, g),
        Process::Rec { binder, body, .. } => binder.as_ref() != Some(g) && keyvar_free_in(body, g),
        Process::Var(_) => false,
        Process::Roll(KeyRef::Var(v)) => v == g,
        Process::Roll(KeyRef::Key(_)) => false,
    }
}

/// Normal form of a flattened system.
pub fn canonicalize_flat(flat: &Flat) -> Result<CanonicalSystem, Error> {
    let mut fns: Vec<BTreeSet<Name>> = flat.components.iter().map(|c| free_names(c.process())).collect();
    let all_free: BTreeSet<Name> = fns.iter().flatten().cloned().collect();
    let restricted: Vec<Name> =
        flat.restricted.iter().filter(|r| all_free.contains(*r)).cloned().collect();
    let n = restricted.len();
    if n > MAX_RESTRICTED {
        return Err(Error::Capacity(format!(
            "{n} restricted names exceed the canonicalization bound of {MAX_RESTRICTED}"
        )));
    }
    let free: BTreeSet<Name> = all_free.iter().filter(|x| !restricted.contains(x)).cloned().collect();
    let depth = flat.components.iter().map(|c| restriction_depth(c.process())).max().unwrap_or(0);
    let pool = Pool::new(n + depth + 1, &free);

    // Components that mention no restricted name are normalized once.
    let mut fixed = Vec::new();
    let mut open = Vec::new();
    for (c, fnc) in flat.components.iter().zip(fns.iter_mut()) {
        if fnc.iter().any(|x| restricted.contains(x)) {
            open.push(c);
        } else {
            fixed.push(Normalizer::new(&pool, Vec::new(), n).component(c));
        }
    }

    let mut best: Option<Vec<Component>> = None;
    let assignments: Box<dyn Iterator<Item = Vec<usize>>> = if n <= 1 {
        Box::new(std::iter::once((0..n).collect()))
    } else {
        Box::new((0..n).permutations(n))
    };
    for perm in assignments {
        let env: Vec<(Name, Name)> =
            restricted.iter().zip(perm.iter()).map(|(r, &i)| (r.clone(), pool.0[i].clone())).collect();
        let mut comps = fixed.clone();
        for c in &open {
            comps.push(Normalizer::new(&pool, env.clone(), n).component(c));
        }
        comps.sort();
        if best.as_ref().is_none_or(|b| comps < *b) {
            best = Some(comps);
        }
    }
    Ok(CanonicalSystem { restricted: pool.0[..n].to_vec(), components: best.unwrap_or_default() })
}

/// Normal form such that `canonicalize(a) == canonicalize(b)` exactly when
/// the systems are structurally equivalent.
pub fn canonicalize(m: &System) -> Result<CanonicalSystem, Error> {
    canonicalize_flat(&Flat::from_system(m))
}

/// Limited structural equivalence: only the key-distribution and
/// restriction-hoisting laws for named processes, no reordering.
pub fn limited_eq(a: &System, b: &System) -> bool {
    limited_normal(a) == limited_normal(b)
}

fn limited_normal(m: &System) -> System {
    let mut free = BTreeSet::new();
    let flat = Flat::from_system(m);
    for c in &flat.components {
        free.extend(free_names(c.process()));
    }
    let free: BTreeSet<Name> = free.into_iter().filter(|x| !x.as_str().starts_with('#')).collect();
    let depth = tree_depth(m);
    let pool = Pool::new(depth + 1, &free);
    let mut norm = Normalizer::new(&pool, Vec::new(), 0);
    limited_system(m, &mut norm)
}

fn tree_depth(m: &System) -> usize {
    match m {
        System::Nil => 0,
        System::Restrict(_, n) => 1 + tree_depth(n),
        System::Par(a, b) => tree_depth(a).max(tree_depth(b)),
        System::Named(_, p) => restriction_depth(p),
        System::Memory { process, .. } => restriction_depth(process),
    }
}

fn limited_system(m: &System, norm: &mut Normalizer<'_>) -> System {
    match m {
        System::Nil => System::Nil,
        System::Restrict(a, body) => {
            let fresh = norm.pool.0[norm.name_level].clone();
            norm.names.push((a.clone(), fresh.clone()));
            norm.name_level += 1;
            let body = limited_system(body, norm);
            norm.name_level -= 1;
            norm.names.pop();
            System::restrict(fresh, body)
        }
        System::Par(a, b) => System::par(limited_system(a, norm), limited_system(b, norm)),
        System::Named(k, p) => limited_named(*k, p, norm),
        System::Memory { origin, process, key } => {
            System::Memory { origin: *origin, process: norm.process(process), key: *key }
        }
    }
}

fn limited_named(k: Key, p: &Process, norm: &mut Normalizer<'_>) -> System {
    match p {
        Process::Par(a, b) => System::par(limited_named(k, a, norm), limited_named(k, b, norm)),
        Process::Restrict(a, body) => {
            let fresh = norm.pool.0[norm.name_level].clone();
            norm.names.push((a.clone(), fresh.clone()));
            norm.name_level += 1;
            let body = limited_named(k, body, norm);
            norm.name_level -= 1;
            norm.names.pop();
            System::restrict(fresh, body)
        }
        _ => System::Named(k, norm.process(p)),
    }
}
