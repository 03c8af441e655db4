//! Traces, trace typing, complementation and zipping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::lts::{lts_states_with_key, Label};
use crate::reduction::State;
use crate::syntax::{Action, DepHistory, Key, Name, Polarity, System};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Trace(pub Vec<Label>);

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn push(&mut self, l: Label) {
        self.0.push(l);
    }

    pub fn extended(&self, l: Label) -> Trace {
        let mut t = self.clone();
        t.0.push(l);
        t
    }

    pub fn prefix(&self, n: usize) -> Trace {
        Trace(self.0[..n].to_vec())
    }

    /// All prefixes, shortest first, including the empty trace and `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = Trace> + '_ {
        (0..=self.len()).map(|n| self.prefix(n))
    }

    pub fn keys(&self) -> Vec<Key> {
        self.0.iter().map(|l| l.key).collect()
    }

    /// Each key occurs at most once.
    pub fn is_canonical(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.0.iter().all(|l| seen.insert(l.key))
    }

    pub fn is_observable(&self) -> bool {
        self.0.iter().all(|l| !l.is_internal())
    }

    /// Visible actions in order, without keys.
    pub fn actions(&self) -> Vec<Action> {
        self.0.iter().map(|l| l.action.clone()).collect()
    }

    /// Builds a canonical-key trace from actions: keys `1, 2, ..` by position.
    pub fn from_actions<I: IntoIterator<Item = Action>>(actions: I) -> Trace {
        Trace(
            actions
                .into_iter()
                .enumerate()
                .map(|(i, a)| Label::new(a, Key::Id(i as u32 + 1)))
                .collect(),
        )
    }

    /// Parses `a(1),'b(2),tau(3)`. Keys may be omitted, in which case labels
    /// are numbered by position. `eps` or the empty string is the empty trace.
    pub fn parse(text: &str) -> Result<Trace> {
        let text = text.trim();
        if text.is_empty() || text == "eps" {
            return Ok(Trace::empty());
        }
        let mut labels = Vec::new();
        for (i, part) in text.split(',').enumerate() {
            let part = part.trim();
            let (head, key) = match part.find('(') {
                Some(open) if part.ends_with(')') => {
                    let n: u32 = part[open + 1..part.len() - 1]
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad key in label `{part}`")))?;
                    if n == 0 {
                        return Err(Error::Invalid(format!("keys are positive in `{part}`")));
                    }
                    (part[..open].trim(), Key::Id(n))
                }
                Some(_) => return Err(Error::Invalid(format!("bad label `{part}`"))),
                None => (part, Key::Id(i as u32 + 1)),
            };
            let action = if head == "tau" {
                Action::Internal
            } else if let Some(rest) = head.strip_prefix('\'') {
                Action::Visible { channel: checked_name(rest)?, polarity: Polarity::Negative }
            } else {
                Action::Visible { channel: checked_name(head)?, polarity: Polarity::Positive }
            };
            labels.push(Label::new(action, key));
        }
        Ok(Trace(labels))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.0.iter().map(|l| Value::String(l.to_string())).collect())
    }

    /// Keyless rendering of the action sequence, e.g. `a,'b`; `eps` if empty.
    pub fn action_string(&self) -> String {
        if self.is_empty() {
            return "eps".into();
        }
        self.0.iter().map(|l| l.action.to_string()).collect::<Vec<_>>().join(",")
    }
}

fn checked_name(s: &str) -> Result<Name> {
    let mut chars = s.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(Name::new(s))
    } else {
        Err(Error::Invalid(format!("bad channel name `{s}`")))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("eps");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Drops internal labels.
pub fn observable(t: &Trace) -> Trace {
    Trace(t.0.iter().filter(|l| !l.is_internal()).cloned().collect())
}

/// Flips the polarity of every visible label.
pub fn complement(t: &Trace) -> Trace {
    Trace(
        t.0.iter()
            .map(|l| Label::new(l.action.complement().unwrap_or(Action::Internal), l.key))
            .collect(),
    )
}

/// Renames keys by order of first occurrence to `1, 2, ..`.
pub fn canonical_keys(t: &Trace) -> Trace {
    let mut map: BTreeMap<Key, Key> = BTreeMap::new();
    Trace(
        t.0.iter()
            .map(|l| {
                let next = Key::Id(map.len() as u32 + 1);
                let k = *map.entry(l.key).or_insert(next);
                Label::new(l.action.clone(), k)
            })
            .collect(),
    )
}

/// `(before ⊢ trace ▷ after)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TypedTrace {
    pub before: DepHistory,
    pub trace: Trace,
    pub after: DepHistory,
}

impl fmt::Display for TypedTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {} |> {}", self.before, self.trace, self.after)
    }
}

/// Types `t` from `d`: every label pushes its key onto the history.
pub fn type_trace(d: &DepHistory, t: &Trace) -> Result<TypedTrace> {
    let mut after = d.clone();
    for l in &t.0 {
        after = after.push(l.key).ok_or_else(|| {
            if d.contains(l.key) {
                Error::Invalid(format!("key {} of the trace clashes with the history", l.key))
            } else {
                Error::Invalid(format!("key {} occurs twice in the trace", l.key))
            }
        })?;
    }
    Ok(TypedTrace { before: d.clone(), trace: t.clone(), after })
}

fn zip_hist(d1: &[Key], d2: &[Key], out: &mut Vec<Vec<Key>>, acc: &mut Vec<Key>) {
    if d1.is_empty() && d2.is_empty() {
        out.push(acc.clone());
        return;
    }
    // Newest first: the head of the result comes from ZL, ZR or ZSYNC.
    if let (Some(&k1), Some(&k2)) = (d1.first(), d2.first()) {
        if k1 == k2 && !d1[1..].contains(&k1) && !d2[1..].contains(&k1) {
            acc.push(k1);
            zip_hist(&d1[1..], &d2[1..], out, acc);
            acc.pop();
        }
    }
    if let Some(&k) = d1.first() {
        if !d2.contains(&k) {
            acc.push(k);
            zip_hist(&d1[1..], d2, out, acc);
            acc.pop();
        }
    }
    if let Some(&k) = d2.first() {
        if !d1.contains(&k) {
            acc.push(k);
            zip_hist(d1, &d2[1..], out, acc);
            acc.pop();
        }
    }
}

/// Every `D` with `d1 ∥ d2 ↠ D`.
pub fn zip_histories(d1: &DepHistory, d2: &DepHistory) -> Vec<DepHistory> {
    let mut out = Vec::new();
    zip_hist(d1.keys(), d2.keys(), &mut out, &mut Vec::new());
    let set: BTreeSet<Vec<Key>> = out.into_iter().collect();
    set.into_iter()
        .map(|ks| DepHistory::from_newest_first(ks).expect("zipped keys are distinct"))
        .collect()
}

/// Membership test for `d1 ∥ d2 ↠ d` without enumerating.
pub fn zips_to(d1: &[Key], d2: &[Key], d: &[Key]) -> bool {
    let Some((&k, rest)) = d.split_first() else {
        return d1.is_empty() && d2.is_empty();
    };
    let h1 = d1.first() == Some(&k);
    let h2 = d2.first() == Some(&k);
    (h1 && h2 && zips_to(&d1[1..], &d2[1..], rest))
        || (h1 && !d2.contains(&k) && zips_to(&d1[1..], d2, rest))
        || (h2 && !d1.contains(&k) && zips_to(d1, &d2[1..], rest))
}

#[allow(clippy::too_many_arguments)]
fn zip_tr(
    b1: &DepHistory,
    t1: &[Label],
    a1: &DepHistory,
    b2: &DepHistory,
    t2: &[Label],
    a2: &DepHistory,
    d: &DepHistory,
    acc: &mut Vec<Label>,
    out: &mut BTreeSet<(Trace, DepHistory)>,
) {
    if t1.is_empty() && t2.is_empty() {
        // ZTε: the component histories have reached their final values.
        if b1 == a1 && b2 == a2 && zips_to(b1.keys(), b2.keys(), d.keys()) {
            out.insert((Trace(acc.clone()), d.clone()));
        }
        return;
    }
    if let Some((l, rest)) = t1.split_first() {
        // ZTL
        if let (Some(nb1), Some(nd)) = (b1.push(l.key), d.push(l.key)) {
            acc.push(l.clone());
            zip_tr(&nb1, rest, a1, b2, t2, a2, &nd, acc, out);
            acc.pop();
        }
    }
    if let Some((l, rest)) = t2.split_first() {
        // ZTR
        if let (Some(nb2), Some(nd)) = (b2.push(l.key), d.push(l.key)) {
            acc.push(l.clone());
            zip_tr(b1, t1, a1, &nb2, rest, a2, &nd, acc, out);
            acc.pop();
        }
    }
    if let (Some((l1, r1)), Some((l2, r2))) = (t1.split_first(), t2.split_first()) {
        // ZTSYNC
        if l1.key == l2.key && l1.action.is_complement_of(&l2.action) {
            if let (Some(nb1), Some(nb2), Some(nd)) = (b1.push(l1.key), b2.push(l2.key), d.push(l1.key)) {
                acc.push(Label::new(Action::Internal, l1.key));
                zip_tr(&nb1, r1, a1, &nb2, r2, a2, &nd, acc, out);
                acc.pop();
            }
        }
    }
}

/// All zipped typed traces of `t1` and `t2` starting from `target_before`.
pub fn zip_traces(t1: &TypedTrace, t2: &TypedTrace, target_before: &DepHistory) -> Result<Vec<TypedTrace>> {
    if !zips_to(t1.before.keys(), t2.before.keys(), target_before.keys()) {
        return Err(Error::Invalid(format!(
            "{target_before} is not a zip of {} and {}",
            t1.before, t2.before
        )));
    }
    let mut out = BTreeSet::new();
    zip_tr(
        &t1.before,
        &t1.trace.0,
        &t1.after,
        &t2.before,
        &t2.trace.0,
        &t2.after,
        target_before,
        &mut Vec::new(),
        &mut out,
    );
    Ok(out
        .into_iter()
        .map(|(trace, after)| TypedTrace { before: target_before.clone(), trace, after })
        .collect())
}

/// Decomposes an all-internal run of `left ∥ right` (both started from
/// `run.before`) into component runs, replaying each step as a move of the
/// left side, of the right side, or a synchronisation of both.
pub fn unzip_trace(left: &System, right: &System, run: &TypedTrace) -> Result<Vec<(TypedTrace, TypedTrace)>> {
    if !observable(&run.trace).is_empty() {
        return Err(Error::Invalid("unzipping needs a run with no visible labels".into()));
    }
    let d = run.before.clone();
    let start = (
        State { history: d.clone(), system: crate::syntax::canonicalize(left)? },
        State { history: d.clone(), system: crate::syntax::canonicalize(right)? },
        Vec::<Label>::new(),
        Vec::<Label>::new(),
    );
    let mut frontier = BTreeSet::from([start]);
    for label in &run.trace.0 {
        let k = label.key;
        let mut next = BTreeSet::new();
        for (ls, rs, t1, t2) in &frontier {
            let lt = if ls.history.contains(k) { Vec::new() } else { lts_states_with_key(ls, k)? };
            let rt = if rs.history.contains(k) { Vec::new() } else { lts_states_with_key(rs, k)? };
            for (l, n) in lt.iter().filter(|(l, _)| l.is_internal()) {
                let mut t1 = t1.clone();
                t1.push(l.clone());
                next.insert((n.clone(), rs.clone(), t1, t2.clone()));
            }
            for (l, n) in rt.iter().filter(|(l, _)| l.is_internal()) {
                let mut t2 = t2.clone();
                t2.push(l.clone());
                next.insert((ls.clone(), n.clone(), t1.clone(), t2));
            }
            for (l1, n1) in &lt {
                for (l2, n2) in rt.iter().filter(|(l2, _)| l1.action.is_complement_of(&l2.action)) {
                    let (mut t1, mut t2) = (t1.clone(), t2.clone());
                    t1.push(l1.clone());
                    t2.push(l2.clone());
                    next.insert((n1.clone(), n2.clone(), t1, t2));
                }
            }
        }
        if next.is_empty() {
            return Err(Error::Invalid(format!("run {} is not realizable at {label}", run.trace)));
        }
        frontier = next;
    }
    let mut out = BTreeSet::new();
    for (_, _, t1, t2) in frontier {
        out.insert((type_trace(&d, &Trace(t1))?, type_trace(&d, &Trace(t2))?));
    }
    Ok(out.into_iter().collect())
}
