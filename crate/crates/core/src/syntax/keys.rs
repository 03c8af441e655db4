use std::collections::BTreeSet;

use super::{Branch, DepHistory, Key, KeyRef, KeyVar, Name, ProcVar, Process, System};

fn insert_key(out: &mut BTreeSet<Key>, k: Key) {
    if k != Key::Eps {
        out.insert(k);
    }
}

fn collect_process_keys(p: &Process, out: &mut BTreeSet<Key>) {
    match p {
        Process::Sum(bs) => bs.iter().for_each(|b| collect_process_keys(&b.continuation, out)),
        Process::Par(a, b) => {
            collect_process_keys(a, out);
            collect_process_keys(b, out);
        }
        Process::Restrict(_, q) => collect_process_keys(q, out),
        Process::Rec { body, .. } => collect_process_keys(body, out),
        Process::Var(_) | Process::Roll(KeyRef::Var(_)) => {}
        Process::Roll(KeyRef::Key(k)) => insert_key(out, *k),
    }
}

pub(crate) fn collect_system_keys(m: &System, out: &mut BTreeSet<Key>) {
    match m {
        System::Nil => {}
        System::Restrict(_, n) => collect_system_keys(n, out),
        System::Par(a, b) => {
            collect_system_keys(a, out);
            collect_system_keys(b, out);
        }
        System::Named(k, p) => {
            insert_key(out, *k);
            collect_process_keys(p, out);
        }
        System::Memory { origin, process, key } => {
            insert_key(out, *origin);
            insert_key(out, *key);
            collect_process_keys(process, out);
        }
    }
}

/// Keys occurring in a process, `eps` excluded.
pub fn keys_of_process(p: &Process) -> BTreeSet<Key> {
    let mut out = BTreeSet::new();
    collect_process_keys(p, &mut out);
    out
}

/// Keys occurring in a system, `eps` excluded. Restriction is transparent.
pub fn keys_of_system(m: &System) -> BTreeSet<Key> {
    let mut out = BTreeSet::new();
    collect_system_keys(m, &mut out);
    out
}

pub fn keys_of_history(d: &DepHistory) -> BTreeSet<Key> {
    d.keys().iter().copied().filter(|k| *k != Key::Eps).collect()
}

/// Replaces free occurrences of `var` by `key`. Binders named `var` shadow.
pub fn substitute_keyvar(p: &Process, var: &KeyVar, key: Key) -> Process {
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|b| Branch {
                    action: b.action.clone(),
                    binder: b.binder.clone(),
                    continuation: if b.binder.as_ref() == Some(var) {
                        b.continuation.clone()
                    } else {
                        substitute_keyvar(&b.continuation, var, key)
                    },
                })
                .collect(),
        ),
        Process::Par(a, b) => {
            Process::par(substitute_keyvar(a, var, key), substitute_keyvar(b, var, key))
        }
        Process::Restrict(n, q) => {
            Process::Restrict(n.clone(), Box::new(substitute_keyvar(q, var, key)))
        }
        Process::Rec { var: x, binder, body } => Process::Rec {
            var: x.clone(),
            binder: binder.clone(),
            body: if binder.as_ref() == Some(var) {
                body.clone()
            } else {
                Box::new(substitute_keyvar(body, var, key))
            },
        },
        Process::Var(_) => p.clone(),
        Process::Roll(KeyRef::Var(v)) if v == var => Process::Roll(KeyRef::Key(key)),
        Process::Roll(_) => p.clone(),
    }
}

fn collect_free_names(p: &Process, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match p {
        Process::Sum(bs) => {
            for b in bs {
                if let Some(c) = b.action.channel() {
                    if !bound.contains(c) {
                        out.insert(c.clone());
                    }
                }
                collect_free_names(&b.continuation, bound, out);
            }
        }
        Process::Par(a, b) => {
            collect_free_names(a, bound, out);
            collect_free_names(b, bound, out);
        }
        Process::Restrict(n, q) => {
            bound.push(n.clone());
            collect_free_names(q, bound, out);
            bound.pop();
        }
        Process::Rec { body, .. } => collect_free_names(body, bound, out),
        Process::Var(_) | Process::Roll(_) => {}
    }
}

/// Channel names occurring free in a process.
pub fn free_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free_names(p, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn has_free_procvar(p: &Process, x: &ProcVar) -> bool {
    match p {
        Process::Sum(bs) => bs.iter().any(|b| has_free_procvar(&b.continuation, x)),
        Process::Par(a, b) => has_free_procvar(a, x) || has_free_procvar(b, x),
        Process::Restrict(_, q) => has_free_procvar(q, x),
        Process::Rec { var, body, .. } => var != x && has_free_procvar(body, x),
        Process::Var(v) => v == x,
        Process::Roll(_) => false,
    }
}

/// Renames free occurrences of channel `from` to `to`. The caller guarantees
/// `to` is not bound anywhere inside `p`.
pub(crate) fn rename_free_name(p: &Process, from: &Name, to: &Name) -> Process {
    let swap = |n: &Name| if n == from { to.clone() } else { n.clone() };
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|b| Branch {
                    action: match &b.action {
                        super::Action::Visible { channel, polarity } => {
                            super::Action::Visible { channel: swap(channel), polarity: *polarity }
                        }
                        a => a.clone(),
                    },
                    binder: b.binder.clone(),
                    continuation: rename_free_name(&b.continuation, from, to),
                })
                .collect(),
        ),
        Process::Par(a, b) => {
            Process::par(rename_free_name(a, from, to), rename_free_name(b, from, to))
        }
        Process::Restrict(n, _) if n == from => p.clone(),
        Process::Restrict(n, q) => {
            Process::Restrict(n.clone(), Box::new(rename_free_name(q, from, to)))
        }
        Process::Rec { var, binder, body } => Process::Rec {
            var: var.clone(),
            binder: binder.clone(),
            body: Box::new(rename_free_name(body, from, to)),
        },
        Process::Var(_) | Process::Roll(_) => p.clone(),
    }
}

fn all_names(p: &Process, out: &mut BTreeSet<Name>) {
    match p {
        Process::Sum(bs) => {
            for b in bs {
                if let Some(c) = b.action.channel() {
                    out.insert(c.clone());
                }
                all_names(&b.continuation, out);
            }
        }
        Process::Par(a, b) => {
            all_names(a, out);
            all_names(b, out);
        }
        Process::Restrict(n, q) => {
            out.insert(n.clone());
            all_names(q, out);
        }
        Process::Rec { body, .. } => all_names(body, out),
        Process::Var(_) | Process::Roll(_) => {}
    }
}

fn fresh_variant(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    (1..)
        .map(|i| Name::new(&format!("{}_{i}", base.as_str())))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply of names")
}

/// Capture-avoiding `p{r/x}`.
pub fn substitute_procvar(p: &Process, x: &ProcVar, r: &Process) -> Process {
    let fn_r = free_names(r);
    subst_procvar(p, x, r, &fn_r)
}

fn subst_procvar(p: &Process, x: &ProcVar, r: &Process, fn_r: &BTreeSet<Name>) -> Process {
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|b| Branch {
                    action: b.action.clone(),
                    binder: b.binder.clone(),
                    continuation: subst_procvar(&b.continuation, x, r, fn_r),
                })
                .collect(),
        ),
        Process::Par(a, b) => {
            Process::par(subst_procvar(a, x, r, fn_r), subst_procvar(b, x, r, fn_r))
        }
        Process::Restrict(n, q) => {
            if fn_r.contains(n) && has_free_procvar(q, x) {
                let mut avoid = fn_r.clone();
                all_names(q, &mut avoid);
                avoid.insert(n.clone());
                let fresh = fresh_variant(n, &avoid);
                let renamed = rename_free_name(q, n, &fresh);
                Process::Restrict(fresh, Box::new(subst_procvar(&renamed, x, r, fn_r)))
            } else {
                Process::Restrict(n.clone(), Box::new(subst_procvar(q, x, r, fn_r)))
            }
        }
        Process::Rec { var, .. } if var == x => p.clone(),
        Process::Rec { var, binder, body } => Process::Rec {
            var: var.clone(),
            binder: binder.clone(),
            body: Box::new(subst_procvar(body, x, r, fn_r)),
        },
        Process::Var(v) if v == x => r.clone(),
        Process::Var(_) | Process::Roll(_) => p.clone(),
    }
}

/// One unfolding of `rec X(γ).P` tagged with `key`: `P{rec X(γ).P/X}{key/γ}`.
/// Returns `None` when `p` is not a recursion.
pub fn unfold_rec(p: &Process, key: Key) -> Option<Process> {
    let Process::Rec { var, binder, body } = p else {
        return None;
    };
    let unfolded = substitute_procvar(body, var, p);
    Some(match binder {
        Some(g) => substitute_keyvar(&unfolded, g, key),
        None => unfolded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_configuration, parse_process, Action};

    fn g() -> KeyVar {
        KeyVar::new("g")
    }

    #[test]
    fn keys_of_nil_is_empty() {
        assert!(keys_of_system(&System::Nil).is_empty());
    }

    #[test]
    fn keys_of_roll_literal() {
        let p = Process::Roll(KeyRef::Key(Key::Id(4)));
        assert_eq!(keys_of_process(&p), BTreeSet::from([Key::Id(4)]));
    }

    #[test]
    fn keys_of_named_and_memory() {
        // k:P ∥ [k0:a.0; k] with P key-free
        let m = System::par(
            System::Named(Key::Id(2), Process::prefix(Action::input("b"), None, Process::nil())),
            System::Memory {
                origin: Key::Id(1),
                process: Process::prefix(Action::input("a"), None, Process::nil()),
                key: Key::Id(2),
            },
        );
        assert_eq!(keys_of_system(&m), BTreeSet::from([Key::Id(1), Key::Id(2)]));
    }

    #[test]
    fn keys_skip_eps_and_see_through_restriction() {
        let c = parse_configuration("2 1 |- new a. (eps: a.roll<1> | mem[eps: 'a.0; 2])").unwrap();
        assert_eq!(keys_of_system(&c.system), BTreeSet::from([Key::Id(1), Key::Id(2)]));
        assert_eq!(keys_of_history(&c.history), BTreeSet::from([Key::Id(1), Key::Id(2)]));
    }

    #[test]
    fn substitute_roll_var() {
        let p = Process::Roll(KeyRef::Var(g()));
        assert_eq!(substitute_keyvar(&p, &g(), Key::Id(3)), Process::Roll(KeyRef::Key(Key::Id(3))));
    }

    #[test]
    fn substitute_in_nil_is_identity() {
        assert_eq!(substitute_keyvar(&Process::nil(), &g(), Key::Id(3)), Process::nil());
    }

    /// Independent scope-tracking oracle: walks the term recording which
    /// occurrences of `g` are free, then checks exactly those were replaced.
    fn free_roll_positions(p: &Process, var: &KeyVar, bound: bool, out: &mut Vec<bool>) {
        match p {
            Process::Sum(bs) => {
                for b in bs {
                    let inner = bound || b.binder.as_ref() == Some(var);
                    free_roll_positions(&b.continuation, var, inner, out);
                }
            }
            Process::Par(a, b) => {
                free_roll_positions(a, var, bound, out);
                free_roll_positions(b, var, bound, out);
            }
            Process::Restrict(_, q) => free_roll_positions(q, var, bound, out),
            Process::Rec { binder, body, .. } => {
                free_roll_positions(body, var, bound || binder.as_ref() == Some(var), out)
            }
            Process::Var(_) => {}
            Process::Roll(KeyRef::Var(v)) if v == var => out.push(!bound),
            Process::Roll(_) => {}
        }
    }

    fn roll_targets(p: &Process, out: &mut Vec<KeyRef>) {
        match p {
            Process::Sum(bs) => bs.iter().for_each(|b| roll_targets(&b.continuation, out)),
            Process::Par(a, b) => {
                roll_targets(a, out);
                roll_targets(b, out);
            }
            Process::Restrict(_, q) | Process::Rec { body: q, .. } => roll_targets(q, out),
            Process::Var(_) => {}
            Process::Roll(r) => out.push(r.clone()),
        }
    }

    #[test]
    fn inner_binder_shadows() {
        // b(g).roll<g> is closed in g: unchanged
        let p = parse_process("b(g).roll<g>").unwrap();
        assert_eq!(substitute_keyvar(&p, &g(), Key::Id(3)), p);

        // Mixed: the outer roll<g> is free (the term is an open body), the
        // inner one bound.
        let body = Process::par(
            Process::Roll(KeyRef::Var(g())),
            parse_process("c(g).roll<g>").unwrap(),
        );
        let mut free = Vec::new();
        free_roll_positions(&body, &g(), false, &mut free);
        assert_eq!(free, vec![true, false]);
        let out = substitute_keyvar(&body, &g(), Key::Id(3));
        let mut targets = Vec::new();
        roll_targets(&out, &mut targets);
        assert_eq!(targets, vec![KeyRef::Key(Key::Id(3)), KeyRef::Var(g())]);
    }

    #[test]
    fn unfold_substitutes_key_and_body() {
        let p = parse_process("rec X(g). a.(roll<g> | X)").unwrap();
        let u = unfold_rec(&p, Key::Id(5)).unwrap();
        let expected = Process::prefix(
            Action::input("a"),
            None,
            Process::par(Process::Roll(KeyRef::Key(Key::Id(5))), p.clone()),
        );
        assert_eq!(u, expected);
    }

    #[test]
    fn unfold_avoids_name_capture() {
        // The inner restriction on `a` must not capture the free `a` of the
        // recursion body copied under it.
        let p = parse_process("rec X. (a.0 | new a. 'a.X)").unwrap();
        let u = unfold_rec(&p, Key::Id(1)).unwrap();
        let Process::Par(_, inner) = &u else { panic!("{u:?}") };
        let Process::Restrict(n, _) = &**inner else { panic!() };
        assert_ne!(n.as_str(), "a");
        assert!(free_names(&u).contains(&Name::new("a")));
        assert_eq!(free_names(&u), free_names(&p));
    }
}
