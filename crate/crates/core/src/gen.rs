//! Seeded random initial systems for the property suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::syntax::{Action, Branch, Key, KeyRef, KeyVar, Name, ProcVar, Process, System};

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Upper bound on action prefixes per system.
    pub max_prefixes: usize,
    pub names: Vec<String>,
    /// Probability that a prefix binds its key, and that a leaf under a
    /// binder becomes a rollback.
    pub roll_density: f64,
    pub allow_recursion: bool,
    pub max_components: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_prefixes: 6,
            names: ["a", "b", "c"].map(String::from).to_vec(),
            roll_density: 0.35,
            allow_recursion: false,
            max_components: 3,
        }
    }
}

pub struct TermGen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    next_var: usize,
    /// Visible actions emitted so far in the current system.
    emitted: Vec<Action>,
}

impl TermGen {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed), cfg, next_var: 0, emitted: Vec::new() }
    }

    /// Half the time, the complement of an earlier action, so that
    /// components tend to interact.
    fn action(&mut self) -> Action {
        if !self.emitted.is_empty() && self.rng.gen_bool(0.5) {
            let a = self.emitted.choose(&mut self.rng).expect("emitted").clone();
            return a.complement().expect("visible");
        }
        if self.rng.gen_bool(0.15) {
            return Action::Internal;
        }
        let name = self.cfg.names.choose(&mut self.rng).expect("names").clone();
        let a = if self.rng.gen_bool(0.5) { Action::input(&name) } else { Action::output(&name) };
        self.emitted.push(a.clone());
        a
    }

    fn leaf(&mut self, scope: &[KeyVar]) -> Process {
        if !scope.is_empty() && self.rng.gen_bool(self.cfg.roll_density) {
            Process::Roll(KeyRef::Var(scope.choose(&mut self.rng).expect("scope").clone()))
        } else {
            Process::nil()
        }
    }

    /// A summand using exactly `n >= 1` prefixes.
    fn branch(&mut self, n: usize, scope: &[KeyVar]) -> Branch {
        let action = self.action();
        let binder = self.rng.gen_bool(self.cfg.roll_density).then(|| {
            self.next_var += 1;
            KeyVar::new(&format!("g{}", self.next_var))
        });
        let mut inner = scope.to_vec();
        inner.extend(binder.clone());
        let continuation = self.process(n - 1, &inner);
        Branch { action, binder, continuation }
    }

    /// A process using exactly `n` prefixes.
    fn process(&mut self, n: usize, scope: &[KeyVar]) -> Process {
        if n == 0 {
            return self.leaf(scope);
        }
        let roll: f64 = self.rng.gen();
        if self.cfg.allow_recursion && roll < 0.15 {
            return self.recursion(n, scope);
        }
        if n < 2 || roll < 0.6 {
            return Process::Sum(vec![self.branch(n, scope)]);
        }
        let k = self.rng.gen_range(1..n);
        if roll < 0.8 {
            let first = self.branch(k, scope);
            let second = self.branch(n - k, scope);
            Process::Sum(vec![first, second])
        } else {
            let left = self.process(k, scope);
            let right = self.process(n - k, scope);
            Process::par(left, right)
        }
    }

    /// `rec X. α.X`, with an exit branch when there is budget for one.
    fn recursion(&mut self, n: usize, scope: &[KeyVar]) -> Process {
        self.next_var += 1;
        let var = ProcVar::new(&format!("X{}", self.next_var));
        let action = self.action();
        let mut bs = vec![Branch { action, binder: None, continuation: Process::Var(var.clone()) }];
        if n > 1 {
            bs.push(self.branch(n - 1, scope));
        }
        Process::Rec { var, binder: None, body: Box::new(Process::Sum(bs)) }
    }

    /// One initial system: parallel `eps:` components sharing a random
    /// prefix budget, sometimes under a restriction.
    pub fn system(&mut self) -> System {
        self.emitted.clear();
        let total = self.rng.gen_range(1..=self.cfg.max_prefixes.max(1));
        let count = self.rng.gen_range(1..=self.cfg.max_components.clamp(1, total));
        let mut sizes = vec![1; count];
        for _ in count..total {
            let i = self.rng.gen_range(0..count);
            sizes[i] += 1;
        }
        let parts: Vec<System> =
            sizes.into_iter().map(|n| System::Named(Key::Eps, self.process(n, &[]))).collect();
        let m = System::par_all(parts);
        if self.rng.gen_bool(0.25) {
            let name = self.cfg.names.choose(&mut self.rng).expect("names").clone();
            System::restrict(Name::new(&name), m)
        } else {
            m
        }
    }

    pub fn systems(&mut self, n: usize) -> Vec<System> {
        (0..n).map(|_| self.system()).collect()
    }
}

/// `n` systems from `seed` with the default configuration.
pub fn random_systems(seed: u64, n: usize) -> Vec<System> {
    TermGen::new(seed, GenConfig::default()).systems(n)
}
