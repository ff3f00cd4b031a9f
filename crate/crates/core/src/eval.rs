//! Weak-head evaluation of closed terms to distributions.
//!
//! `peval` evaluates a term to a distribution over abstractions; `papply`
//! applies an evaluated operator to an unevaluated operand. Operators that
//! are distributions are split with gamma-left, operands that are
//! distributions with gamma-right, and beta fires when the operand is an
//! abstraction. With [`Laziness::Lazy`] beta also fires whenever the
//! operand cannot be duplicated into correlated copies: it is
//! distribution-free, or the bound variable is used at most once outside any
//! inner binder.
//!
//! Every beta, gamma-left and gamma-right application costs one unit of fuel.
//! When fuel runs out the probability mass of the branch being evaluated is
//! reported as unknown rather than guessed, so every outcome probability is a
//! lower bound on the exact value.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;
use thiserror::Error;

use crate::approx::{prune_entries, SampleRng};
use crate::distribution::Distribution;
use crate::reduce::{occurrences, substitute, RedexKind, ReduceError};
use crate::term::{Term, TermError, TermId, TermStore};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Laziness {
    /// Evaluate application operands eagerly unless they are abstractions.
    Eager,
    /// Also substitute operands that are unused, used once, or
    /// distribution-free.
    #[default]
    Lazy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Beta and gamma steps allowed; `None` is unlimited.
    pub fuel: Option<u64>,
    pub laziness: Laziness,
    pub improper_beta: bool,
    /// Drop branches whose absolute probability falls below this; 0 disables.
    pub prune_epsilon: f64,
    pub cache: bool,
    pub trace: bool,
    /// Fail with [`EvalError::FuelExhausted`] instead of reporting unknown mass.
    pub strict_fuel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fuel: None,
            laziness: Laziness::Lazy,
            improper_beta: false,
            prune_epsilon: 0.0,
            cache: true,
            trace: false,
            strict_fuel: false,
        }
    }
}

impl EvalConfig {
    pub fn eager() -> EvalConfig {
        EvalConfig { laziness: Laziness::Eager, ..EvalConfig::default() }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..1.0).contains(&self.prune_epsilon) {
            return Err(EvalError::InvalidConfig(format!(
                "prune epsilon must be in [0, 1), got {}",
                self.prune_epsilon
            )));
        }
        if self.fuel == Some(0) {
            return Err(EvalError::InvalidConfig("fuel must be at least 1".into()));
        }
        Ok(())
    }

    /// Cache entries computed under different reduction rules must not mix.
    fn signature(&self) -> u8 {
        let lazy = match self.laziness {
            Laziness::Eager => 0,
            Laziness::Lazy => 1,
        };
        lazy | (u8::from(self.improper_beta) << 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub step: u64,
    pub kind: RedexKind,
    pub before: TermId,
    pub after: TermId,
}

impl TraceStep {
    /// `<step#> <kind> <before> => <after>`
    pub fn render(&self, store: &TermStore) -> String {
        format!("{} {} {} => {}", self.step, self.kind, store.rendered(self.before), store.rendered(self.after))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    /// Resolved outcomes over abstractions. Weights plus `unknown_mass` sum
    /// to one.
    pub outcome: Distribution,
    pub unknown_mass: f64,
    pub steps_used: u64,
    pub cache_hits: u64,
    pub trace: Option<Vec<TraceStep>>,
}

impl EvalResult {
    pub fn resolved_mass(&self) -> f64 {
        self.outcome.total()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("term has free variables: {0}")]
    FreeVariable(String),
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("applied a term that is not a function: {0}")]
    NotAFunction(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Term(#[from] TermError),
}

type CachedEntries = Arc<[(TermId, f64)]>;

/// Completed evaluation results keyed by term and reduction rules. Shared
/// between evaluations; insertion is idempotent, so concurrent writers are
/// harmless.
#[derive(Debug, Default)]
pub struct EvalCache {
    map: RwLock<HashMap<(TermId, u8), CachedEntries>>,
}

impl EvalCache {
    pub fn new() -> EvalCache {
        EvalCache::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.write().clear();
    }

    fn get(&self, key: (TermId, u8)) -> Option<Arc<[(TermId, f64)]>> {
        self.map.read().get(&key).cloned()
    }

    fn insert(&self, key: (TermId, u8), value: &[(TermId, f64)]) {
        self.map.write().entry(key).or_insert_with(|| value.into());
    }
}

/// Evaluate a closed term. Uses a fresh cache when `cfg.cache` is on.
pub fn peval(store: &TermStore, t: TermId, cfg: &EvalConfig) -> Result<EvalResult, EvalError> {
    let local = EvalCache::new();
    run(store, t, cfg, cfg.cache.then_some(&local), None)
}

/// Evaluate with a caller-owned cache that persists across calls.
pub fn eval_cached(store: &TermStore, t: TermId, cfg: &EvalConfig, cache: &EvalCache) -> Result<EvalResult, EvalError> {
    run(store, t, cfg, cfg.cache.then_some(cache), None)
}

/// Apply the weak-head value `f` (an abstraction or a distribution of them)
/// to the closed operand `a`.
pub fn papply(store: &TermStore, f: TermId, a: TermId, cfg: &EvalConfig) -> Result<EvalResult, EvalError> {
    cfg.validate()?;
    for t in [f, a] {
        if store.level(t) > 0 {
            return Err(EvalError::FreeVariable(store.rendered(t).to_string()));
        }
    }
    let local = EvalCache::new();
    let mut m = Machine::new(store, cfg, cfg.cache.then_some(&local), None);
    let fv = match store.term(f) {
        Term::Lam(_) => Partial::point(f),
        Term::Dist(entries) => {
            if let Some(&(bad, _)) = entries.iter().find(|e| !store.is_lam(e.0)) {
                return Err(EvalError::NotAFunction(store.rendered(bad).to_string()));
            }
            Partial { entries: entries.to_vec(), unknown: 0.0 }
        }
        _ => return Err(EvalError::NotAFunction(store.rendered(f).to_string())),
    };
    let out = m.apply_values(fv, a, 1.0)?;
    Ok(m.finish(out))
}

pub(crate) fn run(
    store: &TermStore,
    t: TermId,
    cfg: &EvalConfig,
    cache: Option<&EvalCache>,
    sampler: Option<&mut SampleRng>,
) -> Result<EvalResult, EvalError> {
    cfg.validate()?;
    if store.level(t) > 0 {
        return Err(EvalError::FreeVariable(store.rendered(t).to_string()));
    }
    let mut m = Machine::new(store, cfg, cache, sampler);
    let out = m.peval(t, 1.0)?;
    Ok(m.finish(out))
}

/// Evaluation result of one call, as weights relative to that call.
/// `entries` plus `unknown` sum to one.
#[derive(Clone, Debug, Default)]
pub(crate) struct Partial {
    entries: Vec<(TermId, f64)>,
    unknown: f64,
}

impl Partial {
    fn point(t: TermId) -> Partial {
        Partial { entries: vec![(t, 1.0)], unknown: 0.0 }
    }

    fn lost() -> Partial {
        Partial { entries: Vec::new(), unknown: 1.0 }
    }

    fn absorb(&mut self, other: Partial, weight: f64) {
        for (t, p) in other.entries {
            match self.entries.iter_mut().find(|e| e.0 == t) {
                Some(e) => e.1 += p * weight,
                None => self.entries.push((t, p * weight)),
            }
        }
        self.unknown += other.unknown * weight;
    }
}

struct Selection {
    kept: Vec<(TermId, f64)>,
    dropped: f64,
}

struct Machine<'a> {
    store: &'a TermStore,
    cfg: &'a EvalConfig,
    cache: Option<&'a EvalCache>,
    signature: u8,
    fuel_left: Option<u64>,
    /// Set on the first failed charge. From then on only values and
    /// weighted sums are free; everything else is lost, which keeps the
    /// resolved mass monotone in fuel.
    exhausted: bool,
    steps: u64,
    hits: u64,
    trace: Option<Vec<TraceStep>>,
    sampler: Option<&'a mut SampleRng>,
    single_use: HashMap<TermId, bool>,
}

impl<'a> Machine<'a> {
    fn new(
        store: &'a TermStore,
        cfg: &'a EvalConfig,
        cache: Option<&'a EvalCache>,
        sampler: Option<&'a mut SampleRng>,
    ) -> Machine<'a> {
        // Partial results depend on remaining fuel and pruning, and samples
        // are not distributions, so none of those may touch the cache.
        let cache = cache.filter(|_| cfg.prune_epsilon == 0.0 && sampler.is_none());
        Machine {
            store,
            cfg,
            cache,
            signature: cfg.signature(),
            fuel_left: cfg.fuel,
            exhausted: false,
            steps: 0,
            hits: 0,
            trace: cfg.trace.then(Vec::new),
            sampler,
            single_use: HashMap::new(),
        }
    }

    fn finish(self, out: Partial) -> EvalResult {
        let outcome = Distribution::from_weighted(self.store, out.entries);
        let unknown_mass = (1.0 - outcome.total()).clamp(0.0, 1.0);
        let unknown_mass = if out.unknown == 0.0 { 0.0 } else { unknown_mass };
        EvalResult { outcome, unknown_mass, steps_used: self.steps, cache_hits: self.hits, trace: self.trace }
    }

    fn charge(&mut self) -> Result<bool, EvalError> {
        match self.fuel_left.as_mut() {
            Some(0) if self.cfg.strict_fuel => Err(EvalError::FuelExhausted(self.steps)),
            Some(0) => {
                self.exhausted = true;
                Ok(false)
            }
            Some(n) => {
                *n -= 1;
                self.steps += 1;
                Ok(true)
            }
            None => {
                self.steps += 1;
                Ok(true)
            }
        }
    }

    fn record(&mut self, kind: RedexKind, before: impl FnOnce() -> TermId, after: impl FnOnce() -> TermId) {
        if let Some(trace) = self.trace.as_mut() {
            let step = self.steps;
            trace.push(TraceStep { step, kind, before: before(), after: after() });
        }
    }

    fn lookup(&mut self, t: TermId) -> Option<Partial> {
        let hit = self.cache?.get((t, self.signature))?;
        self.hits += 1;
        Some(Partial { entries: hit.to_vec(), unknown: 0.0 })
    }

    fn remember(&self, t: TermId, out: &Partial) {
        if let Some(cache) = self.cache {
            if out.unknown == 0.0 {
                cache.insert((t, self.signature), &out.entries);
            }
        }
    }

    /// Which entries of a weighted set take part, after sampling or pruning.
    /// `mass` is the absolute probability of reaching this point.
    fn select(&mut self, entries: &[(TermId, f64)], mass: f64) -> Selection {
        if let Some(rng) = self.sampler.as_deref_mut() {
            let i = rng.pick(entries);
            return Selection { kept: vec![(entries[i].0, 1.0)], dropped: 0.0 };
        }
        let eps = self.cfg.prune_epsilon;
        if eps > 0.0 {
            if mass < eps {
                return Selection { kept: Vec::new(), dropped: entries.iter().map(|e| e.1).sum() };
            }
            let (kept, dropped) = prune_entries(entries, eps / mass);
            return Selection { kept, dropped };
        }
        Selection { kept: entries.to_vec(), dropped: 0.0 }
    }

    fn peval(&mut self, t: TermId, mass: f64) -> Result<Partial, EvalError> {
        let node = self.store.term(t);
        if let Term::Lam(_) = node {
            return Ok(Partial::point(t));
        }
        if self.exhausted {
            return Ok(Partial::lost());
        }
        if let Some(hit) = self.lookup(t) {
            return Ok(hit);
        }
        let out = match node {
            Term::Var(_) => return Err(EvalError::FreeVariable(self.store.rendered(t).to_string())),
            Term::Lam(_) => unreachable!(),
            Term::App(f, a) => {
                let fv = self.peval(f, mass)?;
                self.apply_values(fv, a, mass)?
            }
            Term::Dist(entries) => {
                let sel = self.select(&entries, mass);
                let mut acc = Partial { entries: Vec::new(), unknown: sel.dropped };
                for (e, p) in sel.kept {
                    let r = self.peval(e, mass * p)?;
                    acc.absorb(r, p);
                }
                acc
            }
        };
        self.remember(t, &out);
        Ok(out)
    }

    /// Apply an evaluated operator to `a`, splitting over the operator's
    /// outcomes with gamma-left when there is more than one.
    fn apply_values(&mut self, fv: Partial, a: TermId, mass: f64) -> Result<Partial, EvalError> {
        let mut acc = Partial { entries: Vec::new(), unknown: fv.unknown };
        if self.exhausted {
            acc.unknown += fv.entries.iter().map(|e| e.1).sum::<f64>();
            return Ok(acc);
        }
        if fv.entries.is_empty() {
            return Ok(acc);
        }
        let sel = if fv.entries.len() > 1 {
            self.select(&fv.entries, mass)
        } else {
            Selection { kept: fv.entries, dropped: 0.0 }
        };
        acc.unknown += sel.dropped;
        if sel.kept.len() > 1 {
            if !self.charge()? {
                acc.unknown += sel.kept.iter().map(|e| e.1).sum::<f64>();
                return Ok(acc);
            }
            if self.trace.is_some() {
                let store = self.store;
                let norm = normalized(&sel.kept);
                let before = || store.app(store.dist(&norm).expect("normalized"), a);
                let after = || {
                    let apps: Vec<_> = norm.iter().map(|&(f, p)| (store.app(f, a), p)).collect();
                    store.dist(&apps).expect("normalized")
                };
                self.record(RedexKind::GammaL, before, after);
            }
        }
        for (f, w) in sel.kept {
            let r = self.apply_lam(f, a, mass * w)?;
            acc.absorb(r, w);
        }
        Ok(acc)
    }

    fn apply_lam(&mut self, f: TermId, a: TermId, mass: f64) -> Result<Partial, EvalError> {
        let Term::Lam(body) = self.store.term(f) else {
            return Err(EvalError::NotAFunction(self.store.rendered(f).to_string()));
        };
        if self.exhausted {
            return Ok(Partial::lost());
        }
        let key = match self.cache {
            Some(_) => {
                let key = self.store.app(f, a);
                if let Some(hit) = self.lookup(key) {
                    return Ok(hit);
                }
                Some(key)
            }
            None => None,
        };
        let operand = self.store.term(a);
        let out = match operand {
            Term::Var(_) => return Err(EvalError::FreeVariable(self.store.rendered(a).to_string())),
            Term::Lam(_) => self.beta(f, a, mass)?,
            _ if self.cfg.improper_beta => self.beta(f, a, mass)?,
            _ if self.cfg.laziness == Laziness::Lazy && self.lazy_ok(body, a) => self.beta(f, a, mass)?,
            Term::App(..) => {
                // Eager: evaluate the operand, then apply to each outcome.
                let av = self.peval(a, mass)?;
                self.spread_operand(f, av, mass)?
            }
            Term::Dist(entries) => {
                let spread = Partial { entries: entries.to_vec(), unknown: 0.0 };
                self.spread_operand(f, spread, mass)?
            }
        };
        if let Some(key) = key {
            self.remember(key, &out);
        }
        Ok(out)
    }

    fn lazy_ok(&mut self, body: TermId, a: TermId) -> bool {
        if self.store.is_distribution_free(a) {
            return true;
        }
        let store = self.store;
        *self.single_use.entry(body).or_insert_with(|| occurrences(store, body, 1).single_use())
    }

    fn beta(&mut self, f: TermId, a: TermId, mass: f64) -> Result<Partial, EvalError> {
        if !self.charge()? {
            return Ok(Partial::lost());
        }
        let reduced = substitute(self.store, f, a)?;
        let store = self.store;
        self.record(RedexKind::Beta, || store.app(f, a), || reduced);
        self.peval(reduced, mass)
    }

    /// Gamma-right: apply `f` to each operand outcome separately.
    fn spread_operand(&mut self, f: TermId, operands: Partial, mass: f64) -> Result<Partial, EvalError> {
        let mut acc = Partial { entries: Vec::new(), unknown: operands.unknown };
        if self.exhausted {
            acc.unknown += operands.entries.iter().map(|e| e.1).sum::<f64>();
            return Ok(acc);
        }
        if operands.entries.is_empty() {
            return Ok(acc);
        }
        let sel = if operands.entries.len() > 1 {
            self.select(&operands.entries, mass)
        } else {
            Selection { kept: operands.entries, dropped: 0.0 }
        };
        acc.unknown += sel.dropped;
        if sel.kept.len() > 1 {
            if !self.charge()? {
                acc.unknown += sel.kept.iter().map(|e| e.1).sum::<f64>();
                return Ok(acc);
            }
            if self.trace.is_some() {
                let store = self.store;
                let norm = normalized(&sel.kept);
                let before = || store.app(f, store.dist(&norm).expect("normalized"));
                let after = || {
                    let apps: Vec<_> = norm.iter().map(|&(e, p)| (store.app(f, e), p)).collect();
                    store.dist(&apps).expect("normalized")
                };
                self.record(RedexKind::GammaR, before, after);
            }
        }
        for (e, w) in sel.kept {
            let r = self.apply_lam(f, e, mass * w)?;
            acc.absorb(r, w);
        }
        Ok(acc)
    }
}

fn normalized(entries: &[(TermId, f64)]) -> Vec<(TermId, f64)> {
    let total: f64 = entries.iter().map(|e| e.1).sum();
    entries.iter().map(|&(t, p)| (t, p / total)).collect()
}
