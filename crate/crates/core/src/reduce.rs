//! Rewrite rules: beta, gamma-left, gamma-right and eta, plus the
//! level-guided substitution they rely on.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::term::{Term, TermError, TermId, TermStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RedexKind {
    Beta,
    GammaL,
    GammaR,
    Eta,
}

impl RedexKind {
    pub fn name(self) -> &'static str {
        match self {
            RedexKind::Beta => "beta",
            RedexKind::GammaL => "gamma_l",
            RedexKind::GammaR => "gamma_r",
            RedexKind::Eta => "eta",
        }
    }
}

impl fmt::Display for RedexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("substituted argument is not closed (level {0})")]
    NonClosedArgument(u32),
    #[error("expected an abstraction")]
    NotAnAbstraction,
    #[error("expected an application of an abstraction")]
    NotABetaRedex,
    #[error("expected an application whose operator is a distribution")]
    NotGammaLRedex,
    #[error("expected an application whose operand is a distribution")]
    NotGammaRRedex,
    #[error("expected a term of the form (lam (e 1)) with 1 not free in e")]
    NotEtaRedex,
    #[error("reduction guard violated: {0}")]
    GuardViolation(&'static str),
    #[error("shifting would drive a free variable below index 1")]
    IndexUnderflow,
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Substitute the closed `argument` for variable 1 of `abstraction`'s body.
///
/// Subterms whose level is below the index being replaced cannot mention it
/// and are returned as-is, so unchanged structure is shared with the input.
pub fn substitute(store: &TermStore, abstraction: TermId, argument: TermId) -> Result<TermId, ReduceError> {
    let Term::Lam(body) = store.term(abstraction) else {
        return Err(ReduceError::NotAnAbstraction);
    };
    let level = store.level(argument);
    if level > 0 {
        return Err(ReduceError::NonClosedArgument(level));
    }
    let mut memo = HashMap::new();
    subst_at(store, body, argument, 1, &mut memo)
}

fn subst_at(
    store: &TermStore,
    expr: TermId,
    arg: TermId,
    target: u32,
    memo: &mut HashMap<(TermId, u32), TermId>,
) -> Result<TermId, ReduceError> {
    if store.level(expr) < target {
        return Ok(expr);
    }
    if let Some(&done) = memo.get(&(expr, target)) {
        return Ok(done);
    }
    let out = match store.term(expr) {
        Term::Var(i) if i == target => arg,
        // Free beyond the removed binder.
        Term::Var(i) => store.var(i as i64 - 1)?,
        Term::Lam(b) => {
            let b = subst_at(store, b, arg, target + 1, memo)?;
            store.lam(b)
        }
        Term::App(f, a) => {
            let f = subst_at(store, f, arg, target, memo)?;
            let a = subst_at(store, a, arg, target, memo)?;
            store.app(f, a)
        }
        Term::Dist(entries) => {
            let mut out = Vec::with_capacity(entries.len());
            for &(e, p) in entries.iter() {
                out.push((subst_at(store, e, arg, target, memo)?, p));
            }
            store.dist(&out)?
        }
    };
    memo.insert((expr, target), out);
    Ok(out)
}

/// Add `delta` to every free variable whose index is at least `cutoff`.
pub fn shift(store: &TermStore, t: TermId, delta: i64, cutoff: u32) -> Result<TermId, ReduceError> {
    let mut memo = HashMap::new();
    shift_at(store, t, delta, cutoff.max(1), &mut memo)
}

fn shift_at(
    store: &TermStore,
    t: TermId,
    delta: i64,
    cutoff: u32,
    memo: &mut HashMap<(TermId, u32), TermId>,
) -> Result<TermId, ReduceError> {
    if delta == 0 || store.level(t) < cutoff {
        return Ok(t);
    }
    if let Some(&done) = memo.get(&(t, cutoff)) {
        return Ok(done);
    }
    let out = match store.term(t) {
        Term::Var(i) if i >= cutoff => {
            let shifted = i as i64 + delta;
            if shifted < 1 {
                return Err(ReduceError::IndexUnderflow);
            }
            store.var(shifted)?
        }
        Term::Var(_) => t,
        Term::Lam(b) => {
            let b = shift_at(store, b, delta, cutoff + 1, memo)?;
            store.lam(b)
        }
        Term::App(f, a) => {
            let f = shift_at(store, f, delta, cutoff, memo)?;
            let a = shift_at(store, a, delta, cutoff, memo)?;
            store.app(f, a)
        }
        Term::Dist(entries) => {
            let mut out = Vec::with_capacity(entries.len());
            for &(e, p) in entries.iter() {
                out.push((shift_at(store, e, delta, cutoff, memo)?, p));
            }
            store.dist(&out)?
        }
    };
    memo.insert((t, cutoff), out);
    Ok(out)
}

/// True when no distribution node occurs anywhere in `t`.
pub fn distribution_free(store: &TermStore, t: TermId) -> bool {
    store.is_distribution_free(t)
}

/// Where and how often a variable occurs in a body.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Occurrences {
    pub count: u64,
    /// Some occurrence sits below a binder inside the body, so it is
    /// re-evaluated each time that inner abstraction is applied.
    pub under_lambda: bool,
}

impl Occurrences {
    /// Substituting a possibly-random argument here cannot duplicate it.
    pub fn single_use(self) -> bool {
        self.count == 0 || (self.count == 1 && !self.under_lambda)
    }
}

/// Number of free occurrences of `index` in `body`.
pub fn count_occurrences(store: &TermStore, body: TermId, index: u32) -> u64 {
    occurrences(store, body, index).count
}

pub fn occurrences(store: &TermStore, body: TermId, index: u32) -> Occurrences {
    let mut memo = HashMap::new();
    occ_at(store, body, index, 0, &mut memo)
}

fn occ_at(
    store: &TermStore,
    t: TermId,
    index: u32,
    depth: u32,
    memo: &mut HashMap<(TermId, u32), Occurrences>,
) -> Occurrences {
    let target = index + depth;
    if store.level(t) < target {
        return Occurrences::default();
    }
    if let Some(&o) = memo.get(&(t, depth)) {
        return o;
    }
    let o = match store.term(t) {
        Term::Var(i) if i == target => Occurrences { count: 1, under_lambda: depth > 0 },
        Term::Var(_) => Occurrences::default(),
        Term::Lam(b) => occ_at(store, b, index, depth + 1, memo),
        Term::App(f, a) => {
            let x = occ_at(store, f, index, depth, memo);
            let y = occ_at(store, a, index, depth, memo);
            Occurrences { count: x.count.saturating_add(y.count), under_lambda: x.under_lambda || y.under_lambda }
        }
        Term::Dist(entries) => entries.iter().fold(Occurrences::default(), |acc, &(e, _)| {
            let o = occ_at(store, e, index, depth, memo);
            Occurrences { count: acc.count.saturating_add(o.count), under_lambda: acc.under_lambda || o.under_lambda }
        }),
    };
    memo.insert((t, depth), o);
    o
}

/// Whether beta may substitute `argument` into the body of `abstraction`
/// without changing the meaning of the term.
pub fn beta_guard(store: &TermStore, abstraction: TermId, argument: TermId) -> Result<bool, ReduceError> {
    let Term::Lam(body) = store.term(abstraction) else {
        return Err(ReduceError::NotAnAbstraction);
    };
    Ok(store.is_lam(argument) || store.is_distribution_free(argument) || occurrences(store, body, 1).single_use())
}

/// `((lam e1) e2) -> e1[e2]`, refusing arguments that might evaluate to a
/// distribution and would be duplicated, unless `improper` is set.
pub fn beta(store: &TermStore, app: TermId, improper: bool) -> Result<TermId, ReduceError> {
    let Term::App(f, a) = store.term(app) else {
        return Err(ReduceError::NotABetaRedex);
    };
    if !store.is_lam(f) {
        return Err(ReduceError::NotABetaRedex);
    }
    if !improper && !beta_guard(store, f, a)? {
        return Err(ReduceError::GuardViolation("argument may reduce to a distribution and is used more than once"));
    }
    substitute(store, f, a)
}

/// `({f_i: p_i} e) -> {(f_i e): p_i}`
pub fn gamma_l(store: &TermStore, app: TermId) -> Result<TermId, ReduceError> {
    let Term::App(f, a) = store.term(app) else {
        return Err(ReduceError::NotGammaLRedex);
    };
    let Term::Dist(entries) = store.term(f) else {
        return Err(ReduceError::NotGammaLRedex);
    };
    let out: Vec<_> = entries.iter().map(|&(fi, p)| (store.app(fi, a), p)).collect();
    Ok(store.dist(&out)?)
}

/// `(f {e_i: p_i}) -> {(f e_i): p_i}`
pub fn gamma_r(store: &TermStore, app: TermId) -> Result<TermId, ReduceError> {
    let Term::App(f, a) = store.term(app) else {
        return Err(ReduceError::NotGammaRRedex);
    };
    let Term::Dist(entries) = store.term(a) else {
        return Err(ReduceError::NotGammaRRedex);
    };
    let out: Vec<_> = entries.iter().map(|&(ei, p)| (store.app(f, ei), p)).collect();
    Ok(store.dist(&out)?)
}

/// `(lam (e 1)) -> e` when 1 is not free in `e` and `e` contains no
/// distribution.
pub fn eta(store: &TermStore, lam: TermId) -> Result<TermId, ReduceError> {
    let Term::Lam(body) = store.term(lam) else {
        return Err(ReduceError::NotEtaRedex);
    };
    let Term::App(e, last) = store.term(body) else {
        return Err(ReduceError::NotEtaRedex);
    };
    if store.term(last) != Term::Var(1) || count_occurrences(store, e, 1) > 0 {
        return Err(ReduceError::NotEtaRedex);
    }
    if !store.is_distribution_free(e) {
        return Err(ReduceError::GuardViolation("eta operand may reduce to a distribution"));
    }
    shift(store, e, -1, 1)
}

/// Apply eta everywhere it is allowed until no eta redex remains.
pub fn normalize_eta(store: &TermStore, t: TermId) -> TermId {
    let mut memo = HashMap::new();
    eta_pass(store, t, &mut memo)
}

fn eta_pass(store: &TermStore, t: TermId, memo: &mut HashMap<TermId, TermId>) -> TermId {
    if let Some(&done) = memo.get(&t) {
        return done;
    }
    let rebuilt = match store.term(t) {
        Term::Var(_) => t,
        Term::Lam(b) => {
            let b = eta_pass(store, b, memo);
            store.lam(b)
        }
        Term::App(f, a) => {
            let f = eta_pass(store, f, memo);
            let a = eta_pass(store, a, memo);
            store.app(f, a)
        }
        Term::Dist(entries) => {
            let out: Vec<_> = entries.iter().map(|&(e, p)| (eta_pass(store, e, memo), p)).collect();
            store.dist(&out).expect("eta preserves distribution weights")
        }
    };
    // Contracting can expose a new redex at this position, e.g. (lam ((lam (e 1)) 1)).
    let mut out = rebuilt;
    while let Ok(next) = eta(store, out) {
        out = next;
    }
    memo.insert(t, out);
    out
}
