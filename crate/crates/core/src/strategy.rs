//! Named inference strategies.
//!
//! Each way of answering "what does this term evaluate to" sits behind
//! [`InferenceStrategy`] and is looked up by name in a [`StrategyRegistry`],
//! so front ends can pick one from configuration.

use std::collections::BTreeMap;
use std::fmt;

use crate::approx::{self, SampleStats};
use crate::distribution::Distribution;
use crate::eval::{self, EvalCache, EvalConfig, EvalError, EvalResult, Laziness};
use crate::term::{TermId, TermStore};

/// Pruning threshold used by the `pruned` strategy when none is configured.
pub const DEFAULT_PRUNE_EPSILON: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug)]
pub struct InferOptions {
    pub config: EvalConfig,
    pub samples: u64,
    pub seed: u64,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions { config: EvalConfig::default(), samples: 10_000, seed: 0 }
    }
}

/// What a strategy produced. Sampling strategies also report their
/// statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub result: EvalResult,
    pub sampling: Option<SampleStats>,
}

pub trait InferenceStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    fn infer(
        &self,
        store: &TermStore,
        term: TermId,
        opts: &InferOptions,
        cache: Option<&EvalCache>,
    ) -> Result<Inference, EvalError>;
}

fn exact(store: &TermStore, term: TermId, cfg: &EvalConfig, cache: Option<&EvalCache>) -> Result<Inference, EvalError> {
    let result = match cache {
        Some(cache) => eval::eval_cached(store, term, cfg, cache)?,
        None => eval::peval(store, term, cfg)?,
    };
    Ok(Inference { result, sampling: None })
}

/// Evaluation order exactly as published: only abstraction operands are
/// substituted without evaluating them first.
pub struct Eager;

impl InferenceStrategy for Eager {
    fn name(&self) -> &'static str {
        "eager"
    }

    fn summary(&self) -> &'static str {
        "exact; operands evaluated eagerly unless they are abstractions"
    }

    fn infer(
        &self,
        store: &TermStore,
        term: TermId,
        opts: &InferOptions,
        cache: Option<&EvalCache>,
    ) -> Result<Inference, EvalError> {
        let cfg = EvalConfig { laziness: Laziness::Eager, ..opts.config.clone() };
        exact(store, term, &cfg, cache)
    }
}

/// Exact evaluation that skips evaluating operands that are unused, used
/// once or distribution-free.
pub struct Lazy;

impl InferenceStrategy for Lazy {
    fn name(&self) -> &'static str {
        "lazy"
    }

    fn summary(&self) -> &'static str {
        "exact; lazy whenever substitution cannot duplicate a distribution"
    }

    fn infer(
        &self,
        store: &TermStore,
        term: TermId,
        opts: &InferOptions,
        cache: Option<&EvalCache>,
    ) -> Result<Inference, EvalError> {
        let cfg = EvalConfig { laziness: Laziness::Lazy, ..opts.config.clone() };
        exact(store, term, &cfg, cache)
    }
}

pub struct Pruned;

impl InferenceStrategy for Pruned {
    fn name(&self) -> &'static str {
        "pruned"
    }

    fn summary(&self) -> &'static str {
        "drops branches below the prune epsilon; dropped mass reported as unknown"
    }

    fn infer(
        &self,
        store: &TermStore,
        term: TermId,
        opts: &InferOptions,
        _cache: Option<&EvalCache>,
    ) -> Result<Inference, EvalError> {
        let mut cfg = opts.config.clone();
        if cfg.prune_epsilon == 0.0 {
            cfg.prune_epsilon = DEFAULT_PRUNE_EPSILON;
        }
        let result = approx::eval_pruned(store, term, &cfg)?;
        Ok(Inference { result, sampling: None })
    }
}

pub struct Improper;

impl InferenceStrategy for Improper {
    fn name(&self) -> &'static str {
        "improper"
    }

    fn summary(&self) -> &'static str {
        "substitutes every argument, treating duplicated copies as independent"
    }

    fn infer(
        &self,
        store: &TermStore,
        term: TermId,
        opts: &InferOptions,
        _cache: Option<&EvalCache>,
    ) -> Result<Inference, EvalError> {
        let result = approx::eval_improper(store, term, &opts.config)?;
        Ok(Inference { result, sampling: None })
    }
}

pub struct MonteCarlo;

impl InferenceStrategy for MonteCarlo {
    fn name(&self) -> &'static str {
        "monte-carlo"
    }

    fn summary(&self) -> &'static str {
        "estimates the outcome distribution from independent samples"
    }

    fn infer(
        &self,
        store: &TermStore,
        term: TermId,
        opts: &InferOptions,
        _cache: Option<&EvalCache>,
    ) -> Result<Inference, EvalError> {
        let stats = approx::mc_estimate(store, term, opts.samples, opts.seed, &opts.config)?;
        let result = EvalResult {
            outcome: stats.estimate.clone(),
            unknown_mass: 0.0,
            steps_used: 0,
            cache_hits: 0,
            trace: None,
        };
        Ok(Inference { result, sampling: Some(stats) })
    }
}

pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn InferenceStrategy>>,
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.strategies.keys()).finish()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        StrategyRegistry::with_builtin()
    }
}

impl StrategyRegistry {
    pub fn empty() -> StrategyRegistry {
        StrategyRegistry { strategies: BTreeMap::new() }
    }

    pub fn with_builtin() -> StrategyRegistry {
        let mut r = StrategyRegistry::empty();
        r.register(Box::new(Eager));
        r.register(Box::new(Lazy));
        r.register(Box::new(Pruned));
        r.register(Box::new(Improper));
        r.register(Box::new(MonteCarlo));
        r
    }

    /// Add a strategy, replacing any existing one with the same name.
    pub fn register(&mut self, strategy: Box<dyn InferenceStrategy>) -> Option<Box<dyn InferenceStrategy>> {
        self.strategies.insert(strategy.name(), strategy)
    }

    pub fn get(&self, name: &str) -> Option<&dyn InferenceStrategy> {
        self.strategies.get(name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn InferenceStrategy> + '_ {
        self.strategies.values().map(|s| s.as_ref())
    }
}

/// Outcome as a normalized distribution, ignoring unknown mass.
pub fn conditional_outcome(result: &EvalResult) -> Distribution {
    result.outcome.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    const T: &str = "(lam (lam 2))";
    const F: &str = "(lam (lam 1))";

    #[test]
    fn builtin_names() {
        let r = StrategyRegistry::with_builtin();
        let names: Vec<_> = r.names().collect();
        assert_eq!(names, ["eager", "improper", "lazy", "monte-carlo", "pruned"]);
        assert!(r.get("nope").is_none());
    }

    #[test]
    fn strategies_agree_where_they_should() {
        let s = TermStore::new();
        let t = parse(&s, &format!("((lam 1 {F} 1) {{{T}: 0.6, {F}: 0.4}})")).unwrap();
        let r = StrategyRegistry::with_builtin();
        let opts = InferOptions { samples: 200, seed: 3, ..InferOptions::default() };
        for name in ["eager", "lazy", "pruned", "monte-carlo"] {
            let out = r.get(name).unwrap().infer(&s, t, &opts, None).unwrap();
            assert_eq!(out.result.outcome, Distribution::point(s.church_false()), "{name}");
        }
        let improper = r.get("improper").unwrap().infer(&s, t, &opts, None).unwrap();
        assert!((improper.result.outcome.prob(s.church_true()) - 0.24).abs() < 1e-12);
    }

    struct Constant;

    impl InferenceStrategy for Constant {
        fn name(&self) -> &'static str {
            "constant"
        }
        fn summary(&self) -> &'static str {
            "always the identity"
        }
        fn infer(
            &self,
            store: &TermStore,
            _: TermId,
            _: &InferOptions,
            _: Option<&EvalCache>,
        ) -> Result<Inference, EvalError> {
            Ok(Inference {
                result: EvalResult {
                    outcome: Distribution::point(store.identity()),
                    unknown_mass: 0.0,
                    steps_used: 0,
                    cache_hits: 0,
                    trace: None,
                },
                sampling: None,
            })
        }
    }

    #[test]
    fn custom_strategies_register_by_name() {
        let s = TermStore::new();
        let mut r = StrategyRegistry::with_builtin();
        assert!(r.register(Box::new(Constant)).is_none());
        let out = r.get("constant").unwrap().infer(&s, s.church_true(), &InferOptions::default(), None).unwrap();
        assert_eq!(out.result.outcome, Distribution::point(s.identity()));
    }
}
