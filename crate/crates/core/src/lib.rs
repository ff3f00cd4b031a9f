//! Exact and approximate inference for a stochastic lambda calculus.
//!
//! Terms use de Bruijn indices and live in a hash-consed [`TermStore`].
//! A distribution `{e1: p1, ..., en: pn}` is itself a term; evaluating a
//! closed term yields a [`Distribution`] over closed values.
//!
//! ```
//! use slc_core::{parse, peval, EvalConfig, TermStore};
//!
//! let store = TermStore::new();
//! let t = parse(&store, "((lam (1 1)) {(lam 1): 0.5, (lam (lam 1)): 0.5})").unwrap();
//! let r = peval(&store, t, &EvalConfig::default()).unwrap();
//! assert_eq!(r.unknown_mass, 0.0);
//! ```

pub mod approx;
pub mod bn;
pub mod distribution;
pub mod eval;
pub mod reduce;
pub mod strategy;
pub mod syntax;
pub mod term;

pub use approx::{mc_estimate, mc_sample_one, prune, SampleRng, SampleStats};
pub use bn::{BnError, Network, NodeDef, QuerySpec};
pub use distribution::Distribution;
pub use eval::{eval_cached, papply, peval, EvalCache, EvalConfig, EvalError, EvalResult, Laziness, TraceStep};
pub use reduce::{RedexKind, ReduceError};
pub use strategy::{InferOptions, Inference, InferenceStrategy, StrategyRegistry};
pub use syntax::{parse, print, ParseError, ParseErrorKind};
pub use term::{Fingerprint, Term, TermError, TermId, TermStore};
