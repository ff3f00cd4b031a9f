//! Approximate inference: low-probability pruning, improper beta and
//! Monte-Carlo sampling. Fuel-bounded evaluation lives in [`crate::eval`].

use std::collections::HashMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::Distribution;
use crate::eval::{self, EvalConfig, EvalError, EvalResult};
use crate::term::{TermId, TermStore};

/// Drop entries with probability below `epsilon` and renormalize the rest.
/// Returns the survivors and the mass removed. If every entry falls below
/// the threshold the single largest one is kept.
pub fn prune(d: &Distribution, epsilon: f64) -> (Distribution, f64) {
    let (kept, dropped) = prune_entries(d.entries(), epsilon);
    let total: f64 = kept.iter().map(|e| e.1).sum();
    let kept = kept.into_iter().map(|(t, p)| (t, p / total)).collect();
    (Distribution::from_raw(kept), dropped)
}

/// Pruning without renormalization: survivors keep their weights.
pub(crate) fn prune_entries(entries: &[(TermId, f64)], threshold: f64) -> (Vec<(TermId, f64)>, f64) {
    let mut kept: Vec<(TermId, f64)> = entries.iter().copied().filter(|e| e.1 >= threshold).collect();
    if kept.is_empty() && !entries.is_empty() {
        // First of the largest, in entry order.
        let best = entries.iter().copied().reduce(|best, e| if e.1 > best.1 { e } else { best }).expect("non-empty");
        kept.push(best);
    }
    let kept_mass: f64 = kept.iter().map(|e| e.1).sum();
    let total: f64 = entries.iter().map(|e| e.1).sum();
    (kept, (total - kept_mass).max(0.0))
}

/// Evaluation that drops branches whose absolute probability falls below
/// `cfg.prune_epsilon` whenever a distribution is split. Dropped mass is
/// reported as unknown. With epsilon 0 this is exact evaluation.
pub fn eval_pruned(store: &TermStore, t: TermId, cfg: &EvalConfig) -> Result<EvalResult, EvalError> {
    eval::peval(store, t, cfg)
}

/// Evaluation that substitutes arguments even when that duplicates a
/// distribution, treating the copies as independent.
pub fn eval_improper(store: &TermStore, t: TermId, cfg: &EvalConfig) -> Result<EvalResult, EvalError> {
    let cfg = EvalConfig { improper_beta: true, ..cfg.clone() };
    eval::peval(store, t, &cfg)
}

/// Random stream used for sampling.
///
/// Sample `i` of a run seeded with `seed` uses ChaCha8 seeded via
/// `seed_from_u64(seed)` on stream `i`. Each draw takes the next `u64`,
/// keeps its top 53 bits and scales by 2^-53 to get `u` in [0, 1); the chosen
/// entry is the first whose cumulative weight exceeds `u` times the total,
/// with entries in canonical order.
#[derive(Clone, Debug)]
pub struct SampleRng {
    rng: ChaCha8Rng,
}

impl SampleRng {
    pub fn new(seed: u64, stream: u64) -> SampleRng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SampleRng { rng }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub(crate) fn pick(&mut self, entries: &[(TermId, f64)]) -> usize {
        let total: f64 = entries.iter().map(|e| e.1).sum();
        let u = self.uniform() * total;
        let mut acc = 0.0;
        for (i, e) in entries.iter().enumerate() {
            acc += e.1;
            if u < acc {
                return i;
            }
        }
        entries.len() - 1
    }
}

/// Draw one outcome: evaluation proceeds as usual but every distribution
/// that would be split is replaced by one entry drawn from it.
pub fn mc_sample_one(store: &TermStore, t: TermId, cfg: &EvalConfig, rng: &mut SampleRng) -> Result<TermId, EvalError> {
    let cfg = EvalConfig { strict_fuel: true, prune_epsilon: 0.0, cache: false, trace: false, ..cfg.clone() };
    let r = eval::run(store, t, &cfg, None, Some(rng))?;
    match r.outcome.entries() {
        [(term, _)] => Ok(*term),
        _ => unreachable!("a sampled evaluation yields exactly one outcome"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleStats {
    pub samples: u64,
    pub seed: u64,
    /// Empirical frequencies; every weight is a multiple of 1/samples.
    pub estimate: Distribution,
    pub l1_to_exact: Option<f64>,
}

impl SampleStats {
    pub fn compare_to(&mut self, exact: &Distribution) {
        self.l1_to_exact = Some(self.estimate.l1_distance(exact));
    }
}

/// Aggregate `n` samples. Sample `i` uses `SampleRng::new(seed, i)`, so the
/// result does not depend on how samples are scheduled across threads.
pub fn mc_estimate(
    store: &TermStore,
    t: TermId,
    n: u64,
    seed: u64,
    cfg: &EvalConfig,
) -> Result<SampleStats, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidConfig("sample count must be positive".into()));
    }
    let draws: Vec<Result<TermId, EvalError>> =
        (0..n).into_par_iter().map(|i| mc_sample_one(store, t, cfg, &mut SampleRng::new(seed, i))).collect();
    let mut counts: HashMap<TermId, u64> = HashMap::new();
    for d in draws {
        *counts.entry(d?).or_default() += 1;
    }
    let estimate = Distribution::from_weighted(store, counts.into_iter().map(|(t, c)| (t, c as f64 / n as f64)));
    Ok(SampleStats { samples: n, seed, estimate, l1_to_exact: None })
}
