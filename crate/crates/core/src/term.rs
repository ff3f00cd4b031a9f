//! Hash-consed stochastic lambda terms.
//!
//! Every term lives in a [`TermStore`] and is addressed by a [`TermId`].
//! Construction goes through the smart constructors (`var`, `lam`, `app`,
//! `dist`), which keep terms in canonical form: distributions are flattened,
//! duplicate entries merged, entries sorted by their printed form and
//! one-point distributions collapsed to the term itself. Because of that,
//! two terms are structurally equal exactly when their ids are equal.
//!
//! Each node caches its level (the number of enclosing binders needed to
//! close it), whether it contains a distribution anywhere below it, and a
//! 128-bit fingerprint.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use thiserror::Error;

use crate::syntax;

/// Tolerance used when deciding whether a weight sums to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Seed for the fingerprint assignment when none is given.
pub const DEFAULT_FINGERPRINT_SEED: u64 = 0x5eed_1a3b_dac0_ffee;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A 128-bit pseudo-random identifier. Distribution fingerprints are the XOR
/// of their entry fingerprints, so they do not depend on entry order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub u128);

impl Fingerprint {
    pub fn xor(self, other: Fingerprint) -> Fingerprint {
        Fingerprint(self.0 ^ other.0)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// Shape of an interned node.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    /// De Bruijn index, always >= 1.
    Var(u32),
    Lam(TermId),
    App(TermId, TermId),
    /// Canonical entries: flattened, merged, sorted, probabilities in (0, 1].
    Dist(Arc<[(TermId, f64)]>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TermError {
    #[error("variable index must be at least 1, got {0}")]
    InvalidIndex(i64),
    #[error("probability must be in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("distribution has no entries")]
    EmptyDistribution,
    #[error("distribution weights sum to {0}, expected 1")]
    NotNormalized(f64),
}

#[derive(Clone, Debug)]
struct Node {
    term: Term,
    level: u32,
    distribution_free: bool,
    fingerprint: Fingerprint,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Var(u32),
    Lam(TermId),
    App(TermId, TermId),
    Dist(Box<[(TermId, u64)]>),
}

#[derive(Default)]
struct Table {
    nodes: Vec<Node>,
    index: HashMap<Key, TermId>,
}

/// Seeded random strings for the structural tags and variable indices.
#[derive(Clone, Copy, Debug)]
struct Tags {
    var: u128,
    lam: u128,
    app: u128,
    entry: u128,
}

impl Tags {
    fn new(seed: u64) -> Tags {
        let base = mix(((seed as u128) << 64) | 0x51ed_270b_2734_3b5d);
        Tags { var: mix(base ^ 1), lam: mix(base ^ 2), app: mix(base ^ 3), entry: mix(base ^ 4) }
    }
}

// 128-bit finalizer in the style of splitmix/murmur.
fn mix(mut z: u128) -> u128 {
    const K1: u128 = 0x9e37_79b9_7f4a_7c15_f39c_c060_5ced_c835;
    const K2: u128 = 0xbf58_476d_1ce4_e5b9_94d0_49bb_1331_11eb;
    z ^= z >> 67;
    z = z.wrapping_mul(K1);
    z ^= z >> 59;
    z = z.wrapping_mul(K2);
    z ^= z >> 64;
    z
}

fn combine(tag: u128, a: u128, b: u128) -> u128 {
    mix(mix(tag ^ a).wrapping_add(b.rotate_left(41)) ^ tag.rotate_left(17))
}

/// The intern table. Safe to share between threads; construction and lookup
/// are atomic with respect to each other, so interning stays a function of
/// structure regardless of interleaving.
pub struct TermStore {
    table: RwLock<Table>,
    rendered: RwLock<HashMap<TermId, Arc<str>>>,
    tags: Tags,
    seed: u64,
}

impl Default for TermStore {
    fn default() -> Self {
        TermStore::new()
    }
}

impl fmt::Debug for TermStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TermStore").field("terms", &self.len()).field("seed", &self.seed).finish()
    }
}

impl TermStore {
    pub fn new() -> TermStore {
        TermStore::with_seed(DEFAULT_FINGERPRINT_SEED)
    }

    /// A store whose fingerprint assignment is drawn from `seed`.
    pub fn with_seed(seed: u64) -> TermStore {
        TermStore {
            table: RwLock::new(Table::default()),
            rendered: RwLock::new(HashMap::new()),
            tags: Tags::new(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of distinct terms interned so far.
    pub fn len(&self) -> usize {
        self.table.read().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn term(&self, id: TermId) -> Term {
        self.table.read().nodes[id.index()].term.clone()
    }

    pub fn level(&self, id: TermId) -> u32 {
        self.table.read().nodes[id.index()].level
    }

    pub fn fingerprint(&self, id: TermId) -> Fingerprint {
        self.table.read().nodes[id.index()].fingerprint
    }

    /// True when no distribution node occurs anywhere inside the term.
    pub fn is_distribution_free(&self, id: TermId) -> bool {
        self.table.read().nodes[id.index()].distribution_free
    }

    pub fn is_lam(&self, id: TermId) -> bool {
        matches!(self.table.read().nodes[id.index()].term, Term::Lam(_))
    }

    pub fn is_dist(&self, id: TermId) -> bool {
        matches!(self.table.read().nodes[id.index()].term, Term::Dist(_))
    }

    pub fn var(&self, index: i64) -> Result<TermId, TermError> {
        if index < 1 || index > u32::MAX as i64 {
            return Err(TermError::InvalidIndex(index));
        }
        let index = index as u32;
        let fp = combine(self.tags.var, index as u128, 0);
        Ok(self.intern(Key::Var(index), || Node {
            term: Term::Var(index),
            level: index,
            distribution_free: true,
            fingerprint: Fingerprint(fp),
        }))
    }

    pub fn lam(&self, body: TermId) -> TermId {
        let (level, free, fp) = {
            let table = self.table.read();
            let b = &table.nodes[body.index()];
            (b.level.saturating_sub(1), b.distribution_free, b.fingerprint)
        };
        self.intern(Key::Lam(body), || Node {
            term: Term::Lam(body),
            level,
            distribution_free: free,
            fingerprint: Fingerprint(combine(self.tags.lam, fp.0, 0)),
        })
    }

    pub fn app(&self, operator: TermId, operand: TermId) -> TermId {
        let (level, free, fp) = {
            let table = self.table.read();
            let f = &table.nodes[operator.index()];
            let a = &table.nodes[operand.index()];
            (
                f.level.max(a.level),
                f.distribution_free && a.distribution_free,
                combine(self.tags.app, f.fingerprint.0, a.fingerprint.0),
            )
        };
        self.intern(Key::App(operator, operand), || Node {
            term: Term::App(operator, operand),
            level,
            distribution_free: free,
            fingerprint: Fingerprint(fp),
        })
    }

    /// Apply `operator` to each argument in turn, left associated.
    pub fn apps(&self, operator: TermId, operands: &[TermId]) -> TermId {
        operands.iter().fold(operator, |acc, &arg| self.app(acc, arg))
    }

    /// Build a distribution from raw weighted entries.
    ///
    /// Nested distributions are flattened, identical entries merged and the
    /// result sorted canonically. A single entry of weight one collapses to
    /// the entry itself. The weights must sum to one.
    pub fn dist(&self, raw: &[(TermId, f64)]) -> Result<TermId, TermError> {
        if raw.is_empty() {
            return Err(TermError::EmptyDistribution);
        }
        for &(_, p) in raw {
            if !p.is_finite() || p <= 0.0 {
                return Err(TermError::InvalidProbability(p));
            }
        }
        let mut merged = self.flatten(raw);
        let total: f64 = merged.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(TermError::NotNormalized(total));
        }
        for entry in merged.iter_mut() {
            if entry.1 > 1.0 {
                entry.1 = 1.0;
            }
        }
        if merged.len() == 1 {
            return Ok(merged[0].0);
        }
        self.sort_canonical(&mut merged);
        Ok(self.intern_dist(merged))
    }

    /// Flatten and merge without the normalization requirement. Entries keep
    /// first-occurrence order; each merged weight sums its parts in sorted
    /// order so the result does not depend on input order.
    pub(crate) fn flatten(&self, raw: &[(TermId, f64)]) -> Vec<(TermId, f64)> {
        let mut parts: Vec<(TermId, Vec<f64>)> = Vec::with_capacity(raw.len());
        let mut slot: HashMap<TermId, usize> = HashMap::new();
        let mut push = |id: TermId, p: f64| match slot.get(&id) {
            Some(&i) => parts[i].1.push(p),
            None => {
                slot.insert(id, parts.len());
                parts.push((id, vec![p]));
            }
        };
        for &(id, p) in raw {
            match self.term(id) {
                // Children are canonical, so one level of flattening suffices.
                Term::Dist(inner) => {
                    for &(child, q) in inner.iter() {
                        push(child, p * q);
                    }
                }
                _ => push(id, p),
            }
        }
        parts
            .into_iter()
            .map(|(id, mut ps)| {
                ps.sort_by(f64::total_cmp);
                (id, ps.into_iter().sum())
            })
            .collect()
    }

    fn intern_dist(&self, entries: Vec<(TermId, f64)>) -> TermId {
        let (level, fp) = {
            let table = self.table.read();
            let mut level = 0;
            let mut fp = 0u128;
            for &(id, p) in &entries {
                let n = &table.nodes[id.index()];
                level = level.max(n.level);
                fp ^= combine(self.tags.entry, n.fingerprint.0, p.to_bits() as u128);
            }
            (level, fp)
        };
        let key = Key::Dist(entries.iter().map(|&(id, p)| (id, p.to_bits())).collect());
        self.intern(key, || Node {
            term: Term::Dist(entries.into()),
            level,
            distribution_free: false,
            fingerprint: Fingerprint(fp),
        })
    }

    /// Sort entries by the printed form of their terms.
    pub fn sort_canonical(&self, entries: &mut [(TermId, f64)]) {
        if entries.len() < 2 {
            return;
        }
        let mut keyed: Vec<(Arc<str>, (TermId, f64))> = entries.iter().map(|&e| (self.rendered(e.0), e)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        for (slot, (_, e)) in entries.iter_mut().zip(keyed) {
            *slot = e;
        }
    }

    /// Canonical printed form, cached per term.
    pub fn rendered(&self, id: TermId) -> Arc<str> {
        if let Some(s) = self.rendered.read().get(&id) {
            return s.clone();
        }
        let text: Arc<str> = syntax::print(self, id).into();
        self.rendered.write().entry(id).or_insert(text).clone()
    }

    fn intern(&self, key: Key, build: impl FnOnce() -> Node) -> TermId {
        if let Some(&id) = self.table.read().index.get(&key) {
            return id;
        }
        let mut table = self.table.write();
        if let Some(&id) = table.index.get(&key) {
            return id;
        }
        let id = TermId(u32::try_from(table.nodes.len()).expect("term store overflow"));
        table.nodes.push(build());
        table.index.insert(key, id);
        id
    }

    /// `(lam (lam 2))`
    pub fn church_true(&self) -> TermId {
        let two = self.var(2).unwrap();
        let inner = self.lam(two);
        self.lam(inner)
    }

    /// `(lam (lam 1))`
    pub fn church_false(&self) -> TermId {
        let one = self.var(1).unwrap();
        let inner = self.lam(one);
        self.lam(inner)
    }

    /// `(lam 1)`
    pub fn identity(&self) -> TermId {
        let one = self.var(1).unwrap();
        self.lam(one)
    }

    /// The two-point distribution `{T: p, F: 1 - p}`, or the bare boolean
    /// when `p` is 0 or 1.
    pub fn coin(&self, p: f64) -> Result<TermId, TermError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(TermError::InvalidProbability(p));
        }
        if p == 1.0 {
            return Ok(self.church_true());
        }
        if p == 0.0 {
            return Ok(self.church_false());
        }
        self.dist(&[(self.church_true(), p), (self.church_false(), 1.0 - p)])
    }

    /// Number of nodes in the tree unfolding of `id`.
    pub fn tree_size(&self, id: TermId) -> u64 {
        let mut memo = HashMap::new();
        self.tree_size_memo(id, &mut memo)
    }

    fn tree_size_memo(&self, id: TermId, memo: &mut HashMap<TermId, u64>) -> u64 {
        if let Some(&n) = memo.get(&id) {
            return n;
        }
        let n = match self.term(id) {
            Term::Var(_) => 1,
            Term::Lam(b) => 1 + self.tree_size_memo(b, memo),
            Term::App(f, a) => 1 + self.tree_size_memo(f, memo) + self.tree_size_memo(a, memo),
            Term::Dist(es) => es.iter().fold(1u64, |acc, &(e, _)| acc.saturating_add(self.tree_size_memo(e, memo))),
        };
        memo.insert(id, n);
        n
    }
}
