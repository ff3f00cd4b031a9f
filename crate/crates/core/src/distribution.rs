use std::collections::HashMap;

use crate::term::{Fingerprint, TermError, TermId, TermStore};

/// A canonical weighted set of terms: one entry per distinct term, entries in
/// canonical store order, weights positive.
///
/// Unlike a distribution term this may carry total weight below one, which is
/// how evaluation results report mass that was never resolved.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Distribution {
    entries: Vec<(TermId, f64)>,
}

impl Distribution {
    pub fn point(term: TermId) -> Distribution {
        Distribution { entries: vec![(term, 1.0)] }
    }

    /// Merge identical terms and sort canonically. Non-positive weights are
    /// dropped.
    pub fn from_weighted<I>(store: &TermStore, weighted: I) -> Distribution
    where
        I: IntoIterator<Item = (TermId, f64)>,
    {
        let mut slot: HashMap<TermId, usize> = HashMap::new();
        let mut entries: Vec<(TermId, f64)> = Vec::new();
        for (id, p) in weighted {
            if p.is_nan() || p <= 0.0 {
                continue;
            }
            match slot.get(&id) {
                Some(&i) => entries[i].1 += p,
                None => {
                    slot.insert(id, entries.len());
                    entries.push((id, p));
                }
            }
        }
        store.sort_canonical(&mut entries);
        Distribution { entries }
    }

    /// Entries of a term read as a distribution: a distribution node gives its
    /// entries, anything else is a point mass.
    pub fn of_term(store: &TermStore, term: TermId) -> Distribution {
        match store.term(term) {
            crate::term::Term::Dist(es) => Distribution { entries: es.to_vec() },
            _ => Distribution::point(term),
        }
    }

    pub fn entries(&self) -> &[(TermId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn prob(&self, term: TermId) -> f64 {
        self.entries.iter().find(|e| e.0 == term).map_or(0.0, |e| e.1)
    }

    pub fn support(&self) -> impl Iterator<Item = TermId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Rescale so the weights sum to one. An empty distribution stays empty.
    pub fn normalized(&self) -> Distribution {
        let total = self.total();
        if total <= 0.0 {
            return self.clone();
        }
        Distribution { entries: self.entries.iter().map(|&(t, p)| (t, p / total)).collect() }
    }

    /// The distribution as a term. Fails unless the weights sum to one.
    pub fn to_term(&self, store: &TermStore) -> Result<TermId, TermError> {
        store.dist(&self.entries)
    }

    /// Sum of absolute differences over the union of supports.
    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        self.deviations(other).sum()
    }

    /// Largest absolute difference over the union of supports.
    pub fn max_deviation(&self, other: &Distribution) -> f64 {
        self.deviations(other).fold(0.0, f64::max)
    }

    fn deviations<'a>(&'a self, other: &'a Distribution) -> impl Iterator<Item = f64> + 'a {
        let mine = self.entries.iter().map(move |&(t, p)| (p - other.prob(t)).abs());
        let theirs = other.entries.iter().filter(move |e| self.prob(e.0) == 0.0).map(|e| e.1);
        mine.chain(theirs)
    }

    /// Same support and every weight within `tol`.
    pub fn approx_eq(&self, other: &Distribution, tol: f64) -> bool {
        self.len() == other.len()
            && self.entries.iter().all(|&(t, p)| other.entries.iter().any(|&(u, q)| u == t && (p - q).abs() <= tol))
    }

    /// XOR of per-entry fingerprints, mixing each entry's term fingerprint
    /// with the bit pattern of its weight.
    pub fn fingerprint(&self, store: &TermStore) -> Fingerprint {
        self.entries.iter().fold(Fingerprint(0), |acc, &(t, p)| {
            let fp = store.fingerprint(t).0;
            acc.xor(Fingerprint(
                fp.rotate_left(29) ^ (p.to_bits() as u128).wrapping_mul(0x2545_f491_4f6c_dd1d_9e37_79b9_7f4a_7c15),
            ))
        })
    }

    pub(crate) fn from_raw(entries: Vec<(TermId, f64)>) -> Distribution {
        Distribution { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_orders() {
        let s = TermStore::new();
        let t = s.church_true();
        let f = s.church_false();
        let d = Distribution::from_weighted(&s, [(t, 0.25), (f, 0.5), (t, 0.25)]);
        assert_eq!(d.len(), 2);
        // "(lam (lam 1))" sorts before "(lam (lam 2))"
        assert_eq!(d.entries()[0].0, f);
        assert_eq!(d.prob(t), 0.5);
        assert_eq!(d.to_term(&s).unwrap(), s.coin(0.5).unwrap());
    }

    #[test]
    fn distances() {
        let s = TermStore::new();
        let t = s.church_true();
        let f = s.church_false();
        let a = Distribution::from_weighted(&s, [(t, 0.6), (f, 0.4)]);
        let b = Distribution::point(f);
        assert!((a.l1_distance(&b) - 1.2).abs() < 1e-12);
        assert!((a.max_deviation(&b) - 0.6).abs() < 1e-12);
        assert!(a.approx_eq(&a.normalized(), 1e-15));
    }
}
