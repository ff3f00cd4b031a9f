//! Term and network generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slc_core::{Distribution, EvalConfig, Network, NodeDef, QuerySpec, TermId, TermStore};

pub const T: &str = "(lam (lam 2))";
pub const F: &str = "(lam (lam 1))";

pub const SPRINKLER: &str = r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":0.5}},{"name":"B","parents":["A"],"cpt":{"T":1.0,"F":0.2}},{"name":"C","parents":["A","B"],"cpt":{"TT":1.0,"TF":1.0,"FT":1.0,"FF":0.0}}]}"#;

pub fn coin(p: f64) -> String {
    format!("{{{T}: {p}, {F}: {}}}", 1.0 - p)
}

/// Y combinator applied to `(lam {T: 0.5, 1: 0.5})`: returns T after a
/// geometric number of unfoldings.
pub fn geometric(store: &TermStore) -> TermId {
    let y = "(lam ((lam (2 (1 1))) (lam (2 (1 1)))))";
    let g = format!("(lam {{{T}: 0.5, 1: 0.5}})");
    slc_core::parse(store, &format!("({y} {g})")).unwrap()
}

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.next_u64() % n
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// A probability strictly inside (0, 1) with a short decimal form.
    pub fn prob(&mut self) -> f64 {
        (1 + self.below(19)) as f64 / 20.0
    }

    /// A closed boolean program: constants, coins, connectives, lets,
    /// shared and unshared function calls. `vars` boolean variables are in
    /// scope.
    pub fn boolean(&mut self, vars: u32, size: u32) -> String {
        if size == 0 {
            return match self.below(if vars > 0 { 4 } else { 3 }) {
                0 => T.to_string(),
                1 => F.to_string(),
                2 => coin(self.prob()),
                _ => format!("{}", 1 + self.below(u64::from(vars))),
            };
        }
        let s = size - 1;
        match self.below(9) {
            0 => {
                let e = self.boolean(vars, s);
                format!("({e} {F} {T})")
            }
            1 => {
                let (a, b) = (self.boolean(vars, s / 2), self.boolean(vars, s / 2));
                format!("({a} {b} {F})")
            }
            2 => {
                let (a, b) = (self.boolean(vars, s / 2), self.boolean(vars, s / 2));
                format!("({a} {T} {b})")
            }
            3 => {
                let c = self.boolean(vars, s / 3);
                let a = self.boolean(vars, s / 3);
                let b = self.boolean(vars, s / 3);
                format!("({c} {a} {b})")
            }
            4 | 5 => {
                // let x = e1 in e2
                let bound = self.boolean(vars, s / 2);
                let body = self.boolean(vars + 1, s / 2);
                format!("((lam {body}) {bound})")
            }
            6 => {
                // a one-argument function called twice
                let body = self.boolean(vars + 1, s / 3);
                let a = self.boolean(vars, s / 3);
                format!("((lam (lam ((2 1) (2 {T}) {F}))) (lam {body}) {a})")
            }
            7 => {
                // a distribution-valued function: each call draws afresh
                let p = self.prob();
                let x = self.boolean(vars, s);
                format!("((lam (lam ((2 1) {F} (2 {T})))) (lam {{{T}: {p}, {F}: {}}}) {x})", 1.0 - p)
            }
            _ => coin(self.prob()),
        }
    }

    pub fn network(&mut self, min: usize, max: usize) -> Network {
        let n = min + self.below((max - min + 1) as u64) as usize;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let mut parents = Vec::new();
            for j in 0..i {
                if parents.len() < 3 && self.chance(0.4) {
                    parents.push(format!("X{j}"));
                }
            }
            let mut cpt = BTreeMap::new();
            for row in 0..(1usize << parents.len()) {
                let key: String = (0..parents.len()).rev().map(|b| if row >> b & 1 == 1 { 'T' } else { 'F' }).collect();
                let p = match self.below(6) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => self.unit(),
                };
                cpt.insert(key, p);
            }
            nodes.push(NodeDef { name: format!("X{i}"), parents, cpt });
        }
        Network::new(nodes).unwrap()
    }

    pub fn query(&mut self, net: &Network) -> QuerySpec {
        let n = net.len() as u64;
        let mut spec = QuerySpec::marginal(format!("X{}", self.below(n)));
        for _ in 0..self.below(3) {
            let v = self.chance(0.5);
            spec = spec.given(format!("X{}", self.below(n)), v);
        }
        spec
    }
}

/// X0 -> X1 -> ... with query on the last node.
pub fn chain(len: usize) -> Network {
    let mut nodes =
        vec![NodeDef { name: "X0".into(), parents: vec![], cpt: [(String::new(), 0.3)].into_iter().collect() }];
    for i in 1..len {
        nodes.push(NodeDef {
            name: format!("X{i}"),
            parents: vec![format!("X{}", i - 1)],
            cpt: [("T".to_string(), 0.9), ("F".to_string(), 0.2)].into_iter().collect(),
        });
    }
    Network::new(nodes).unwrap()
}

/// Hand-written programs with boolean results.
pub fn hand_written() -> Vec<String> {
    let c6 = coin(0.6);
    let g = format!("(lam {c6})");
    let not = format!("(lam (1 {F} {T}))");
    let and = format!("(lam (lam (2 1 {F})))");
    let or = format!("(lam (lam (2 {T} 1)))");
    let xor = format!("(lam (lam (2 (1 {F} {T}) 1)))");
    vec![
        T.to_string(),
        F.to_string(),
        c6.clone(),
        format!("((lam (1 {F} 1)) {c6})"),
        format!("(({g} {T}) {F} ({g} {T}))"),
        format!("((lam ((1 {T}) {F} (1 {T}))) {g})"),
        format!("({not} {c6})"),
        format!("({not} ({not} {c6}))"),
        format!("({and} {c6} {c6})"),
        format!("((lam ({and} 1 1)) {c6})"),
        format!("((lam ({xor} 1 1)) {c6})"),
        format!("({xor} {c6} {})", coin(0.3)),
        format!("({or} {} {})", coin(0.1), coin(0.2)),
        format!("((lam ((lam (1 2 {F})) ({not} 1))) {c6})"),
        format!("({{{T}: 0.5, {c6}: 0.5}} {T} {F})"),
        format!("({{{not}: 0.25, (lam 1): 0.75}} {})", coin(0.4)),
        format!("((lam (lam 1)) {c6} {T})"),
        format!("((lam (lam 2)) {c6} {})", coin(0.9)),
        format!("((lam (1 1 {F})) {c6})"),
        format!("((lam ((lam (1 2 1)) {})) {c6})", coin(0.7)),
        format!("((lam (1 (1 {T} {F}) {F})) ({not} {c6}))"),
        format!("(((lam (lam (2 1 2))) {c6}) {})", coin(0.35)),
        format!("((lam ((1 {c6}) {F} (1 {T}))) (lam (1 {F} {T})))"),
        format!("((lam ((lam ((lam (1 2 3)) {})) {})) {c6})", coin(0.2), coin(0.8)),
    ]
}

/// The test corpus: hand-written programs, generated programs and
/// compiled network queries.
pub fn corpus(store: &TermStore) -> Vec<TermId> {
    let mut terms: Vec<TermId> = hand_written().iter().map(|s| slc_core::parse(store, s).unwrap()).collect();
    let mut g = Gen::new(0x5eed);
    for i in 0..90 {
        let src = g.boolean(0, 2 + (i % 10));
        terms.push(slc_core::parse(store, &src).unwrap());
    }
    let net = slc_core::bn::parse_network(SPRINKLER).unwrap();
    for spec in [
        QuerySpec::marginal("C"),
        QuerySpec::marginal("A").given("C", true),
        QuerySpec::marginal("B").given("C", false),
    ] {
        terms.push(slc_core::bn::compile_query(store, &net, &spec).unwrap());
    }
    for _ in 0..10 {
        let net = g.network(3, 6);
        let spec = g.query(&net);
        terms.push(slc_core::bn::compile_query(store, &net, &spec).unwrap());
    }
    terms
}

/// Same support and probabilities within `tol`.
pub fn same_outcome(a: &Distribution, b: &Distribution, tol: f64) -> bool {
    a.len() == b.len() && a.support().zip(b.support()).all(|(x, y)| x == y) && a.approx_eq(b, tol)
}

pub fn exact(laziness: slc_core::Laziness) -> EvalConfig {
    EvalConfig { laziness, ..EvalConfig::default() }
}
