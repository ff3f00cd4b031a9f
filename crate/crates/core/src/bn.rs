//! Boolean Bayesian networks compiled to stochastic lambda terms.
//!
//! Each node becomes a function of its parents that selects, by applying the
//! parent booleans, the two-point distribution of the matching CPT row. A
//! query term passes parent values to children in topological order. A node
//! used by more than one consumer is bound once with an abstraction so all
//! uses see the same sample; nodes used once are inlined.
//!
//! Evidence is handled with a three-way result: the query term yields the
//! query value when every evidence literal holds and the distinguished term
//! `N = (lam (lam (lam 1)))` otherwise. Dropping `N` and renormalizing gives
//! the conditional distribution.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::Distribution;
use crate::eval::{self, EvalCache, EvalConfig, EvalError, EvalResult};
use crate::term::{TermError, TermId, TermStore};

/// Largest network the enumeration oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnError {
    #[error("network document is not valid JSON: {0}")]
    Json(String),
    #[error("duplicate node name '{0}'")]
    DuplicateName(String),
    #[error("node '{node}' names parent '{parent}', which is not defined before it")]
    UnknownParent { node: String, parent: String },
    #[error("cycle through node '{0}'")]
    CycleDetected(String),
    #[error("bad CPT for node '{node}': {reason}")]
    BadCptShape { node: String, reason: String },
    #[error("bad probability {value} in CPT row '{row}' of node '{node}'")]
    BadProbability { node: String, row: String, value: f64 },
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("no query node given")]
    MissingQuery,
    #[error("network has {0} nodes; enumeration is limited to {BRUTE_FORCE_LIMIT}")]
    TooLarge(usize),
    #[error("evidence has probability zero")]
    AllMassConditioned,
    #[error("evaluation produced a term other than T, F or N: {0}")]
    UnexpectedOutcome(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDef {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    /// Parent assignment such as `"TF"` (first parent first) to P(node = T).
    pub cpt: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct QuerySpec {
    pub query: String,
    #[serde(default)]
    pub evidence: BTreeMap<String, bool>,
}

impl QuerySpec {
    pub fn marginal(query: impl Into<String>) -> QuerySpec {
        QuerySpec { query: query.into(), evidence: BTreeMap::new() }
    }

    pub fn given(mut self, node: impl Into<String>, value: bool) -> QuerySpec {
        self.evidence.insert(node.into(), value);
        self
    }
}

/// A validated network: names unique, parents listed before children,
/// acyclic, CPTs complete.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    nodes: Vec<NodeDef>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    /// P(node = T) indexed by parent bits, first parent most significant,
    /// T = 1.
    tables: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    nodes: Vec<NodeDef>,
    #[serde(default)]
    query: Option<String>,
    #[serde(default)]
    evidence: BTreeMap<String, bool>,
}

/// A network document with its optional default query.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkDocument {
    pub network: Network,
    pub query: Option<String>,
    pub evidence: BTreeMap<String, bool>,
}

impl NetworkDocument {
    /// The document's query with `query`/`evidence` overrides applied.
    pub fn query_spec(&self, query: Option<&str>, evidence: &BTreeMap<String, bool>) -> Result<QuerySpec, BnError> {
        let query = query.map(str::to_string).or_else(|| self.query.clone()).ok_or(BnError::MissingQuery)?;
        let mut merged = self.evidence.clone();
        merged.extend(evidence.iter().map(|(k, v)| (k.clone(), *v)));
        let spec = QuerySpec { query, evidence: merged };
        self.network.check_spec(&spec)?;
        Ok(spec)
    }
}

pub fn parse_document(text: &str) -> Result<NetworkDocument, BnError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| BnError::Json(e.to_string()))?;
    let network = Network::new(doc.nodes)?;
    if let Some(q) = &doc.query {
        network.node_index(q)?;
    }
    for name in doc.evidence.keys() {
        network.node_index(name)?;
    }
    Ok(NetworkDocument { network, query: doc.query, evidence: doc.evidence })
}

pub fn parse_network(text: &str) -> Result<Network, BnError> {
    Ok(parse_document(text)?.network)
}

impl Network {
    pub fn new(nodes: Vec<NodeDef>) -> Result<Network, BnError> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(BnError::DuplicateName(n.name.clone()));
            }
        }
        for n in &nodes {
            let mut seen = HashSet::new();
            for p in &n.parents {
                if !index.contains_key(p) {
                    return Err(BnError::UnknownParent { node: n.name.clone(), parent: p.clone() });
                }
                if !seen.insert(p) {
                    return Err(BnError::DuplicateName(format!("{p} (as parent of {})", n.name)));
                }
            }
        }
        if let Some(name) = find_cycle(&nodes, &index) {
            return Err(BnError::CycleDetected(name));
        }
        let mut parents = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            let ps: Vec<usize> = n.parents.iter().map(|p| index[p]).collect();
            if let Some(&late) = ps.iter().find(|&&p| p > i) {
                return Err(BnError::UnknownParent { node: n.name.clone(), parent: nodes[late].name.clone() });
            }
            parents.push(ps);
        }
        let tables = nodes.iter().map(cpt_table).collect::<Result<Vec<_>, _>>()?;
        Ok(Network { nodes, index, parents, tables })
    }

    pub fn nodes(&self) -> &[NodeDef] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, name: &str) -> Result<usize, BnError> {
        self.index.get(name).copied().ok_or_else(|| BnError::UnknownNode(name.to_string()))
    }

    pub fn check_spec(&self, spec: &QuerySpec) -> Result<(), BnError> {
        self.node_index(&spec.query)?;
        for name in spec.evidence.keys() {
            self.node_index(name)?;
        }
        Ok(())
    }
}

fn find_cycle(nodes: &[NodeDef], index: &HashMap<String, usize>) -> Option<String> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(i: usize, nodes: &[NodeDef], index: &HashMap<String, usize>, state: &mut [u8]) -> Option<usize> {
        match state[i] {
            1 => return Some(i),
            2 => return None,
            _ => {}
        }
        state[i] = 1;
        for p in &nodes[i].parents {
            if let Some(c) = visit(index[p], nodes, index, state) {
                return Some(c);
            }
        }
        state[i] = 2;
        None
    }
    let mut state = vec![0u8; nodes.len()];
    (0..nodes.len()).find_map(|i| visit(i, nodes, index, &mut state)).map(|i| nodes[i].name.clone())
}

fn cpt_table(node: &NodeDef) -> Result<Vec<f64>, BnError> {
    let k = node.parents.len();
    if k > 24 {
        return Err(BnError::BadCptShape { node: node.name.clone(), reason: format!("{k} parents is too many") });
    }
    let rows = 1usize << k;
    if node.cpt.len() != rows {
        return Err(BnError::BadCptShape {
            node: node.name.clone(),
            reason: format!("expected {rows} rows, found {}", node.cpt.len()),
        });
    }
    let mut table = vec![f64::NAN; rows];
    for (key, &p) in &node.cpt {
        if key.len() != k || !key.bytes().all(|b| b == b'T' || b == b'F') {
            return Err(BnError::BadCptShape {
                node: node.name.clone(),
                reason: format!("row key '{key}' is not {k} letters over T/F"),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(BnError::BadProbability { node: node.name.clone(), row: key.clone(), value: p });
        }
        table[row_index(key)] = p;
    }
    Ok(table)
}

fn row_index(key: &str) -> usize {
    key.bytes().fold(0, |acc, b| (acc << 1) | usize::from(b == b'T'))
}

/// `(lam (lam (lam 1)))`, the result when evidence fails.
pub fn conditioned_away(store: &TermStore) -> TermId {
    let one = store.var(1).expect("index 1");
    store.lam(store.lam(store.lam(one)))
}

fn leaf(store: &TermStore, p: f64) -> Result<TermId, TermError> {
    store.coin(p)
}

/// A node as a function of its parents, first parent bound outermost.
pub fn compile_node(store: &TermStore, node: &NodeDef) -> Result<TermId, BnError> {
    let table = cpt_table(node)?;
    let k = node.parents.len() as u32;
    let mut body = select(store, &table, k, 0, 0)?;
    for _ in 0..k {
        body = store.lam(body);
    }
    Ok(body)
}

// Selection tree over parents `depth..k`, given the bits fixed so far.
fn select(store: &TermStore, table: &[f64], k: u32, depth: u32, row: usize) -> Result<TermId, TermError> {
    if depth == k {
        return leaf(store, table[row]);
    }
    let on_true = select(store, table, k, depth + 1, (row << 1) | 1)?;
    let on_false = select(store, table, k, depth + 1, row << 1)?;
    if on_true == on_false {
        return Ok(on_true);
    }
    let parent = store.var(i64::from(k - depth))?;
    if on_true == store.church_true() && on_false == store.church_false() {
        return Ok(parent);
    }
    Ok(store.apps(parent, &[on_true, on_false]))
}

/// Build the query term for `spec`.
pub fn compile_query(store: &TermStore, net: &Network, spec: &QuerySpec) -> Result<TermId, BnError> {
    net.check_spec(spec)?;
    let query = net.node_index(&spec.query)?;
    let mut evidence: Vec<(usize, bool)> =
        spec.evidence.iter().map(|(name, &v)| Ok((net.node_index(name)?, v))).collect::<Result<_, BnError>>()?;
    evidence.sort();

    // Only ancestors of the query and evidence matter.
    let mut relevant = vec![false; net.len()];
    let mut stack: Vec<usize> = std::iter::once(query).chain(evidence.iter().map(|e| e.0)).collect();
    while let Some(v) = stack.pop() {
        if !relevant[v] {
            relevant[v] = true;
            stack.extend(net.parents[v].iter().copied());
        }
    }
    let mut uses = vec![0u32; net.len()];
    for v in (0..net.len()).filter(|&v| relevant[v]) {
        for &p in &net.parents[v] {
            uses[p] += 1;
        }
    }
    uses[query] += 1;
    for &(e, _) in &evidence {
        uses[e] += 1;
    }

    let node_terms = net
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| if relevant[i] { compile_node(store, n).map(Some) } else { Ok(None) })
        .collect::<Result<Vec<_>, _>>()?;

    // Binding position (1-based) of every shared node, in topological order.
    let mut position = vec![0u32; net.len()];
    let mut bound = Vec::new();
    for v in 0..net.len() {
        if relevant[v] && uses[v] >= 2 {
            bound.push(v);
            position[v] = bound.len() as u32;
        }
    }

    let builder = QueryBuilder { store, net, node_terms: &node_terms, position: &position };
    let depth = bound.len() as u32;
    let value = builder.refer(query, depth)?;
    let mut term = if evidence.is_empty() {
        value
    } else {
        let t = store.church_true();
        let f = store.church_false();
        let mut literals = Vec::new();
        for &(e, holds) in &evidence {
            let v = builder.refer(e, depth)?;
            literals.push(if holds { v } else { store.apps(v, &[f, t]) });
        }
        let last = literals.pop().expect("evidence is non-empty");
        let cond = literals.into_iter().rev().fold(last, |rest, lit| store.apps(lit, &[rest, f]));
        store.apps(cond, &[value, conditioned_away(store)])
    };
    for (j, &v) in bound.iter().enumerate().rev() {
        let defn = builder.define(v, j as u32)?;
        term = store.app(store.lam(term), defn);
    }
    Ok(term)
}

struct QueryBuilder<'a> {
    store: &'a TermStore,
    net: &'a Network,
    node_terms: &'a [Option<TermId>],
    position: &'a [u32],
}

impl QueryBuilder<'_> {
    /// Reference to node `v` from under `depth` binders.
    fn refer(&self, v: usize, depth: u32) -> Result<TermId, BnError> {
        match self.position[v] {
            0 => self.define(v, depth),
            pos => Ok(self.store.var(i64::from(depth - pos + 1))?),
        }
    }

    /// The node function applied to references to its parents.
    fn define(&self, v: usize, depth: u32) -> Result<TermId, BnError> {
        let f = self.node_terms[v].expect("relevant node is compiled");
        let args = self.net.parents[v].iter().map(|&p| self.refer(p, depth)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.store.apps(f, &args))
    }
}

/// Drop the conditioned-away outcome and renormalize over T and F.
pub fn marginalize_n(store: &TermStore, result: &Distribution) -> Result<Distribution, BnError> {
    let t = store.church_true();
    let f = store.church_false();
    let n = conditioned_away(store);
    if let Some(other) = result.support().find(|&x| x != t && x != f && x != n) {
        return Err(BnError::UnexpectedOutcome(store.rendered(other).to_string()));
    }
    let kept = result.prob(t) + result.prob(f);
    if kept <= 1e-12 {
        return Err(BnError::AllMassConditioned);
    }
    Ok(Distribution::from_weighted(store, [(t, result.prob(t) / kept), (f, result.prob(f) / kept)]))
}

/// P(query = T | evidence) by enumerating every joint assignment.
pub fn brute_force_probability(net: &Network, spec: &QuerySpec) -> Result<f64, BnError> {
    net.check_spec(spec)?;
    let n = net.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(BnError::TooLarge(n));
    }
    let query = net.node_index(&spec.query)?;
    let evidence: Vec<(usize, bool)> =
        spec.evidence.iter().map(|(name, &v)| Ok((net.node_index(name)?, v))).collect::<Result<_, BnError>>()?;
    let (mut on_true, mut total) = (0.0f64, 0.0f64);
    for bits in 0u32..(1u32 << n) {
        let value = |i: usize| bits >> i & 1 == 1;
        if evidence.iter().any(|&(e, v)| value(e) != v) {
            continue;
        }
        let mut weight = 1.0;
        for i in 0..n {
            let row = net.parents[i].iter().fold(0usize, |acc, &p| (acc << 1) | usize::from(value(p)));
            let p = net.tables[i][row];
            weight *= if value(i) { p } else { 1.0 - p };
            if weight == 0.0 {
                break;
            }
        }
        total += weight;
        if value(query) {
            on_true += weight;
        }
    }
    if total <= 0.0 {
        return Err(BnError::AllMassConditioned);
    }
    Ok(on_true / total)
}

/// The enumeration oracle as a distribution over T and F.
pub fn brute_force_query(store: &TermStore, net: &Network, spec: &QuerySpec) -> Result<Distribution, BnError> {
    let p = brute_force_probability(net, spec)?;
    Ok(Distribution::from_weighted(store, [(store.church_true(), p), (store.church_false(), 1.0 - p)]))
}

/// Compile, evaluate and condition a query.
pub fn infer_query(
    store: &TermStore,
    net: &Network,
    spec: &QuerySpec,
    cfg: &EvalConfig,
    cache: Option<&EvalCache>,
) -> Result<(Distribution, EvalResult), BnError> {
    let term = compile_query(store, net, spec)?;
    let result = match cache {
        Some(cache) => eval::eval_cached(store, term, cfg, cache)?,
        None => eval::peval(store, term, cfg)?,
    };
    let marginal = marginalize_n(store, &result.outcome)?;
    Ok((marginal, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, print};

    pub(crate) const SPRINKLER: &str = r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":0.5}},{"name":"B","parents":["A"],"cpt":{"T":1.0,"F":0.2}},{"name":"C","parents":["A","B"],"cpt":{"TT":1.0,"TF":1.0,"FT":1.0,"FF":0.0}}]}"#;

    const T: &str = "(lam (lam 2))";
    const F: &str = "(lam (lam 1))";

    fn node(name: &str, parents: &[&str], rows: &[(&str, f64)]) -> NodeDef {
        NodeDef {
            name: name.into(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            cpt: rows.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn parses_three_node_network() {
        let net = parse_network(SPRINKLER).unwrap();
        assert_eq!(net.len(), 3);
    }

    #[test]
    fn validation_errors() {
        let late =
            r#"{"nodes":[{"name":"B","parents":["A"],"cpt":{"T":1,"F":0}},{"name":"A","parents":[],"cpt":{"":0.5}}]}"#;
        assert!(matches!(parse_network(late), Err(BnError::UnknownParent { .. })));
        let missing = r#"{"nodes":[{"name":"B","parents":["Z"],"cpt":{"T":1,"F":0}}]}"#;
        assert!(matches!(parse_network(missing), Err(BnError::UnknownParent { .. })));
        let cycle = r#"{"nodes":[{"name":"A","parents":["B"],"cpt":{"T":1,"F":0}},{"name":"B","parents":["A"],"cpt":{"T":1,"F":0}}]}"#;
        assert!(matches!(parse_network(cycle), Err(BnError::CycleDetected(_))));
        let selfloop = r#"{"nodes":[{"name":"A","parents":["A"],"cpt":{"T":1,"F":0}}]}"#;
        assert!(matches!(parse_network(selfloop), Err(BnError::CycleDetected(_))));
        let dup = r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":0.5}},{"name":"A","parents":[],"cpt":{"":0.5}}]}"#;
        assert!(matches!(parse_network(dup), Err(BnError::DuplicateName(_))));
        let shape = r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":0.5,"T":0.1}}]}"#;
        assert!(matches!(parse_network(shape), Err(BnError::BadCptShape { .. })));
        let key =
            r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":0.5}},{"name":"B","parents":["A"],"cpt":{"X":1,"F":0}}]}"#;
        assert!(matches!(parse_network(key), Err(BnError::BadCptShape { .. })));
        let prob = r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":1.5}}]}"#;
        assert!(matches!(parse_network(prob), Err(BnError::BadProbability { .. })));
        assert!(matches!(parse_network("{"), Err(BnError::Json(_))));
        let root = r#"{"nodes":[{"name":"A","parents":[],"cpt":{"":0.5}}]}"#;
        assert!(parse_network(root).is_ok());
    }

    #[test]
    fn compiles_nodes() {
        let s = TermStore::new();
        let net = parse_network(SPRINKLER).unwrap();
        let a = compile_node(&s, &net.nodes()[0]).unwrap();
        let b = compile_node(&s, &net.nodes()[1]).unwrap();
        let c = compile_node(&s, &net.nodes()[2]).unwrap();
        assert_eq!(a, parse(&s, &format!("{{{T}: 0.5, {F}: 0.5}}")).unwrap());
        assert_eq!(b, parse(&s, &format!("(lam (1 {T} {{{T}: 0.2, {F}: 0.8}}))")).unwrap());
        assert_eq!(c, parse(&s, &format!("(lam (lam (2 {T} 1)))")).unwrap());
    }

    #[test]
    fn compiles_queries() {
        let s = TermStore::new();
        let net = parse_network(SPRINKLER).unwrap();
        let a = print(&s, compile_node(&s, &net.nodes()[0]).unwrap());
        let b = print(&s, compile_node(&s, &net.nodes()[1]).unwrap());
        let c = print(&s, compile_node(&s, &net.nodes()[2]).unwrap());
        let q = compile_query(&s, &net, &QuerySpec::marginal("C")).unwrap();
        assert_eq!(q, parse(&s, &format!("((lam ({c} 1 ({b} 1))) {a})")).unwrap());
        let q = compile_query(&s, &net, &QuerySpec::marginal("A").given("C", true)).unwrap();
        let n = "(lam (lam (lam 1)))";
        assert_eq!(q, parse(&s, &format!("((lam ({c} 1 ({b} 1)) 1 {n}) {a})")).unwrap());
    }

    #[test]
    fn single_root_query_is_its_distribution() {
        let s = TermStore::new();
        let net = Network::new(vec![node("R", &[], &[("", 0.3)])]).unwrap();
        let q = compile_query(&s, &net, &QuerySpec::marginal("R")).unwrap();
        assert_eq!(q, s.coin(0.3).unwrap());
    }

    #[test]
    fn marginalize_examples() {
        let s = TermStore::new();
        let t = s.church_true();
        let f = s.church_false();
        let n = conditioned_away(&s);
        let d = Distribution::from_weighted(&s, [(t, 0.5), (f, 0.1), (n, 0.4)]);
        let m = marginalize_n(&s, &d).unwrap();
        assert!((m.prob(t) - 5.0 / 6.0).abs() < 1e-12);
        assert!((m.prob(f) - 1.0 / 6.0).abs() < 1e-12);
        let plain = Distribution::from_weighted(&s, [(t, 0.6), (f, 0.4)]);
        assert!(marginalize_n(&s, &plain).unwrap().approx_eq(&plain, 1e-15));
        assert_eq!(marginalize_n(&s, &Distribution::point(n)), Err(BnError::AllMassConditioned));
        assert!(matches!(marginalize_n(&s, &Distribution::point(s.identity())), Err(BnError::UnexpectedOutcome(_))));
    }

    #[test]
    fn brute_force_examples() {
        let s = TermStore::new();
        let net = parse_network(SPRINKLER).unwrap();
        let c = brute_force_query(&s, &net, &QuerySpec::marginal("C")).unwrap();
        assert!((c.prob(s.church_true()) - 0.6).abs() < 1e-12);
        let a = brute_force_query(&s, &net, &QuerySpec::marginal("A").given("C", true)).unwrap();
        assert!((a.prob(s.church_true()) - 0.5 / 0.6).abs() < 1e-12);
        let det = Network::new(vec![node("D", &[], &[("", 1.0)])]).unwrap();
        let d = brute_force_query(&s, &det, &QuerySpec::marginal("D")).unwrap();
        assert_eq!(d, Distribution::point(s.church_true()));
        let impossible = QuerySpec::marginal("D").given("D", false);
        assert_eq!(brute_force_query(&s, &det, &impossible), Err(BnError::AllMassConditioned));
        let big: Vec<NodeDef> = (0..21).map(|i| node(&format!("X{i}"), &[], &[("", 0.5)])).collect();
        let big = Network::new(big).unwrap();
        assert_eq!(brute_force_probability(&big, &QuerySpec::marginal("X0")), Err(BnError::TooLarge(21)));
    }

    #[test]
    fn compiled_queries_match_oracle() {
        let s = TermStore::new();
        let net = parse_network(SPRINKLER).unwrap();
        for spec in [
            QuerySpec::marginal("C"),
            QuerySpec::marginal("A").given("C", true),
            QuerySpec::marginal("B").given("C", false),
            QuerySpec::marginal("A").given("A", true),
            QuerySpec::marginal("B").given("A", false).given("C", true),
        ] {
            let (m, _) = infer_query(&s, &net, &spec, &EvalConfig::default(), None).unwrap();
            let oracle = brute_force_query(&s, &net, &spec).unwrap();
            assert!(m.max_deviation(&oracle) < 1e-9, "{spec:?}");
        }
    }

    #[test]
    fn unknown_query_nodes_are_rejected() {
        let s = TermStore::new();
        let net = parse_network(SPRINKLER).unwrap();
        assert_eq!(compile_query(&s, &net, &QuerySpec::marginal("Z")), Err(BnError::UnknownNode("Z".into())));
        assert_eq!(
            compile_query(&s, &net, &QuerySpec::marginal("A").given("Q", true)),
            Err(BnError::UnknownNode("Q".into()))
        );
    }

    #[test]
    fn document_query_overrides() {
        let text = SPRINKLER.replace("]}", r#"],"query":"A","evidence":{"C":true}}"#);
        let doc = parse_document(&text).unwrap();
        let spec = doc.query_spec(None, &BTreeMap::new()).unwrap();
        assert_eq!(spec, QuerySpec::marginal("A").given("C", true));
        let mut over = BTreeMap::new();
        over.insert("B".to_string(), false);
        let spec = doc.query_spec(Some("C"), &over).unwrap();
        assert_eq!(spec.query, "C");
        assert_eq!(spec.evidence.len(), 2);
        let bare = parse_document(SPRINKLER).unwrap();
        assert_eq!(bare.query_spec(None, &BTreeMap::new()), Err(BnError::MissingQuery));
    }
}
