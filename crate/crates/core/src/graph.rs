//! Canonical graph representation and the `(u,v)` / `(u,v,w)` edge-list text format.
//!
//! Weights are exact rationals so that shortest-path weights and matcher
//! penalties compare without tolerance. Undirected edges are stored once,
//! keyed by `(min, max)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub type NodeId = u32;
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("malformed edge token `{0}`")]
    MalformedToken(String),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0},{1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge weight must be positive, got `{0}`")]
    NonPositiveWeight(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no mapping for node {0}")]
    MissingMapping(NodeId),
    #[error("mapping is not injective: several nodes map to {0}")]
    NonInjectiveMapping(NodeId),
}

/// Strictly positive exact edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Rational);

impl Weight {
    pub const ONE: Weight = Weight(Ratio::new_raw(1, 1));

    pub fn new(value: Rational) -> Result<Self, GraphError> {
        if value.is_positive() {
            Ok(Weight(value))
        } else {
            Err(GraphError::NonPositiveWeight(format_rational(&value)))
        }
    }

    pub fn from_int(value: i64) -> Result<Self, GraphError> {
        Self::new(Rational::from_integer(value))
    }

    pub fn value(self) -> Rational {
        self.0
    }

    pub fn is_one(self) -> bool {
        self.0.is_one()
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl FromStr for Weight {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value = parse_rational(s).ok_or_else(|| GraphError::MalformedToken(s.to_string()))?;
        Weight::new(value).map_err(|_| GraphError::NonPositiveWeight(s.to_string()))
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Formats a rational as an integer, an exact terminating decimal, or `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut denom = *value.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while denom % 2 == 0 {
        denom /= 2;
        twos += 1;
    }
    while denom % 5 == 0 {
        denom /= 5;
        fives += 1;
    }
    if denom != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let digits = twos.max(fives);
    let scaled = 10i64
        .checked_pow(digits)
        .and_then(|scale| value.numer().checked_mul(scale / value.denom()));
    let Some(scaled) = scaled else {
        return format!("{}/{}", value.numer(), value.denom());
    };
    let sign = if scaled < 0 { "-" } else { "" };
    let magnitude = scaled.unsigned_abs().to_string();
    let width = digits as usize + 1;
    let padded = format!("{magnitude:0>width$}");
    let (int_part, frac_part) = padded.split_at(padded.len() - digits as usize);
    format!("{sign}{int_part}.{frac_part}")
}

/// Parses `7`, `2.5`, `-0.25` or `7/3`. Returns `None` on anything else.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((numer, denom)) = text.split_once('/') {
        let numer: i64 = numer.trim().parse().ok()?;
        let denom: i64 = denom.trim().parse().ok()?;
        if denom == 0 {
            return None;
        }
        return Some(Rational::new(numer, denom));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let scale = 10i64.checked_pow(frac_part.len() as u32)?;
        let int_value: i64 = if int_digits.is_empty() { 0 } else { int_digits.parse().ok()? };
        let frac_value: i64 = frac_part.parse().ok()?;
        let numer = int_value.checked_mul(scale)?.checked_add(frac_value)?;
        let numer = if negative { -numer } else { numer };
        return Some(Rational::new(numer, scale));
    }
    text.parse::<i64>().ok().map(Rational::from_integer)
}

/// Serde adapter that stores a [`Rational`] as its decimal / `p/q` string.
pub mod rational_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_rational(&raw).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{raw}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: Weight,
}

/// How `parse_edge_list_with` treats a repeated edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Keep the first occurrence and log a warning.
    Dedup,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    directed: bool,
    nodes: BTreeSet<NodeId>,
    edges: BTreeMap<(NodeId, NodeId), Weight>,
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, Weight>>,
}

impl Graph {
    pub fn new(directed: bool) -> Self {
        Graph {
            directed,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
            adjacency: BTreeMap::new(),
        }
    }

    pub fn with_nodes(directed: bool, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut g = Graph::new(directed);
        for n in nodes {
            g.add_node(n);
        }
        g
    }

    /// Builds a graph from `(u, v, w)` triples, rejecting duplicates.
    pub fn from_edges(
        directed: bool,
        edges: impl IntoIterator<Item = (NodeId, NodeId, i64)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph::new(directed);
        for (u, v, w) in edges {
            g.add_edge(u, v, Weight::from_int(w)?)?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, n: NodeId) {
        self.nodes.insert(n);
        self.adjacency.entry(n).or_default();
    }

    fn key(&self, u: NodeId, v: NodeId) -> (NodeId, NodeId) {
        if self.directed || u < v {
            (u, v)
        } else {
            (v, u)
        }
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, weight: Weight) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let key = self.key(u, v);
        if self.edges.contains_key(&key) {
            return Err(GraphError::DuplicateEdge(key.0, key.1));
        }
        self.add_node(u);
        self.add_node(v);
        self.edges.insert(key, weight);
        self.adjacency.entry(u).or_default().insert(v, weight);
        if !self.directed {
            self.adjacency.entry(v).or_default().insert(u, weight);
        }
        Ok(())
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    /// Edges in canonical ascending `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|(&(u, v), &weight)| Edge { u, v, weight })
    }

    /// Weight of edge `u -> v` (either orientation when undirected).
    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<Weight> {
        self.edges.get(&self.key(u, v)).copied()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.weight(u, v).is_some()
    }

    /// Out-neighbours for directed graphs, all neighbours otherwise, ascending.
    pub fn neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, Weight)> + '_ {
        self.adjacency
            .get(&u)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&v, &w)| (v, w)))
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency.get(&u).map_or(0, BTreeMap::len)
    }

    /// Smallest `n` such that every node id is below `n`.
    pub fn id_bound(&self) -> NodeId {
        self.nodes.last().map_or(0, |&m| m + 1)
    }

    /// Sum of edge weights along consecutive nodes, `None` if some step is not an edge.
    pub fn path_weight(&self, path: &[NodeId]) -> Option<Rational> {
        if path.is_empty() || !path.iter().all(|n| self.contains_node(*n)) {
            return None;
        }
        path.windows(2).try_fold(Rational::zero(), |acc, step| {
            self.weight(step[0], step[1]).map(|w| acc + w.value())
        })
    }

    /// The undirected graph over the same nodes; opposite arcs collapse to one
    /// edge carrying the smaller weight.
    pub fn undirected_skeleton(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        let mut g = Graph::with_nodes(false, self.nodes.iter().copied());
        let mut folded: BTreeMap<(NodeId, NodeId), Weight> = BTreeMap::new();
        for e in self.edges() {
            let key = (e.u.min(e.v), e.u.max(e.v));
            folded
                .entry(key)
                .and_modify(|w| *w = (*w).min(e.weight))
                .or_insert(e.weight);
        }
        for ((u, v), w) in folded {
            g.add_edge(u, v, w).expect("folded edges are unique and loop-free");
        }
        g
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    directed: bool,
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId, Weight)>,
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            directed: g.directed,
            nodes: g.nodes.iter().copied().collect(),
            edges: g.edges().map(|e| (e.u, e.v, e.weight)).collect(),
        }
    }
}

impl TryFrom<GraphRepr> for Graph {
    type Error = GraphError;

    fn try_from(repr: GraphRepr) -> Result<Self, Self::Error> {
        let mut g = Graph::with_nodes(repr.directed, repr.nodes);
        for (u, v, w) in repr.edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }
}

/// Parses whitespace-separated `(u,v)` / `(u,v,w)` tokens, rejecting duplicates.
pub fn parse_edge_list(text: &str, directed: bool, declared_n: Option<NodeId>) -> Result<Graph, GraphError> {
    parse_edge_list_with(text, directed, declared_n, DuplicatePolicy::Reject)
}

pub fn parse_edge_list_with(
    text: &str,
    directed: bool,
    declared_n: Option<NodeId>,
    duplicates: DuplicatePolicy,
) -> Result<Graph, GraphError> {
    let mut g = Graph::with_nodes(directed, 0..declared_n.unwrap_or(0));
    for token in text.split_whitespace() {
        let (u, v, w) = parse_token(token)?;
        match g.add_edge(u, v, w) {
            Err(GraphError::DuplicateEdge(a, b)) if duplicates == DuplicatePolicy::Dedup => {
                log::warn!("dropping duplicate edge ({a},{b})");
            }
            other => other?,
        }
    }
    Ok(g)
}

fn parse_token(token: &str) -> Result<(NodeId, NodeId, Weight), GraphError> {
    let malformed = || GraphError::MalformedToken(token.to_string());
    let inner = token
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(malformed)?;
    if inner.contains(['(', ')']) {
        return Err(malformed());
    }
    let fields: Vec<&str> = inner.split(',').collect();
    let node = |s: &str| s.parse::<NodeId>().map_err(|_| malformed());
    match fields.as_slice() {
        [u, v] => Ok((node(u)?, node(v)?, Weight::ONE)),
        [u, v, w] => Ok((node(u)?, node(v)?, w.parse()?)),
        _ => Err(malformed()),
    }
}

/// Emits edges in canonical order; the weight suffix appears only when it is not 1.
pub fn serialize_edge_list(g: &Graph) -> String {
    g.edges()
        .map(|e| {
            if e.weight.is_one() {
                format!("({},{})", e.u, e.v)
            } else {
                format!("({},{},{})", e.u, e.v, e.weight)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Like [`serialize_edge_list`] but always writes the weight.
pub fn serialize_weighted_edge_list(g: &Graph) -> String {
    g.edges()
        .map(|e| format!("({},{},{})", e.u, e.v, e.weight))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn induced_subgraph(g: &Graph, keep: &BTreeSet<NodeId>) -> Result<Graph, GraphError> {
    if let Some(&missing) = keep.iter().find(|n| !g.contains_node(**n)) {
        return Err(GraphError::UnknownNode(missing));
    }
    let mut sub = Graph::with_nodes(g.directed, keep.iter().copied());
    for e in g.edges().filter(|e| keep.contains(&e.u) && keep.contains(&e.v)) {
        sub.add_edge(e.u, e.v, e.weight)?;
    }
    Ok(sub)
}

pub fn relabel(g: &Graph, mapping: &BTreeMap<NodeId, NodeId>) -> Result<Graph, GraphError> {
    let mut seen = BTreeSet::new();
    for &n in g.nodes() {
        let target = *mapping.get(&n).ok_or(GraphError::MissingMapping(n))?;
        if !seen.insert(target) {
            return Err(GraphError::NonInjectiveMapping(target));
        }
    }
    let mut out = Graph::with_nodes(g.directed, seen);
    for e in g.edges() {
        out.add_edge(mapping[&e.u], mapping[&e.v], e.weight)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_graph() -> Graph {
        Graph::from_edges(
            false,
            [(0, 4, 5), (1, 4, 2), (2, 4, 3), (3, 4, 1), (2, 5, 5), (5, 6, 4), (3, 6, 4)],
        )
        .unwrap()
    }

    #[test]
    fn parses_star_query() {
        let g = parse_edge_list("(0,4) (1,4) (2,4)", false, None).unwrap();
        assert_eq!(g.nodes().iter().copied().collect::<Vec<_>>(), vec![0, 1, 2, 4]);
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().all(|e| e.weight == Weight::ONE));
    }

    #[test]
    fn parses_empty_and_weighted() {
        let g = parse_edge_list("", false, None).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));

        let g = parse_edge_list("(0,4,5) (2,4,3)", false, None).unwrap();
        assert_eq!(g.nodes().len(), 3);
        assert_eq!(g.weight(4, 0), Some(Weight::from_int(5).unwrap()));
        assert_eq!(g.weight(2, 4), Some(Weight::from_int(3).unwrap()));
    }

    #[test]
    fn declared_n_adds_isolated_nodes() {
        let g = parse_edge_list("(0,1)", false, Some(4)).unwrap();
        assert_eq!(g.node_count(), 4);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_edge_list("(0,1", false, None), Err(GraphError::MalformedToken(_))));
        assert!(matches!(parse_edge_list("(a,1)", false, None), Err(GraphError::MalformedToken(_))));
        assert!(matches!(parse_edge_list("(0,1,2,3)", false, None), Err(GraphError::MalformedToken(_))));
        assert_eq!(parse_edge_list("(2,2)", false, None), Err(GraphError::SelfLoop(2)));
        assert_eq!(
            parse_edge_list("(0,4) (4,0)", false, None),
            Err(GraphError::DuplicateEdge(0, 4))
        );
        assert!(parse_edge_list("(0,4) (4,0)", true, None).is_ok());
        assert!(matches!(
            parse_edge_list("(0,1,0)", false, None),
            Err(GraphError::NonPositiveWeight(_))
        ));
        assert!(matches!(
            parse_edge_list("(0,1,-2)", false, None),
            Err(GraphError::NonPositiveWeight(_))
        ));
    }

    #[test]
    fn lenient_mode_drops_duplicates() {
        let g = parse_edge_list_with("(0,4,2) (4,0,3)", false, None, DuplicatePolicy::Dedup).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 4), Some(Weight::from_int(2).unwrap()));
    }

    #[test]
    fn canonical_orientation() {
        let a = parse_edge_list("(4,0)", false, None).unwrap();
        let b = parse_edge_list("(0,4)", false, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize_edge_list(&a), "(0,4)");
    }

    #[test]
    fn serializes() {
        let g = parse_edge_list("(2,4) (1,4) (0,4)", false, None).unwrap();
        assert_eq!(serialize_edge_list(&g), "(0,4) (1,4) (2,4)");
        assert_eq!(serialize_edge_list(&Graph::new(false)), "");
        let g = parse_edge_list("(2,4,3) (0,4,5)", false, None).unwrap();
        assert_eq!(serialize_edge_list(&g), "(0,4,5) (2,4,3)");
    }

    #[test]
    fn rational_weights() {
        let g = parse_edge_list("(0,1,2.5) (1,2,7/3) (2,3,0.125)", false, None).unwrap();
        assert_eq!(serialize_edge_list(&g), "(0,1,2.5) (1,2,7/3) (2,3,0.125)");
        assert_eq!(g.weight(0, 1).unwrap().value(), Rational::new(5, 2));
        assert_eq!(format_rational(&Rational::new(-1, 4)), "-0.25");
        assert_eq!(parse_rational("-0.25"), Some(Rational::new(-1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1."), None);
    }

    #[test]
    fn induced_subgraph_cases() {
        let g = sample_graph();
        let keep: BTreeSet<_> = [0, 1, 2, 4].into();
        let sub = induced_subgraph(&g, &keep).unwrap();
        assert_eq!(serialize_edge_list(&sub), "(0,4,5) (1,4,2) (2,4,3)");
        assert_eq!(induced_subgraph(&g, g.nodes()).unwrap(), g);
        let single = induced_subgraph(&g, &[0].into()).unwrap();
        assert_eq!((single.node_count(), single.edge_count()), (1, 0));
        assert_eq!(induced_subgraph(&g, &[9].into()), Err(GraphError::UnknownNode(9)));
    }

    #[test]
    fn relabel_cases() {
        let g = parse_edge_list("(0,4) (1,4) (2,4)", false, None).unwrap();
        let identity: BTreeMap<_, _> = g.nodes().iter().map(|&n| (n, n)).collect();
        assert_eq!(relabel(&g, &identity).unwrap(), g);

        let shifted: BTreeMap<_, _> = [(0, 10), (1, 11), (2, 12), (4, 14)].into();
        let r = relabel(&g, &shifted).unwrap();
        assert_eq!(serialize_edge_list(&r), "(10,14) (11,14) (12,14)");

        let collapsing: BTreeMap<_, _> = [(0, 1), (1, 1), (2, 2), (4, 4)].into();
        assert_eq!(relabel(&g, &collapsing), Err(GraphError::NonInjectiveMapping(1)));
        let partial: BTreeMap<_, _> = [(0, 1)].into();
        assert_eq!(relabel(&g, &partial), Err(GraphError::MissingMapping(1)));
    }

    #[test]
    fn skeleton_folds_arcs() {
        let g = parse_edge_list("(0,1,3) (1,0,2) (1,2)", true, None).unwrap();
        let s = g.undirected_skeleton();
        assert!(!s.is_directed());
        assert_eq!(serialize_edge_list(&s), "(0,1,2) (1,2)");
    }

    #[test]
    fn serde_round_trip() {
        let g = sample_graph();
        let json = serde_json::to_string(&g).unwrap();
        let back: Graph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, BTreeMap<NodeId, NodeId>)> {
        (1u32..9, any::<bool>(), proptest::collection::vec((0u32..9, 0u32..9, 1i64..6), 0..20), any::<u64>())
            .prop_map(|(n, directed, raw, salt)| {
                let mut g = Graph::with_nodes(directed, 0..n);
                for (u, v, w) in raw {
                    let (u, v) = (u % n, v % n);
                    if u != v && !g.has_edge(u, v) {
                        g.add_edge(u, v, Weight::from_int(w).unwrap()).unwrap();
                    }
                }
                // a permutation of 0..n shifted by 100
                let mut targets: Vec<NodeId> = (0..n).collect();
                let rot = (salt % n as u64) as usize;
                targets.rotate_left(rot);
                let map = (0..n).zip(targets.into_iter().map(|t| t + 100)).collect();
                (g, map)
            })
    }

    proptest! {
        #[test]
        fn parse_serialize_round_trip((g, _) in arb_graph()) {
            let text = serialize_edge_list(&g);
            let back = parse_edge_list(&text, g.is_directed(), Some(g.node_count() as NodeId)).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn relabel_inverse_is_identity((g, map) in arb_graph()) {
            let inverse: BTreeMap<_, _> = map.iter().map(|(&k, &v)| (v, k)).collect();
            let there = relabel(&g, &map).unwrap();
            prop_assert_eq!(relabel(&there, &inverse).unwrap(), g);
        }

        #[test]
        fn induced_is_idempotent((g, _) in arb_graph(), mask in any::<u16>()) {
            let keep: BTreeSet<NodeId> = g.nodes().iter().copied().filter(|n| mask & (1 << n) != 0).collect();
            let once = induced_subgraph(&g, &keep).unwrap();
            prop_assert_eq!(induced_subgraph(&once, &keep).unwrap(), once);
        }
    }
}
