//! Approximate subgraph matching of a numeric query graph onto the reference
//! character graph.
//!
//! Each candidate is a connected induced subgraph of the reference skeleton
//! with as many nodes as the query. A candidate is scored by its edge-mismatch
//! edit distance under the best bijection, plus the edge-weight penalty of
//! that bijection. The lowest combined score wins, first strict improvement in
//! enumeration order.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_traits::{Signed, Zero};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{induced_subgraph, rational_str, Graph, NodeId, Rational};
use crate::reference::ReferenceGraph;

/// Largest candidate size solved by exhaustive bijection search.
pub const EXACT_SEARCH_LIMIT: usize = 8;

/// Default number of candidate subgraphs scored per query.
pub const DEFAULT_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("subgraph size {k} exceeds the {available} nodes available")]
    KTooLarge { k: usize, available: usize },
    #[error("subgraph size must be at least 1")]
    EmptyQuery,
    #[error("candidate cap must be at least 1")]
    InvalidCap,
    #[error("no connected induced subgraph with {0} nodes exists")]
    NoConnectedSubgraph(usize),
    #[error("graphs differ in size ({0} vs {1} nodes)")]
    SizeMismatch(usize, usize),
    #[error("query node {0} has no mapping")]
    UnmappedNode(NodeId),
    #[error("query has {query} nodes but the reference graph only {reference}")]
    QueryTooLarge { query: usize, reference: usize },
    #[error("mapping is not injective: several nodes map to {0}")]
    NonInjective(NodeId),
}

/// Injective map from query node ids to reference node ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<NodeId, NodeId>", into = "BTreeMap<NodeId, NodeId>")]
pub struct NodeMapping(BTreeMap<NodeId, NodeId>);

impl NodeMapping {
    pub fn new(map: BTreeMap<NodeId, NodeId>) -> Result<Self, MatchError> {
        let mut seen = BTreeSet::new();
        for &target in map.values() {
            if !seen.insert(target) {
                return Err(MatchError::NonInjective(target));
            }
        }
        Ok(NodeMapping(map))
    }

    pub fn identity(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        NodeMapping(nodes.into_iter().map(|n| (n, n)).collect())
    }

    pub fn get(&self, node: NodeId) -> Option<NodeId> {
        self.0.get(&node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.0
    }

    pub fn covers(&self, g: &Graph) -> bool {
        g.nodes().iter().all(|n| self.0.contains_key(n))
    }
}

impl TryFrom<BTreeMap<NodeId, NodeId>> for NodeMapping {
    type Error = MatchError;

    fn try_from(map: BTreeMap<NodeId, NodeId>) -> Result<Self, Self::Error> {
        NodeMapping::new(map)
    }
}

impl From<NodeMapping> for BTreeMap<NodeId, NodeId> {
    fn from(m: NodeMapping) -> Self {
        m.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub best_subgraph: Graph,
    pub mapping: NodeMapping,
    pub ged_score: u32,
    #[serde(with = "rational_str")]
    pub weight_penalty: Rational,
    #[serde(with = "rational_str")]
    pub combined_score: Rational,
    pub candidates_examined: usize,
    /// False when the candidate size exceeded [`EXACT_SEARCH_LIMIT`] and the
    /// bijection came from the greedy-plus-swaps heuristic.
    pub exact: bool,
}

/// Score of one candidate subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateScore {
    pub nodes: BTreeSet<NodeId>,
    pub mapping: NodeMapping,
    pub ged: u32,
    pub penalty: Rational,
    pub exact: bool,
}

impl CandidateScore {
    pub fn combined(&self) -> Rational {
        Rational::from_integer(self.ged as i64) + self.penalty
    }
}

/// Up to `cap` distinct connected induced `k`-node subgraphs of `skeleton`.
pub fn generate_subgraphs(skeleton: &Graph, k: usize, cap: usize, seed: u64) -> Result<Vec<Graph>, MatchError> {
    candidate_node_sets(skeleton, k, cap, seed)?
        .iter()
        .map(|set| Ok(induced_subgraph(skeleton, set).expect("candidate nodes come from the skeleton")))
        .collect()
}

/// Node sets behind [`generate_subgraphs`], in enumeration order.
///
/// When at most `cap` connected sets exist, all of them are returned in a
/// seeded shuffle. Otherwise sets are grown from random start nodes by random
/// frontier expansion, deduplicated, until `cap` are found.
pub fn candidate_node_sets(
    skeleton: &Graph,
    k: usize,
    cap: usize,
    seed: u64,
) -> Result<Vec<BTreeSet<NodeId>>, MatchError> {
    if k == 0 {
        return Err(MatchError::EmptyQuery);
    }
    if cap == 0 {
        return Err(MatchError::InvalidCap);
    }
    if k > skeleton.node_count() {
        return Err(MatchError::KTooLarge { k, available: skeleton.node_count() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut listed = enumerate_connected_sets(skeleton, k, cap.saturating_add(1));
    if listed.is_empty() {
        return Err(MatchError::NoConnectedSubgraph(k));
    }
    if listed.len() <= cap {
        listed.shuffle(&mut rng);
        return Ok(listed);
    }

    let nodes: Vec<NodeId> = skeleton.nodes().iter().copied().collect();
    let mut seen: HashSet<BTreeSet<NodeId>> = HashSet::new();
    let mut found = Vec::with_capacity(cap);
    let budget = cap.saturating_mul(64).max(256);
    for _ in 0..budget {
        if found.len() == cap {
            break;
        }
        let start = *nodes.choose(&mut rng).expect("k <= node count so nodes exist");
        if let Some(set) = grow_random(skeleton, start, k, &mut rng) {
            if seen.insert(set.clone()) {
                found.push(set);
            }
        }
    }
    if found.len() < cap {
        listed.shuffle(&mut rng);
        for set in listed {
            if found.len() == cap {
                break;
            }
            if seen.insert(set.clone()) {
                found.push(set);
            }
        }
    }
    Ok(found)
}

fn grow_random(g: &Graph, start: NodeId, k: usize, rng: &mut ChaCha8Rng) -> Option<BTreeSet<NodeId>> {
    let mut set = BTreeSet::from([start]);
    let mut frontier: BTreeSet<NodeId> = g.neighbors(start).map(|(v, _)| v).collect();
    while set.len() < k {
        if frontier.is_empty() {
            return None;
        }
        let pick = rng.random_range(0..frontier.len());
        let next = *frontier.iter().nth(pick).expect("index in range");
        frontier.remove(&next);
        set.insert(next);
        frontier.extend(g.neighbors(next).map(|(v, _)| v).filter(|v| !set.contains(v)));
    }
    Some(set)
}

/// Enumerates connected induced `k`-sets (ESU algorithm), stopping after `limit`.
fn enumerate_connected_sets(g: &Graph, k: usize, limit: usize) -> Vec<BTreeSet<NodeId>> {
    struct Esu<'a> {
        g: &'a Graph,
        k: usize,
        limit: usize,
        out: Vec<BTreeSet<NodeId>>,
    }

    impl Esu<'_> {
        fn extend(&mut self, sub: &mut Vec<NodeId>, mut ext: BTreeSet<NodeId>, root: NodeId) {
            if sub.len() == self.k {
                self.out.push(sub.iter().copied().collect());
                return;
            }
            while let Some(w) = ext.pop_first() {
                if self.out.len() >= self.limit {
                    return;
                }
                let closed: BTreeSet<NodeId> = sub
                    .iter()
                    .flat_map(|&s| self.g.neighbors(s).map(|(v, _)| v))
                    .chain(sub.iter().copied())
                    .collect();
                let mut next_ext = ext.clone();
                next_ext.extend(
                    self.g
                        .neighbors(w)
                        .map(|(u, _)| u)
                        .filter(|u| *u > root && !closed.contains(u)),
                );
                sub.push(w);
                self.extend(sub, next_ext, root);
                sub.pop();
            }
        }
    }

    let mut esu = Esu { g, k, limit, out: Vec::new() };
    for &v in g.nodes() {
        if esu.out.len() >= limit {
            break;
        }
        let ext = g.neighbors(v).map(|(u, _)| u).filter(|u| *u > v).collect();
        esu.extend(&mut vec![v], ext, v);
    }
    esu.out.truncate(limit);
    esu.out
}

/// Dense adjacency over sorted node positions.
struct Dense {
    ids: Vec<NodeId>,
    adj: Vec<Vec<Option<Rational>>>,
    edge_count: usize,
}

impl Dense {
    fn new(g: &Graph) -> Self {
        let ids: Vec<NodeId> = g.nodes().iter().copied().collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adj = vec![vec![None; ids.len()]; ids.len()];
        for e in g.edges() {
            let (a, b) = (index[&e.u], index[&e.v]);
            adj[a][b] = Some(e.weight.value());
            adj[b][a] = Some(e.weight.value());
        }
        Dense { ids, adj, edge_count: g.edge_count() }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn has(&self, a: usize, b: usize) -> bool {
        self.adj[a][b].is_some()
    }
}

/// Lexicographic search key: edit distance first, then penalty.
type Key = (u32, Rational);

struct Problem<'a> {
    q: &'a Dense,
    s: &'a Dense,
    /// `None` scores edit distance only.
    max_weight: Option<Rational>,
}

impl Problem<'_> {
    /// Cost contributed by placing query position `i` on target `j`, against
    /// all earlier positions.
    fn step_cost(&self, assign: &[usize], i: usize, j: usize) -> Key {
        let mut ged = 0;
        let mut pen = Rational::zero();
        for (i2, &j2) in assign.iter().enumerate().take(i) {
            let qe = self.q.adj[i][i2];
            let se = self.s.adj[j][j2];
            if qe.is_some() != se.is_some() {
                ged += 1;
            }
            if let (Some(max_w), Some(wq)) = (self.max_weight, qe) {
                pen += match se {
                    Some(ws) => (wq - ws).abs(),
                    None => max_w,
                };
            }
        }
        (ged, pen)
    }

    fn full_cost(&self, assign: &[usize]) -> Key {
        let mut total = (0, Rational::zero());
        for i in 0..assign.len() {
            let (g, p) = self.step_cost(assign, i, assign[i]);
            total.0 += g;
            total.1 += p;
        }
        total
    }

    /// Edit-distance lower bound for completing a partial assignment of the
    /// first `depth` query positions.
    fn ged_lower_bound(&self, assign: &[usize], depth: usize, used: &[bool]) -> u32 {
        let n = self.q.len();
        let free_targets: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
        let mut bound = 0u32;
        for (i, &j) in assign.iter().enumerate().take(depth) {
            let dq = (depth..n).filter(|&u| self.q.has(i, u)).count();
            let ds = free_targets.iter().filter(|&&x| self.s.has(j, x)).count();
            bound += dq.abs_diff(ds) as u32;
        }
        let eq = (depth..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.q.has(a, b))
            .count();
        let es = free_targets
            .iter()
            .enumerate()
            .flat_map(|(ia, &a)| free_targets[ia + 1..].iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| self.s.has(a, b))
            .count();
        bound + eq.abs_diff(es) as u32
    }

    fn exhaustive(&self) -> (Vec<usize>, Key) {
        let n = self.q.len();
        let mut best: Option<(Vec<usize>, Key)> = None;
        let floor = self.q.edge_count.abs_diff(self.s.edge_count) as u32;
        let mut assign = vec![0usize; n];
        let mut used = vec![false; n];
        self.search(0, (0, Rational::zero()), &mut assign, &mut used, &mut best, floor);
        best.expect("at least one bijection exists")
    }

    fn search(
        &self,
        depth: usize,
        partial: Key,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(Vec<usize>, Key)>,
        floor: u32,
    ) -> bool {
        let n = self.q.len();
        if depth == n {
            if best.as_ref().is_none_or(|(_, b)| partial < *b) {
                let done = partial.0 == floor && (self.max_weight.is_none() || partial.1.is_zero());
                *best = Some((assign.clone(), partial));
                return done;
            }
            return false;
        }
        for j in 0..n {
            if used[j] {
                continue;
            }
            let (g, p) = self.step_cost(assign, depth, j);
            let next = (partial.0 + g, partial.1 + p);
            assign[depth] = j;
            used[j] = true;
            let bound = next.0 + self.ged_lower_bound(assign, depth + 1, used);
            let prune = match best {
                None => false,
                Some((_, b)) => match self.max_weight {
                    None => bound >= b.0,
                    Some(_) => (bound, next.1) >= *b,
                },
            };
            let finished = !prune && self.search(depth + 1, next, assign, used, best, floor);
            used[j] = false;
            if finished {
                return true;
            }
        }
        false
    }

    /// Degree-profile greedy assignment refined by pairwise swaps.
    fn heuristic(&self) -> (Vec<usize>, Key) {
        let n = self.q.len();
        let degree = |d: &Dense, i: usize| (0..n).filter(|&x| d.has(i, x)).count();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(degree(self.q, i)), i));
        let mut assign = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for &i in &order {
            let dq = degree(self.q, i);
            let j = (0..n)
                .filter(|&j| !used[j])
                .min_by_key(|&j| (degree(self.s, j).abs_diff(dq), j))
                .expect("a free target remains");
            assign[i] = j;
            used[j] = true;
        }
        let mut cost = self.full_cost(&assign);
        loop {
            let mut improved = false;
            for a in 0..n {
                for b in a + 1..n {
                    assign.swap(a, b);
                    let c = self.full_cost(&assign);
                    if c < cost {
                        cost = c;
                        improved = true;
                    } else {
                        assign.swap(a, b);
                    }
                }
            }
            if !improved {
                return (assign, cost);
            }
        }
    }

    fn solve(&self) -> (Vec<usize>, Key, bool) {
        if self.q.len() <= EXACT_SEARCH_LIMIT {
            let (a, k) = self.exhaustive();
            (a, k, true)
        } else {
            let (a, k) = self.heuristic();
            (a, k, false)
        }
    }
}

fn to_mapping(q: &Dense, s: &Dense, assign: &[usize]) -> NodeMapping {
    NodeMapping(assign.iter().enumerate().map(|(i, &j)| (q.ids[i], s.ids[j])).collect())
}

/// Minimum number of edge mismatches over all bijections between two equal-size
/// graphs, with the lexicographically smallest optimal bijection (by sorted
/// query node). Directed inputs are compared through their undirected skeletons.
pub fn graph_edit_distance(gq: &Graph, gsub: &Graph) -> Result<(u32, NodeMapping), MatchError> {
    if gq.node_count() != gsub.node_count() {
        return Err(MatchError::SizeMismatch(gq.node_count(), gsub.node_count()));
    }
    let (q, s) = (Dense::new(&gq.undirected_skeleton()), Dense::new(&gsub.undirected_skeleton()));
    let (assign, (ged, _), _) = Problem { q: &q, s: &s, max_weight: None }.solve();
    Ok((ged, to_mapping(&q, &s, &assign)))
}

/// Sum over query edges of the absolute weight difference to the mapped
/// subgraph edge, or `max_edge_weight` when the mapped edge is absent.
pub fn edge_weight_penalty(
    gq: &Graph,
    gsub: &Graph,
    mapping: &NodeMapping,
    max_edge_weight: Rational,
) -> Result<Rational, MatchError> {
    let mut penalty = Rational::zero();
    for e in gq.undirected_skeleton().edges() {
        let a = mapping.get(e.u).ok_or(MatchError::UnmappedNode(e.u))?;
        let b = mapping.get(e.v).ok_or(MatchError::UnmappedNode(e.v))?;
        penalty += match gsub.weight(a, b) {
            Some(w) => (e.weight.value() - w.value()).abs(),
            None => max_edge_weight,
        };
    }
    Ok(penalty)
}

/// Scores one candidate: among edit-distance-optimal bijections, the one with
/// the lowest penalty (lexicographically smallest on ties).
pub fn score_candidate(gq: &Graph, candidate: &Graph, max_edge_weight: Rational) -> Result<CandidateScore, MatchError> {
    if gq.node_count() != candidate.node_count() {
        return Err(MatchError::SizeMismatch(gq.node_count(), candidate.node_count()));
    }
    let (q, s) = (Dense::new(&gq.undirected_skeleton()), Dense::new(candidate));
    let (assign, (ged, penalty), exact) = Problem { q: &q, s: &s, max_weight: Some(max_edge_weight) }.solve();
    Ok(CandidateScore {
        nodes: candidate.nodes().clone(),
        mapping: to_mapping(&q, &s, &assign),
        ged,
        penalty,
        exact,
    })
}

/// Scores every candidate in enumeration order. Scoring runs in parallel; the
/// returned order is the enumeration order.
pub fn score_candidates(
    gq: &Graph,
    skeleton: &Graph,
    max_edge_weight: Rational,
    cap: usize,
    seed: u64,
) -> Result<Vec<CandidateScore>, MatchError> {
    let k = gq.node_count();
    if k == 0 {
        return Err(MatchError::EmptyQuery);
    }
    if k > skeleton.node_count() {
        return Err(MatchError::QueryTooLarge { query: k, reference: skeleton.node_count() });
    }
    let sets = candidate_node_sets(skeleton, k, cap, seed)?;
    sets.par_iter()
        .map(|set| {
            let sub = induced_subgraph(skeleton, set).expect("candidate nodes come from the skeleton");
            score_candidate(gq, &sub, max_edge_weight)
        })
        .collect()
}

/// Best-matching reference subgraph for `gq`.
pub fn best_subgraph(gq: &Graph, reference: &ReferenceGraph, cap: usize, seed: u64) -> Result<MatchResult, MatchError> {
    best_subgraph_in(gq, reference.skeleton(), reference.max_edge_weight(), cap, seed)
}

pub fn best_subgraph_in(
    gq: &Graph,
    skeleton: &Graph,
    max_edge_weight: Rational,
    cap: usize,
    seed: u64,
) -> Result<MatchResult, MatchError> {
    let scored = score_candidates(gq, skeleton, max_edge_weight, cap, seed)?;
    let examined = scored.len();
    let mut best: Option<CandidateScore> = None;
    for cand in scored {
        if best.as_ref().is_none_or(|b| cand.combined() < b.combined()) {
            best = Some(cand);
        }
    }
    let best = best.expect("candidate_node_sets never returns an empty list");
    Ok(MatchResult {
        best_subgraph: induced_subgraph(skeleton, &best.nodes).expect("candidate nodes come from the skeleton"),
        combined_score: best.combined(),
        mapping: best.mapping,
        ged_score: best.ged,
        weight_penalty: best.penalty,
        candidates_examined: examined,
        exact: best.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;
    use crate::reference::builtin_small;
    use proptest::prelude::*;

    fn five() -> Rational {
        Rational::from_integer(5)
    }

    fn star_query() -> Graph {
        parse_edge_list("(0,4) (1,4) (2,4)", false, None).unwrap()
    }

    #[test]
    fn single_node_candidates() {
        let r = builtin_small();
        let subs = generate_subgraphs(r.skeleton(), 1, 25, 0).unwrap();
        assert_eq!(subs.len(), 7);
        let nodes: BTreeSet<NodeId> = subs.iter().flat_map(|g| g.nodes().iter().copied()).collect();
        assert_eq!(nodes.len(), 7);
    }

    #[test]
    fn candidate_errors() {
        let r = builtin_small();
        assert_eq!(
            generate_subgraphs(r.skeleton(), 8, 25, 0).unwrap_err(),
            MatchError::KTooLarge { k: 8, available: 7 }
        );
        assert_eq!(generate_subgraphs(r.skeleton(), 0, 25, 0).unwrap_err(), MatchError::EmptyQuery);
        assert_eq!(generate_subgraphs(r.skeleton(), 2, 0, 0).unwrap_err(), MatchError::InvalidCap);
        let isolated = Graph::with_nodes(false, 0..3);
        assert_eq!(generate_subgraphs(&isolated, 2, 5, 0).unwrap_err(), MatchError::NoConnectedSubgraph(2));
    }

    #[test]
    fn four_node_candidates_include_star() {
        let r = builtin_small();
        let sets = candidate_node_sets(r.skeleton(), 4, 35, 1).unwrap();
        assert!(sets.contains(&BTreeSet::from([0, 1, 2, 4])));
        let unique: HashSet<_> = sets.iter().cloned().collect();
        assert_eq!(unique.len(), sets.len());
        for set in &sets {
            let sub = induced_subgraph(r.skeleton(), set).unwrap();
            let first = *set.iter().next().unwrap();
            assert!(set.iter().all(|&n| crate::oracles::is_connected(&sub, first, n).unwrap()));
        }
    }

    #[test]
    fn cap_is_respected_and_deterministic() {
        let r = crate::reference::builtin_extended();
        let a = candidate_node_sets(r.skeleton(), 6, 25, 42).unwrap();
        assert_eq!(a.len(), 25);
        assert_eq!(a, candidate_node_sets(r.skeleton(), 6, 25, 42).unwrap());
        assert_ne!(a, candidate_node_sets(r.skeleton(), 6, 25, 43).unwrap());
    }

    #[test]
    fn esu_counts_match_brute_force() {
        // 4-cycle with a chord: connected 3-sets are all four triples
        let g = parse_edge_list("(0,1) (1,2) (2,3) (0,3) (0,2)", false, None).unwrap();
        assert_eq!(enumerate_connected_sets(&g, 3, 100).len(), 4);
        assert_eq!(enumerate_connected_sets(&g, 2, 100).len(), 5);
        assert_eq!(enumerate_connected_sets(&g, 4, 100).len(), 1);
        assert_eq!(enumerate_connected_sets(&g, 2, 3).len(), 3);
    }

    #[test]
    fn ged_examples() {
        let g = star_query();
        let (d, m) = graph_edit_distance(&g, &g).unwrap();
        assert_eq!((d, m), (0, NodeMapping::identity(g.nodes().iter().copied())));

        let r = builtin_small();
        let star = induced_subgraph(r.skeleton(), &[0, 1, 2, 4].into()).unwrap();
        assert_eq!(graph_edit_distance(&g, &star).unwrap().0, 0);

        let path = parse_edge_list("(0,1) (1,2)", false, None).unwrap();
        let triangle = parse_edge_list("(0,1) (1,2) (0,2)", false, None).unwrap();
        assert_eq!(graph_edit_distance(&path, &triangle).unwrap().0, 1);

        assert_eq!(
            graph_edit_distance(&path, &g).unwrap_err(),
            MatchError::SizeMismatch(3, 4)
        );
    }

    #[test]
    fn ged_tie_break_is_lexicographic() {
        // star on {0,1,2,4} centred at 4 against itself: identity is the smallest optimum
        let (_, m) = graph_edit_distance(&star_query(), &star_query()).unwrap();
        assert_eq!(m.as_map(), &BTreeMap::from([(0, 0), (1, 1), (2, 2), (4, 4)]));
        // path 0-1-2 onto path 5-7-6 (centre 7): 0->5, 1->7, 2->6
        let q = parse_edge_list("(0,1) (1,2)", false, None).unwrap();
        let s = parse_edge_list("(5,7) (6,7)", false, None).unwrap();
        let (d, m) = graph_edit_distance(&q, &s).unwrap();
        assert_eq!(d, 0);
        assert_eq!(m.as_map(), &BTreeMap::from([(0, 5), (1, 7), (2, 6)]));
    }

    #[test]
    fn penalty_examples() {
        let r = builtin_small();
        let sub = induced_subgraph(r.skeleton(), &[0, 1, 2, 4].into()).unwrap();
        let identity = NodeMapping::identity([0, 1, 2, 4]);
        assert_eq!(edge_weight_penalty(&star_query(), &sub, &identity, five()).unwrap(), Rational::from_integer(7));
        assert_eq!(edge_weight_penalty(&sub, &sub, &identity, five()).unwrap(), Rational::zero());

        let q = parse_edge_list("(0,1)", false, None).unwrap();
        let s = parse_edge_list("(5,6) (6,7)", false, None).unwrap();
        let m = NodeMapping::new([(0, 5), (1, 7)].into()).unwrap();
        assert_eq!(edge_weight_penalty(&q, &s, &m, five()).unwrap(), five());

        let partial = NodeMapping::new([(0, 5)].into()).unwrap();
        assert_eq!(edge_weight_penalty(&q, &s, &partial, five()).unwrap_err(), MatchError::UnmappedNode(1));
    }

    #[test]
    fn best_subgraph_on_sample_graphs() {
        let r = builtin_small();
        let m = best_subgraph(&star_query(), &r, 35, 0).unwrap();
        assert_eq!(m.best_subgraph.nodes(), &BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(m.ged_score, 0);
        assert_eq!(m.weight_penalty, Rational::from_integer(3));
        assert_eq!(m.combined_score, Rational::from_integer(3));
        assert!(m.exact);
        assert!(m.candidates_examined <= 35);
        assert_eq!(m.mapping.get(4), Some(4));
    }

    #[test]
    fn best_subgraph_self_match() {
        let r = builtin_small();
        let m = best_subgraph(r.skeleton(), &r, 25, 3).unwrap();
        assert_eq!(m.combined_score, Rational::zero());
        assert_eq!(m.mapping, NodeMapping::identity(0..7));
    }

    #[test]
    fn best_subgraph_errors() {
        let r = builtin_small();
        let big = Graph::with_nodes(false, 0..8);
        assert_eq!(
            best_subgraph(&big, &r, 25, 0).unwrap_err(),
            MatchError::QueryTooLarge { query: 8, reference: 7 }
        );
        assert_eq!(best_subgraph(&Graph::new(false), &r, 25, 0).unwrap_err(), MatchError::EmptyQuery);
    }

    #[test]
    fn heuristic_used_above_limit() {
        let r = crate::reference::builtin_extended();
        let q = parse_edge_list("(0,1) (1,2) (2,3) (3,4) (4,5) (5,6) (6,7) (7,8) (8,9) (9,0)", false, None).unwrap();
        let m = best_subgraph(&q, &r, 10, 5).unwrap();
        assert!(!m.exact);
        assert_eq!(m.mapping.len(), 10);
        assert!(m.mapping.covers(&q));
        let recomputed = edge_weight_penalty(&q, &m.best_subgraph, &m.mapping, five()).unwrap();
        assert_eq!(recomputed, m.weight_penalty);
    }

    #[test]
    fn directed_queries_use_skeleton() {
        let r = builtin_small();
        let q = parse_edge_list("(4,0) (4,1) (4,2)", true, None).unwrap();
        let m = best_subgraph(&q, &r, 35, 0).unwrap();
        assert_eq!(m.combined_score, Rational::from_integer(3));
    }

    fn arb_pair() -> impl Strategy<Value = (Graph, Graph)> {
        let graph = |max_n: u32| {
            (1..=max_n, proptest::collection::vec((0u32..6, 0u32..6, 1i64..6), 0..12)).prop_map(|(n, raw)| {
                let mut g = Graph::with_nodes(false, 0..n);
                for (u, v, w) in raw {
                    let (u, v) = (u % n, v % n);
                    if u != v && !g.has_edge(u, v) {
                        g.add_edge(u, v, crate::graph::Weight::from_int(w).unwrap()).unwrap();
                    }
                }
                g
            })
        };
        (graph(5), graph(5)).prop_filter("equal sizes", |(a, b)| a.node_count() == b.node_count())
    }

    proptest! {
        #[test]
        fn ged_is_zero_on_self((g, _) in arb_pair()) {
            prop_assert_eq!(graph_edit_distance(&g, &g).unwrap().0, 0);
        }

        #[test]
        fn penalty_zero_iff_all_edges_match((q, s) in arb_pair()) {
            let score = score_candidate(&q, &s, five()).unwrap();
            let all_match = q.edges().all(|e| {
                let (a, b) = (score.mapping.get(e.u).unwrap(), score.mapping.get(e.v).unwrap());
                s.weight(a, b) == Some(e.weight)
            });
            prop_assert!(score.penalty >= Rational::zero());
            prop_assert_eq!(score.penalty.is_zero(), all_match);
            prop_assert_eq!(edge_weight_penalty(&q, &s, &score.mapping, five()).unwrap(), score.penalty);
        }

        #[test]
        fn heuristic_never_beats_exact((q, s) in arb_pair()) {
            let (qd, sd) = (Dense::new(&q), Dense::new(&s));
            let p = Problem { q: &qd, s: &sd, max_weight: Some(five()) };
            let (_, exact) = p.exhaustive();
            let (assign, approx) = p.heuristic();
            prop_assert!(exact <= approx);
            prop_assert_eq!(p.full_cost(&assign), approx);
        }
    }
}
