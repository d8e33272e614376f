//! Exhaustive reference implementations used to cross-check the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use graphctx::graph::{Graph, NodeId, Rational, Weight};
use num_traits::Signed;
use rand::{Rng, RngCore};

/// Random graph on nodes `0..n` with edge probability `density` and weights
/// drawn from `1..=9`, a quarter of them halved.
pub fn random_graph(rng: &mut impl RngCore, n: u32, directed: bool, density: f64) -> Graph {
    let mut g = Graph::with_nodes(directed, 0..n);
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if rng.random_bool(density) {
                let num = rng.random_range(1..=9i64);
                let den = if rng.random_bool(0.25) { 2 } else { 1 };
                g.add_edge(u, v, Weight::new(Rational::new(num, den)).unwrap()).unwrap();
            }
        }
    }
    g
}

/// Random DAG: arcs only go from lower to higher rank under a shuffled ranking.
pub fn random_dag(rng: &mut impl RngCore, n: u32, density: f64) -> Graph {
    let mut rank: Vec<NodeId> = (0..n).collect();
    for i in (1..rank.len()).rev() {
        rank.swap(i, rng.random_range(0..=i));
    }
    let mut g = Graph::with_nodes(true, 0..n);
    for i in 0..rank.len() {
        for j in i + 1..rank.len() {
            if rng.random_bool(density) {
                g.add_edge(rank[i], rank[j], Weight::ONE).unwrap();
            }
        }
    }
    g
}

fn index(g: &Graph) -> (Vec<NodeId>, BTreeMap<NodeId, usize>) {
    let nodes: Vec<NodeId> = g.nodes().iter().copied().collect();
    let pos = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    (nodes, pos)
}

/// Warshall transitive closure, reflexive.
pub fn closure(g: &Graph) -> BTreeMap<(NodeId, NodeId), bool> {
    let (nodes, pos) = index(g);
    let n = nodes.len();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in g.edges() {
        r[pos[&e.u]][pos[&e.v]] = true;
        if !g.is_directed() {
            r[pos[&e.v]][pos[&e.u]] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            out.insert((nodes[i], nodes[j]), r[i][j]);
        }
    }
    out
}

/// Every simple path from `s` to `t`.
pub fn simple_paths(g: &Graph, s: NodeId, t: NodeId) -> Vec<Vec<NodeId>> {
    fn walk(g: &Graph, t: NodeId, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        let here = *path.last().unwrap();
        if here == t {
            out.push(path.clone());
            return;
        }
        let next: Vec<NodeId> = g.neighbors(here).map(|(v, _)| v).collect();
        for v in next {
            if !path.contains(&v) {
                path.push(v);
                walk(g, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, t, &mut vec![s], &mut out);
    out
}

/// Lexicographically smallest minimum-weight simple path, if any.
pub fn brute_shortest_path(g: &Graph, s: NodeId, t: NodeId) -> Option<(Vec<NodeId>, Rational)> {
    simple_paths(g, s, t)
        .into_iter()
        .map(|p| {
            let w = g.path_weight(&p).unwrap();
            (w, p)
        })
        .min()
        .map(|(w, p)| (p, w))
}

/// An undirected graph has a cycle iff some edge's endpoints stay connected
/// after deleting that edge.
pub fn brute_has_cycle(g: &Graph) -> bool {
    g.edges().any(|e| {
        let mut without = Graph::with_nodes(false, g.nodes().iter().copied());
        for f in g.edges().filter(|f| (f.u, f.v) != (e.u, e.v)) {
            without.add_edge(f.u, f.v, f.weight).unwrap();
        }
        closure(&without)[&(e.u, e.v)]
    })
}

/// All permutations of `items`.
pub fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// True iff some permutation respects every arc.
pub fn brute_has_toposort(g: &Graph) -> bool {
    let nodes: Vec<NodeId> = g.nodes().iter().copied().collect();
    permutations(&nodes).iter().any(|p| {
        let pos: BTreeMap<NodeId, usize> = p.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        g.edges().all(|e| pos[&e.u] < pos[&e.v])
    })
}

fn subsets(items: &[NodeId], k: usize) -> Vec<BTreeSet<NodeId>> {
    if k == 0 {
        return vec![BTreeSet::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut with: Vec<BTreeSet<NodeId>> = subsets(&items[1..], k - 1);
    for s in &mut with {
        s.insert(items[0]);
    }
    with.extend(subsets(&items[1..], k));
    with
}

fn induced_connected(g: &Graph, set: &BTreeSet<NodeId>) -> bool {
    let start = *set.iter().next().unwrap();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for (v, _) in g.neighbors(u) {
            if set.contains(&v) && seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen.len() == set.len()
}

/// Connected induced `k`-node subsets of an undirected graph.
pub fn connected_subsets(g: &Graph, k: usize) -> Vec<BTreeSet<NodeId>> {
    let nodes: Vec<NodeId> = g.nodes().iter().copied().collect();
    subsets(&nodes, k).into_iter().filter(|s| induced_connected(g, s)).collect()
}

/// Edge mismatches and weight penalty of one bijection `query -> reference`.
pub fn bijection_cost(q: &Graph, r: &Graph, map: &BTreeMap<NodeId, NodeId>, max_w: Rational) -> (u32, Rational) {
    let mut ged = 0;
    let mut pen = Rational::from_integer(0);
    let qn: Vec<NodeId> = q.nodes().iter().copied().collect();
    for (i, &a) in qn.iter().enumerate() {
        for &b in &qn[i + 1..] {
            let (x, y) = (map[&a], map[&b]);
            match (q.weight(a, b), r.weight(x, y)) {
                (Some(wq), Some(wr)) => pen += (wq.value() - wr.value()).abs(),
                (Some(_), None) => {
                    ged += 1;
                    pen += max_w;
                }
                (None, Some(_)) => ged += 1,
                (None, None) => {}
            }
        }
    }
    (ged, pen)
}

/// Exhaustive optimum of the matching objective: per candidate the
/// lexicographically smallest (edit distance, penalty) over all bijections,
/// then the smallest sum over candidates.
pub fn brute_best_score(q: &Graph, reference: &Graph, max_w: Rational) -> Rational {
    let qn: Vec<NodeId> = q.nodes().iter().copied().collect();
    let mut best: Option<Rational> = None;
    for set in connected_subsets(reference, qn.len()) {
        let rn: Vec<NodeId> = set.iter().copied().collect();
        let per = permutations(&rn)
            .into_iter()
            .map(|perm| {
                let map: BTreeMap<NodeId, NodeId> = qn.iter().copied().zip(perm).collect();
                bijection_cost(q, reference, &map, max_w)
            })
            .min()
            .unwrap();
        let total = Rational::from_integer(per.0 as i64) + per.1;
        if best.is_none_or(|b| total < b) {
            best = Some(total);
        }
    }
    best.expect("reference has a connected subset of the query size")
}

