//! Exact ground-truth solvers for the four benchmark tasks, plus a seeded
//! random instance generator used for property tests and synthetic datasets.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet, VecDeque};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, NodeId, Rational, Weight};
use crate::task::{TaskInstance, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("task expects an undirected graph")]
    DirectedGraphRejected,
    #[error("task expects a directed graph")]
    UndirectedGraphRejected,
    #[error("graph has a directed cycle; no topological order exists")]
    CyclicGraph,
    #[error("node {1} is unreachable from node {0}")]
    Unreachable(NodeId, NodeId),
    #[error("{0} instances need a source and a target node")]
    MissingEndpoints(TaskKind),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

fn require_undirected(g: &Graph) -> Result<(), OracleError> {
    if g.is_directed() {
        Err(OracleError::DirectedGraphRejected)
    } else {
        Ok(())
    }
}

fn require_node(g: &Graph, n: NodeId) -> Result<(), OracleError> {
    if g.contains_node(n) {
        Ok(())
    } else {
        Err(OracleError::UnknownNode(n))
    }
}

/// Breadth-first reachability; `s == t` is trivially connected.
pub fn is_connected(g: &Graph, s: NodeId, t: NodeId) -> Result<bool, OracleError> {
    require_undirected(g)?;
    require_node(g, s)?;
    require_node(g, t)?;
    let mut seen = HashSet::from([s]);
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        if u == t {
            return Ok(true);
        }
        for (v, _) in g.neighbors(u) {
            if seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    Ok(false)
}

/// True iff the undirected graph has a cycle. Without multi-edges and loops
/// any cycle has length at least 3, so union-find suffices.
pub fn has_cycle(g: &Graph) -> Result<bool, OracleError> {
    require_undirected(g)?;
    let mut parent: BTreeMap<NodeId, NodeId> = g.nodes().iter().map(|&n| (n, n)).collect();
    fn find(parent: &mut BTreeMap<NodeId, NodeId>, mut x: NodeId) -> NodeId {
        while parent[&x] != x {
            let grand = parent[&parent[&x]];
            parent.insert(x, grand);
            x = grand;
        }
        x
    }
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a == b {
            return Ok(true);
        }
        parent.insert(a, b);
    }
    Ok(false)
}

/// Kahn's algorithm, always taking the smallest available node id.
pub fn solve_toposort(g: &Graph) -> Result<Vec<NodeId>, OracleError> {
    if !g.is_directed() {
        return Err(OracleError::UndirectedGraphRejected);
    }
    let mut indegree: BTreeMap<NodeId, usize> = g.nodes().iter().map(|&n| (n, 0)).collect();
    for e in g.edges() {
        *indegree.get_mut(&e.v).expect("endpoint is a node") += 1;
    }
    let mut ready: BTreeSet<NodeId> =
        indegree.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    let mut order = Vec::with_capacity(g.node_count());
    while let Some(u) = ready.pop_first() {
        order.push(u);
        for (v, _) in g.neighbors(u) {
            let d = indegree.get_mut(&v).expect("endpoint is a node");
            *d -= 1;
            if *d == 0 {
                ready.insert(v);
            }
        }
    }
    if order.len() == g.node_count() {
        Ok(order)
    } else {
        Err(OracleError::CyclicGraph)
    }
}

/// Any permutation of the nodes that respects every arc is accepted.
pub fn validate_toposort(g: &Graph, order: &[NodeId]) -> bool {
    if order.len() != g.node_count() {
        return false;
    }
    let mut position = BTreeMap::new();
    for (i, &n) in order.iter().enumerate() {
        if !g.contains_node(n) || position.insert(n, i).is_some() {
            return false;
        }
    }
    g.edges().all(|e| position[&e.u] < position[&e.v])
}

/// Dijkstra from `t`, then a greedy walk from `s` that always steps to the
/// smallest neighbour still on an optimal route. The walk therefore yields the
/// lexicographically smallest optimal path.
pub fn shortest_path(g: &Graph, s: NodeId, t: NodeId) -> Result<(Vec<NodeId>, Rational), OracleError> {
    require_undirected(g)?;
    require_node(g, s)?;
    require_node(g, t)?;
    let dist = distances_from(g, t);
    let Some(&total) = dist.get(&s) else {
        return Err(OracleError::Unreachable(s, t));
    };
    let mut path = vec![s];
    let mut here = s;
    while here != t {
        let remaining = dist[&here];
        let next = g
            .neighbors(here)
            .find(|(v, w)| dist.get(v).is_some_and(|d| *d + w.value() == remaining))
            .map(|(v, _)| v)
            .expect("some neighbour lies on an optimal route");
        path.push(next);
        here = next;
    }
    Ok((path, total))
}

fn distances_from(g: &Graph, origin: NodeId) -> BTreeMap<NodeId, Rational> {
    let mut dist: BTreeMap<NodeId, Rational> = BTreeMap::new();
    let mut heap = BinaryHeap::from([Reverse((Rational::zero(), origin))]);
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist.contains_key(&u) {
            continue;
        }
        dist.insert(u, d);
        for (v, w) in g.neighbors(u) {
            if !dist.contains_key(&v) {
                heap.push(Reverse((d + w.value(), v)));
            }
        }
    }
    dist
}

/// Parameters for [`generate_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    pub nodes: u32,
    /// Independent edge probability in `[0, 1]`.
    pub edge_density: f64,
    /// Inclusive integer weight range; only used for shortest path.
    pub weight_range: (i64, i64),
}

impl GeneratorParams {
    pub fn new(nodes: u32, edge_density: f64, weight_range: (i64, i64)) -> Self {
        GeneratorParams { nodes, edge_density, weight_range }
    }
}

/// Seeded random instance: G(n, p) for undirected tasks, a random DAG
/// (forward arcs of a shuffled order) for topological sort.
pub fn generate_instance(task: TaskKind, params: GeneratorParams, seed: u64) -> Result<TaskInstance, OracleError> {
    let GeneratorParams { nodes: n, edge_density, weight_range: (lo, hi) } = params;
    if n == 0 {
        return Err(OracleError::InvalidParams("need at least one node".into()));
    }
    if !(0.0..=1.0).contains(&edge_density) {
        return Err(OracleError::InvalidParams(format!("edge density {edge_density} outside [0, 1]")));
    }
    if lo < 1 || lo > hi {
        return Err(OracleError::InvalidParams(format!("weight range ({lo}, {hi}) must satisfy 1 <= lo <= hi")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::with_nodes(task.is_directed(), 0..n);
    if task.is_directed() {
        let mut order: Vec<NodeId> = (0..n).collect();
        order.shuffle(&mut rng);
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                if rng.random_bool(edge_density) {
                    g.add_edge(order[i], order[j], Weight::ONE).expect("fresh arc");
                }
            }
        }
    } else {
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(edge_density) {
                    let w = if task.is_weighted() { rng.random_range(lo..=hi) } else { 1 };
                    g.add_edge(u, v, Weight::from_int(w).expect("lo >= 1")).expect("fresh edge");
                }
            }
        }
    }
    let endpoints = task.has_endpoints().then(|| {
        if n == 1 {
            (0, 0)
        } else {
            let s = rng.random_range(0..n);
            let t = (s + rng.random_range(1..n)) % n;
            (s, t)
        }
    });
    let descriptor = format!(
        "generated:{}:n={n}:p={edge_density}:w={lo}..{hi}:seed={seed}",
        task.dir_name()
    );
    TaskInstance::new(format!("{}-{seed}", task.dir_name()), task, g, endpoints, descriptor)
}
