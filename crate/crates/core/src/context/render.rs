use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::templates::{fill, TemplateSet};
use super::{ContextError, PromptStrategy, ReferenceGraph, TaskContext};
use crate::answers::oracle_answer;
use crate::graph::{format_rational, serialize_edge_list, serialize_weighted_edge_list, Graph, NodeId};
use crate::matcher::{MatchResult, NodeMapping};
use crate::oracles::{generate_instance, shortest_path, GeneratorParams};
use crate::task::{GroundTruth, TaskInstance, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub instance_id: String,
    pub strategy: PromptStrategy,
    pub text: String,
    pub mapping: Option<NodeMapping>,
    #[serde(rename = "match")]
    pub matched: Option<MatchResult>,
}

/// Everything a strategy may draw on besides the instance itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptInputs<'a> {
    pub mapping: Option<&'a NodeMapping>,
    /// Matcher output; required by GOT Subgraph, whose mapping it supplies when
    /// `mapping` is absent.
    pub matched: Option<&'a MatchResult>,
    pub context: Option<&'a TaskContext>,
    pub reference: Option<&'a ReferenceGraph>,
    pub exemplars: &'a [TaskInstance],
}

pub fn render_prompt(
    inst: &TaskInstance,
    strategy: PromptStrategy,
    inputs: PromptInputs<'_>,
) -> Result<RenderedPrompt, ContextError> {
    render_prompt_with(&TemplateSet::builtin(), inst, strategy, inputs)
}

pub fn render_prompt_with(
    templates: &TemplateSet,
    inst: &TaskInstance,
    strategy: PromptStrategy,
    inputs: PromptInputs<'_>,
) -> Result<RenderedPrompt, ContextError> {
    let matched = if strategy == PromptStrategy::GotSubgraph {
        Some(inputs.matched.ok_or(ContextError::MissingMapping(strategy))?)
    } else {
        None
    };
    let mapping = if strategy.uses_names() {
        let m = inputs.mapping.or(matched.map(|r| &r.mapping)).ok_or(ContextError::MissingMapping(strategy))?;
        if !m.covers(&inst.graph) {
            return Err(ContextError::MissingMapping(strategy));
        }
        Some(m)
    } else {
        None
    };
    if strategy.needs_exemplars() && inputs.exemplars.is_empty() {
        return Err(ContextError::MissingExemplars(strategy));
    }

    let context_block = inputs.context.map(|c| format!("Task context:\n{}", c.text.trim())).unwrap_or_default();
    let (mapping_block, graph_block, question) = match mapping {
        None => (String::new(), numeric_graph(&inst.graph, inst.task), numeric_question(inst)),
        Some(m) => {
            let reference = inputs.reference.ok_or(ContextError::MissingReference(strategy))?;
            let names = Names::new(m, reference)?;
            let narrative = strategy.needs_reference();
            (
                names.mapping_block(narrative),
                names.graph_block(inst, narrative),
                names.question(inst),
            )
        }
    };
    let exemplars = if strategy.needs_exemplars() {
        inputs
            .exemplars
            .iter()
            .map(|e| exemplar_block(e, strategy == PromptStrategy::Cot))
            .collect::<Vec<_>>()
            .join("\n\n")
    } else {
        String::new()
    };
    let text = fill(
        templates.get(inst.task, strategy),
        &[
            ("context", &context_block),
            ("mapping", &mapping_block),
            ("graph", &graph_block),
            ("question", &question),
            ("exemplars", &exemplars),
        ],
    );
    Ok(RenderedPrompt {
        instance_id: inst.id.clone(),
        strategy,
        text,
        mapping: mapping.cloned(),
        matched: matched.cloned(),
    })
}

fn numeric_graph(g: &Graph, task: TaskKind) -> String {
    let edges = if task.is_weighted() { serialize_weighted_edge_list(g) } else { serialize_edge_list(g) };
    let mut out = format!("Graph: {edges}");
    let touched: BTreeSet<NodeId> = g.edges().flat_map(|e| [e.u, e.v]).collect();
    if touched.len() < g.node_count() {
        let all: Vec<String> = g.nodes().iter().map(ToString::to_string).collect();
        out.push_str(&format!("\nNodes: {}", all.join(", ")));
    }
    out
}

fn numeric_question(inst: &TaskInstance) -> String {
    let (s, t) = inst.endpoints.unwrap_or((0, 0));
    match inst.task {
        TaskKind::Connectivity => format!("Question: Is there a path between node {s} and node {t}?"),
        TaskKind::CycleDetection => "Question: Is there a cycle in this graph?".to_string(),
        TaskKind::TopologicalSort => "Question: What is a topological order of the nodes in this graph?".to_string(),
        TaskKind::ShortestPath => {
            format!("Question: What is the shortest path from node {s} to node {t}, and what is its total weight?")
        }
    }
}

struct Names<'a> {
    mapping: &'a NodeMapping,
    reference: &'a ReferenceGraph,
}

impl<'a> Names<'a> {
    fn new(mapping: &'a NodeMapping, reference: &'a ReferenceGraph) -> Result<Self, ContextError> {
        for (node, character) in mapping.iter() {
            if reference.name(character).is_none() {
                return Err(ContextError::UnknownCharacter { node, character });
            }
        }
        Ok(Names { mapping, reference })
    }

    fn name(&self, q: NodeId) -> &str {
        let c = self.mapping.get(q).expect("mapping covers the query");
        self.reference.name(c).expect("checked in Names::new")
    }

    fn labelled(&self, q: NodeId) -> String {
        format!("{} (node {q})", self.name(q))
    }

    fn mapping_block(&self, narrative: bool) -> String {
        let mut out = String::new();
        if narrative {
            let title = self.reference.title.as_deref().unwrap_or("the story");
            out.push_str(&format!(
                "Characters come from {title}. Relationship strength runs from 1 to {}, higher meaning closer.\n",
                self.reference.max_scale
            ));
        }
        out.push_str("Node mapping:");
        for (q, _) in self.mapping.iter() {
            out.push_str(&format!("\n- {q}: {}", self.name(q)));
        }
        out
    }

    fn graph_block(&self, inst: &TaskInstance, narrative: bool) -> String {
        let g = &inst.graph;
        let arrow = if g.is_directed() { "->" } else { "--" };
        let mut lines = Vec::new();
        let mut background = Vec::new();
        for e in g.edges() {
            let pair = format!("{} ({}) {arrow} {} ({})", self.name(e.u), e.u, self.name(e.v), e.v);
            let qw = e.weight.to_string();
            let relation = self.reference.relation(
                self.mapping.get(e.u).expect("covered"),
                self.mapping.get(e.v).expect("covered"),
            );
            let detail = match (narrative, relation, inst.task.is_weighted()) {
                (false, _, true) => format!(": weight = {qw}"),
                (false, _, false) => String::new(),
                (true, Some(r), false) => format!(": weight = {}", r.weight),
                (true, Some(r), true) => format!(": weight = {qw} (relationship strength {})", r.weight),
                (true, None, _) => format!(": connected in this network, weight = {qw}"),
            };
            lines.push(format!("- {pair}{detail}"));
            if let (true, Some(r)) = (narrative, relation) {
                if !r.description.trim().is_empty() {
                    let line = format!("- {} and {}: {}", self.name(e.u), self.name(e.v), r.description.trim());
                    if !background.contains(&line) {
                        background.push(line);
                    }
                }
            }
        }
        let header = if narrative { "Relevant edges:" } else { "Edges:" };
        let mut out = if lines.is_empty() { format!("{header} none") } else { format!("{header}\n{}", lines.join("\n")) };
        if !background.is_empty() {
            out.push_str("\n\nContextual background:\n");
            out.push_str(&background.join("\n"));
        }
        out
    }

    fn question(&self, inst: &TaskInstance) -> String {
        let (s, t) = inst.endpoints.unwrap_or((0, 0));
        match inst.task {
            TaskKind::Connectivity => format!(
                "Question: Is there a path between {} and {} in this network?",
                self.labelled(s),
                self.labelled(t)
            ),
            TaskKind::CycleDetection => "Question: Is there a cycle in this network?".to_string(),
            TaskKind::TopologicalSort => {
                "Question: What is a topological order of the characters in this network? Answer with their node ids."
                    .to_string()
            }
            TaskKind::ShortestPath => format!(
                "Question: What is the shortest path from {} to {}, and what is its total weight?",
                self.labelled(s),
                self.labelled(t)
            ),
        }
    }
}

fn exemplar_block(e: &TaskInstance, reasoning: bool) -> String {
    let answer = if reasoning { format!("{} {}", walkthrough(e), oracle_answer(e)) } else { oracle_answer(e) };
    format!("{}\n{}\nAnswer: {answer}", numeric_graph(&e.graph, e.task), numeric_question(e))
}

/// `count` small generated instances for few-shot and chain-of-thought prompts.
pub fn exemplar_instances(task: TaskKind, count: usize, seed: u64) -> Vec<TaskInstance> {
    (0..count as u64)
        .map(|i| {
            let mut inst = generate_instance(task, GeneratorParams::new(5, 0.4, (1, 5)), seed.wrapping_add(i))
                .expect("fixed generator parameters are valid");
            inst.id = format!("exemplar-{}-{i}", task.dir_name());
            inst
        })
        .collect()
}

fn bfs_path(g: &Graph, s: NodeId, t: NodeId) -> Option<Vec<NodeId>> {
    let mut prev = std::collections::BTreeMap::new();
    let mut queue = VecDeque::from([s]);
    let mut seen = BTreeSet::from([s]);
    while let Some(u) = queue.pop_front() {
        if u == t {
            let mut path = vec![t];
            while let Some(&p) = prev.get(path.last().expect("non-empty")) {
                path.push(p);
            }
            path.reverse();
            return Some(path);
        }
        for (v, _) in g.neighbors(u) {
            if seen.insert(v) {
                prev.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    None
}

fn reachable(g: &Graph, s: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for (v, _) in g.neighbors(u) {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen
}

fn ids(nodes: impl IntoIterator<Item = NodeId>, sep: &str) -> String {
    nodes.into_iter().map(|n| n.to_string()).collect::<Vec<_>>().join(sep)
}

/// First cycle closed while adding edges in canonical order, as a closed walk.
fn find_cycle(g: &Graph) -> Option<Vec<NodeId>> {
    let mut forest = Graph::with_nodes(false, g.nodes().iter().copied());
    for e in g.edges() {
        if let Some(mut path) = bfs_path(&forest, e.v, e.u) {
            path.push(e.v);
            return Some(path);
        }
        forest.add_edge(e.u, e.v, e.weight).expect("fresh edge");
    }
    None
}

/// Step-by-step reasoning that ends just before the final answer.
pub fn walkthrough(inst: &TaskInstance) -> String {
    let g = &inst.graph;
    let (s, t) = inst.endpoints.unwrap_or((0, 0));
    match &inst.truth {
        GroundTruth::Connected { value: true } => {
            let path = bfs_path(g, s, t).expect("connected");
            if path.len() == 1 {
                format!("Node {s} and node {t} are the same node.")
            } else {
                let steps: Vec<String> = path.windows(2).map(|w| format!("node {} links to node {}", w[0], w[1])).collect();
                format!("Starting from node {s}, {}. So {} joins them.", steps.join(", "), ids(path, " -> "))
            }
        }
        GroundTruth::Connected { value: false } => format!(
            "From node {s} we can reach nodes {}. Node {t} is not among them.",
            ids(reachable(g, s), ", ")
        ),
        GroundTruth::HasCycle { value: true } => {
            let cycle = find_cycle(g).expect("cyclic");
            format!(
                "Following the edges {} returns to node {} without reusing an edge.",
                ids(cycle.iter().copied(), " - "),
                cycle[0]
            )
        }
        GroundTruth::HasCycle { value: false } => {
            let mut left: BTreeSet<NodeId> = g.nodes().clone();
            let mut parts = 0;
            while let Some(&n) = left.iter().next() {
                for m in reachable(g, n) {
                    left.remove(&m);
                }
                parts += 1;
            }
            let (n, m) = (g.node_count(), g.edge_count());
            format!(
                "The graph has {n} nodes, {m} edges and {parts} connected part(s). A graph like this without a cycle has exactly {n} - {parts} = {} edges, and it has {m}.",
                n - parts
            )
        }
        GroundTruth::TopologicalOrder { witness } => {
            let sources: Vec<NodeId> =
                g.nodes().iter().copied().filter(|&v| g.edges().all(|e| e.v != v)).collect();
            format!(
                "Nodes with no incoming edges: {}. Repeatedly taking a node whose incoming edges are all used up gives {}.",
                ids(sources, ", "),
                ids(witness.iter().copied(), ", ")
            )
        }
        GroundTruth::ShortestPath { optimum } => {
            let dists: Vec<String> = g
                .nodes()
                .iter()
                .filter_map(|&v| shortest_path(g, s, v).ok().map(|(_, w)| format!("node {v} = {}", format_rational(&w))))
                .collect();
            match optimum {
                Some(opt) => format!(
                    "Shortest distances from node {s}: {}. Following predecessors back from node {t} gives {}.",
                    dists.join(", "),
                    ids(opt.path.iter().copied(), " -> ")
                ),
                None => format!(
                    "Shortest distances from node {s}: {}. Node {t} never receives a distance.",
                    dists.join(", ")
                ),
            }
        }
    }
}
