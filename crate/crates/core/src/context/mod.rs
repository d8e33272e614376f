//! Reference-graph name assignment, task-context consolidation and prompt
//! rendering for the nine prompting strategies.

mod render;
mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gateway::{cached_complete, CompletionClient, CompletionRequest, GatewayError, ResponseCache};
use crate::graph::{Graph, NodeId};
use crate::matcher::{best_subgraph, MatchError, MatchResult, NodeMapping};
use crate::task::TaskKind;

pub use crate::reference::{load_reference_graph, ReferenceGraph};
pub use render::{exemplar_instances, render_prompt, render_prompt_with, walkthrough, PromptInputs, RenderedPrompt};
pub use templates::{construction_prompt, ConstructionStep, TemplateSet};

#[derive(Debug, thiserror::Error)]
pub enum ContextError {
    #[error("strategy {0} needs a node mapping covering every query node")]
    MissingMapping(PromptStrategy),
    #[error("strategy {0} needs at least one exemplar")]
    MissingExemplars(PromptStrategy),
    #[error("strategy {0} needs a reference graph")]
    MissingReference(PromptStrategy),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("query has {needed} nodes but the reference graph has only {available} characters")]
    TooFewCharacters { needed: usize, available: usize },
    #[error("mapping sends node {node} to character {character}, which is not in the reference graph")]
    UnknownCharacter { node: NodeId, character: NodeId },
    #[error("no drafts to consolidate")]
    NoDrafts,
    #[error("template {0}: {1}")]
    Template(String, String),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    ZeroShot,
    FewShot,
    ZeroCot,
    Cot,
    Algorithm,
    Instruct,
    NounBased,
    GotRandom,
    GotSubgraph,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 9] = [
        PromptStrategy::ZeroShot,
        PromptStrategy::FewShot,
        PromptStrategy::ZeroCot,
        PromptStrategy::Cot,
        PromptStrategy::Algorithm,
        PromptStrategy::Instruct,
        PromptStrategy::NounBased,
        PromptStrategy::GotRandom,
        PromptStrategy::GotSubgraph,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            PromptStrategy::ZeroShot => "zero_shot",
            PromptStrategy::FewShot => "few_shot",
            PromptStrategy::ZeroCot => "zero_cot",
            PromptStrategy::Cot => "cot",
            PromptStrategy::Algorithm => "algorithm",
            PromptStrategy::Instruct => "instruct",
            PromptStrategy::NounBased => "noun_based",
            PromptStrategy::GotRandom => "got_random",
            PromptStrategy::GotSubgraph => "got_subgraph",
        }
    }

    /// Row label in accuracy tables.
    pub fn label(self) -> &'static str {
        match self {
            PromptStrategy::ZeroShot => "Zero-shot",
            PromptStrategy::FewShot => "Few-shot",
            PromptStrategy::ZeroCot => "Zero-CoT",
            PromptStrategy::Cot => "CoT",
            PromptStrategy::Algorithm => "Algorithm",
            PromptStrategy::Instruct => "Instruct",
            PromptStrategy::NounBased => "Noun-based",
            PromptStrategy::GotRandom => "GOT Random",
            PromptStrategy::GotSubgraph => "GOT Subgraph",
        }
    }

    /// Strategies whose prompts replace node ids with character names.
    pub fn uses_names(self) -> bool {
        matches!(self, PromptStrategy::NounBased | PromptStrategy::GotRandom | PromptStrategy::GotSubgraph)
    }

    pub fn needs_reference(self) -> bool {
        matches!(self, PromptStrategy::GotRandom | PromptStrategy::GotSubgraph)
    }

    pub fn needs_exemplars(self) -> bool {
        matches!(self, PromptStrategy::FewShot | PromptStrategy::Cot)
    }

    /// Strategies that embed a consolidated task context.
    pub fn uses_task_context(self) -> bool {
        self.needs_reference()
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for PromptStrategy {
    type Err = ContextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        let found = match key.as_str() {
            "zeroshot" => PromptStrategy::ZeroShot,
            "fewshot" => PromptStrategy::FewShot,
            "zerocot" | "zeroshotcot" => PromptStrategy::ZeroCot,
            "cot" | "chainofthought" => PromptStrategy::Cot,
            "algorithm" => PromptStrategy::Algorithm,
            "instruct" | "instruction" => PromptStrategy::Instruct,
            "nounbased" | "noun" => PromptStrategy::NounBased,
            "gotrandom" => PromptStrategy::GotRandom,
            "gotsubgraph" => PromptStrategy::GotSubgraph,
            _ => return Err(ContextError::UnknownStrategy(s.to_string())),
        };
        Ok(found)
    }
}

/// Task-level context block, built once per task and shared by every prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskContext {
    pub task: TaskKind,
    pub text: String,
    /// `(label, draft text)` for every draft that went into `text`.
    pub provenance: Vec<(String, String)>,
}

/// Uniform injective assignment of characters to query nodes.
pub fn assign_random_mapping(gq: &Graph, reference: &ReferenceGraph, seed: u64) -> Result<NodeMapping, ContextError> {
    let needed = gq.node_count();
    if needed > reference.len() {
        return Err(ContextError::TooFewCharacters { needed, available: reference.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, reference.len(), needed);
    let map: BTreeMap<NodeId, NodeId> = gq.nodes().iter().copied().zip(picks.iter().map(|c| c as NodeId)).collect();
    Ok(NodeMapping::new(map)?)
}

/// Name assignment through the approximate subgraph matcher. Directed queries
/// are matched on their undirected skeleton.
pub fn assign_matched_mapping(
    gq: &Graph,
    reference: &ReferenceGraph,
    cap: usize,
    seed: u64,
) -> Result<(NodeMapping, MatchResult), ContextError> {
    let result = if gq.is_directed() {
        best_subgraph(&gq.undirected_skeleton(), reference, cap, seed)?
    } else {
        best_subgraph(gq, reference, cap, seed)?
    };
    Ok((result.mapping.clone(), result))
}

/// Names for the query nodes under `mapping`, as `(name, query node)` pairs.
pub fn name_table(mapping: &NodeMapping, reference: &ReferenceGraph) -> Vec<(String, NodeId)> {
    mapping
        .iter()
        .filter_map(|(q, c)| reference.name(c).map(|name| (name.to_string(), q)))
        .collect()
}

const DRAFTS_JSON: &str = include_str!("../../data/context/drafts.json");

#[derive(Deserialize)]
struct Draft {
    label: String,
    text: String,
}

/// The drafts shipped with the crate for `task`.
pub fn builtin_drafts(task: TaskKind) -> Vec<(String, String)> {
    let all: BTreeMap<String, Vec<Draft>> = serde_json::from_str(DRAFTS_JSON).expect("bundled drafts parse");
    all.get(task.dir_name())
        .map(|ds| ds.iter().map(|d| (d.label.clone(), d.text.clone())).collect())
        .unwrap_or_default()
}

/// One-sentence description of what a task asks.
pub fn task_summary(task: TaskKind) -> &'static str {
    match task {
        TaskKind::Connectivity => "decide whether a chain of edges links the two named nodes.",
        TaskKind::CycleDetection => "decide whether some edges form a closed loop.",
        TaskKind::TopologicalSort => "order all nodes so that every edge points forward.",
        TaskKind::ShortestPath => "find the cheapest route between two nodes and its total weight.",
    }
}

const DRAFT_OPEN: &str = "<<<draft";
const DRAFT_CLOSE: &str = "<<<end draft>>>";

static CONSOLIDATION_HEAD: Lazy<Regex> = Lazy::new(|| Regex::new(r"^Consolidate task context: (.+)\n").unwrap());
static DRAFT_BLOCK: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?s)<<<draft ([^>\n]*)>>>\n(.*?)\n<<<end draft>>>").unwrap());
static DRAFT_REQUEST_HEAD: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^Draft task context: (.+)\nSource: (.+)\n").unwrap());

/// The consolidation request sent for `drafts`.
pub fn consolidation_prompt(task: TaskKind, drafts: &[(String, String)]) -> String {
    let blocks: Vec<String> = drafts
        .iter()
        .map(|(label, text)| format!("{DRAFT_OPEN} {label}>>>\n{}\n{DRAFT_CLOSE}", text.trim()))
        .collect();
    templates::fill(templates::CONSOLIDATE, &[("task", task.dir_name()), ("drafts", &blocks.join("\n\n"))])
}

/// Inverse of [`consolidation_prompt`]; `None` for any other text.
pub fn parse_consolidation_prompt(prompt: &str) -> Option<Vec<(String, String)>> {
    CONSOLIDATION_HEAD.captures(prompt)?;
    let drafts: Vec<(String, String)> =
        DRAFT_BLOCK.captures_iter(prompt).map(|c| (c[1].to_string(), c[2].to_string())).collect();
    (!drafts.is_empty()).then_some(drafts)
}

/// Drafts concatenated under a header, in order.
pub fn join_drafts(drafts: &[(String, String)]) -> String {
    let mut out = String::from("Consolidated task context:");
    for (_, text) in drafts {
        out.push('\n');
        out.push_str(text.trim());
    }
    out
}

/// Request asking a model for one context draft.
pub fn draft_request_prompt(task: TaskKind, source: &str) -> String {
    templates::fill(templates::DRAFT_REQUEST, &[("task", task.dir_name()), ("source", source)])
}

/// Inverse of [`draft_request_prompt`].
pub fn parse_draft_request(prompt: &str) -> Option<(TaskKind, String)> {
    let caps = DRAFT_REQUEST_HEAD.captures(prompt)?;
    let task = caps[1].parse().ok()?;
    Some((task, caps[2].to_string()))
}

/// Merges drafts into one [`TaskContext`]. One draft passes through untouched;
/// two or more cost exactly one consolidator call.
pub fn consolidate_task_context(
    task: TaskKind,
    drafts: &[(String, String)],
    consolidator: &dyn CompletionClient,
    model: &str,
) -> Result<TaskContext, ContextError> {
    consolidate_task_context_cached(task, drafts, consolidator, model, None)
}

/// [`consolidate_task_context`] with the consolidation request answered from
/// `cache` when possible.
pub fn consolidate_task_context_cached(
    task: TaskKind,
    drafts: &[(String, String)],
    consolidator: &dyn CompletionClient,
    model: &str,
    cache: Option<&ResponseCache>,
) -> Result<TaskContext, ContextError> {
    let text = match drafts {
        [] => return Err(ContextError::NoDrafts),
        [(_, only)] => only.trim().to_string(),
        _ => {
            let req = CompletionRequest::new(model, consolidation_prompt(task, drafts));
            cached_complete(cache, consolidator, &req)?.text.trim().to_string()
        }
    };
    Ok(TaskContext { task, text, provenance: drafts.to_vec() })
}
