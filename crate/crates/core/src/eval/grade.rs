use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::extract::ParsedAnswer;
use super::EvalError;
use crate::context::PromptStrategy;
use crate::matcher::NodeMapping;
use crate::oracles::validate_toposort;
use crate::task::{GroundTruth, TaskInstance, TaskKind};

/// Correctness flags for one answer. For tasks other than shortest path all
/// four flags are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub correct: bool,
    pub path_ok: bool,
    pub weight_ok: bool,
    pub both_ok: bool,
}

impl Verdict {
    fn single(ok: bool) -> Self {
        Verdict { correct: ok, path_ok: ok, weight_ok: ok, both_ok: ok }
    }

    fn split(path_ok: bool, weight_ok: bool) -> Self {
        let both_ok = path_ok && weight_ok;
        Verdict { correct: both_ok, path_ok, weight_ok, both_ok }
    }

    pub const WRONG: Verdict = Verdict { correct: false, path_ok: false, weight_ok: false, both_ok: false };
}

/// Grades `answer` against the instance's oracle.
///
/// A shortest-path answer earns `path_ok` when it is a valid s-t path whose
/// recomputed weight is optimal, and `weight_ok` when its stated weight is the
/// optimum. Unreachable shortest-path queries are correct exactly when the
/// answer asserts that no path exists.
pub fn grade(inst: &TaskInstance, answer: &ParsedAnswer) -> Verdict {
    match (&inst.truth, answer) {
        (GroundTruth::Connected { value }, ParsedAnswer::Boolean { value: said })
        | (GroundTruth::HasCycle { value }, ParsedAnswer::Boolean { value: said }) => Verdict::single(value == said),
        (GroundTruth::TopologicalOrder { .. }, ParsedAnswer::Order { nodes }) => {
            Verdict::single(validate_toposort(&inst.graph, nodes))
        }
        (GroundTruth::ShortestPath { optimum: None }, ParsedAnswer::Boolean { value: false }) => Verdict::single(true),
        (GroundTruth::ShortestPath { optimum: Some(opt) }, ParsedAnswer::Path { nodes, weight }) => {
            let (s, t) = inst.endpoints.expect("shortest-path instances have endpoints");
            let path_ok = nodes.first() == Some(&s)
                && nodes.last() == Some(&t)
                && inst.graph.path_weight(nodes) == Some(opt.weight);
            Verdict::split(path_ok, *weight == Some(opt.weight))
        }
        _ => Verdict::WRONG,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeResult {
    pub instance_id: String,
    pub task: TaskKind,
    pub strategy: PromptStrategy,
    pub model: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub answer: ParsedAnswer,
    /// Raw completion text; absent when the instance failed before a reply.
    pub response: Option<String>,
    pub mapping: Option<NodeMapping>,
    pub from_cache: bool,
    pub error: Option<String>,
    pub latency_ms: u64,
}

/// Percentage with two decimals, stored as hundredths of a percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percent(pub u64);

impl Percent {
    /// `100 * correct / count`, rounded half up to two decimals.
    pub fn from_counts(correct: usize, count: usize) -> Self {
        assert!(count > 0 && correct <= count);
        let (c, n) = (correct as u64, count as u64);
        Percent((20_000 * c + n) / (2 * n))
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let bad = || serde::de::Error::custom(format!("bad percentage `{text}`"));
        let (whole, frac) = text.split_once('.').ok_or_else(bad)?;
        if frac.len() != 2 {
            return Err(bad());
        }
        let whole: u64 = whole.parse().map_err(|_| bad())?;
        let frac: u64 = frac.parse().map_err(|_| bad())?;
        Ok(Percent(whole * 100 + frac))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathColumns {
    pub path_correct: usize,
    pub weight_correct: usize,
    pub both_correct: usize,
    pub path: Percent,
    pub weight: Percent,
    pub both: Percent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub task: TaskKind,
    pub strategy: PromptStrategy,
    pub model: String,
    pub count: usize,
    pub correct: usize,
    pub accuracy: Percent,
    /// Path / Weight / Both split, shortest path only.
    pub shortest_path: Option<PathColumns>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    pub fn row(&self, task: TaskKind, strategy: PromptStrategy, model: &str) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.task == task && r.strategy == strategy && r.model == model)
    }

    pub fn total_count(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }
}

/// Per (task, strategy, model) accuracies.
pub fn aggregate(results: &[GradeResult]) -> Result<AccuracyTable, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let mut groups: BTreeMap<(TaskKind, PromptStrategy, &str), Vec<&GradeResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.task, r.strategy, r.model.as_str())).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((task, strategy, model), rs)| {
            let count = rs.len();
            let tally = |f: fn(&Verdict) -> bool| rs.iter().filter(|r| f(&r.verdict)).count();
            let correct = tally(|v| v.correct);
            let shortest_path = (task == TaskKind::ShortestPath).then(|| {
                let (p, w, b) = (tally(|v| v.path_ok), tally(|v| v.weight_ok), tally(|v| v.both_ok));
                PathColumns {
                    path_correct: p,
                    weight_correct: w,
                    both_correct: b,
                    path: Percent::from_counts(p, count),
                    weight: Percent::from_counts(w, count),
                    both: Percent::from_counts(b, count),
                }
            });
            AccuracyRow {
                task,
                strategy,
                model: model.to_string(),
                count,
                correct,
                accuracy: Percent::from_counts(correct, count),
                shortest_path,
            }
        })
        .collect();
    Ok(AccuracyTable { rows })
}
