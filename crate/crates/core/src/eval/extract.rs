use once_cell::sync::Lazy;
use regex::{NoExpand, Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::graph::{parse_rational, rational_str, NodeId, Rational};
use crate::task::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedAnswer {
    Boolean { value: bool },
    Order { nodes: Vec<NodeId> },
    Path {
        nodes: Vec<NodeId>,
        #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
        weight: Option<Rational>,
    },
    Unparsed { raw: String },
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => rational_str::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "rational_str")] Rational);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

static SENTENCE_SPLIT: Lazy<Regex> = Lazy::new(|| Regex::new(r"[.!?;\n]+").unwrap());
static YES: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)\byes\b|\bthere (?:is|exists) (?:a|at least one) (?:path|cycle|route)\b|\b(?:is|are) connected\b|\b(?:contains|has) (?:a|at least one) cycle\b|\bis reachable\b|\bcan (?:reach|be reached)\b",
    )
    .unwrap()
});
static NO: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)\bno\b|\bnot connected\b|\bdisconnected\b|\b(?:does not|doesn't) (?:contain|have|exist)\b|\bnot reachable\b|\bunreachable\b|\bcannot (?:reach|be reached)\b|\bacyclic\b",
    )
    .unwrap()
});
static NO_PATH: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\bno (?:path|route)\b|\bunreachable\b|\bnot reachable\b|\bnot connected\b|\bdisconnected\b|\bcannot (?:reach|be reached)\b|\bdoes not exist\b").unwrap()
});
static WEIGHT_CUE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?:weight|cost|length|distance)\b[^0-9\n]{0,24}?(\d+(?:\.\d+)?(?:/\d+)?)").unwrap()
});
static ID_ECHO: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)(\d+)\s*\(\s*(node\s+)?(\d+)\s*\)").unwrap());
static NODE_WORD: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)\bnodes?\s+").unwrap());
static SEQUENCE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\d+(?:(?:\s*(?:->|→|,|-|–|—)\s*|[ \t]+)\d+)*").unwrap());
static INT: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d+").unwrap());

fn polarity(sentence: &str) -> Option<bool> {
    match (YES.is_match(sentence), NO.is_match(sentence)) {
        (true, false) => Some(true),
        (false, true) => Some(false),
        _ => None,
    }
}

/// Polarity of the last sentence that asserts exactly one of yes / no.
fn last_boolean(text: &str) -> Option<bool> {
    SENTENCE_SPLIT.split(text).filter_map(polarity).last()
}

/// Replaces character names by their node ids, longest name first, then
/// collapses echoes such as `0 (node 0)` to the id in parentheses.
fn reverse_map(text: &str, names: &[(String, NodeId)]) -> String {
    let mut sorted: Vec<&(String, NodeId)> = names.iter().filter(|(n, _)| !n.trim().is_empty()).collect();
    sorted.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    let mut out = text.to_string();
    for (name, id) in sorted {
        let re = RegexBuilder::new(&format!(r"\b{}\b", regex::escape(name)))
            .case_insensitive(true)
            .build()
            .expect("escaped name");
        out = re.replace_all(&out, NoExpand(&id.to_string())).into_owned();
    }
    ID_ECHO
        .replace_all(&out, |c: &regex::Captures<'_>| {
            if c[1] == c[3] || c.get(2).is_some() {
                c[3].to_string()
            } else {
                c[0].to_string()
            }
        })
        .into_owned()
}

/// The last run of at least two delimited integers, or failing that the last
/// lone integer.
fn last_sequence(text: &str) -> Option<Vec<NodeId>> {
    let runs: Vec<Vec<NodeId>> = SEQUENCE
        .find_iter(text)
        .map(|m| INT.find_iter(m.as_str()).filter_map(|n| n.as_str().parse().ok()).collect::<Vec<NodeId>>())
        .filter(|r| !r.is_empty())
        .collect();
    runs.iter().rev().find(|r| r.len() >= 2).or(runs.last()).cloned()
}

/// Rule-based answer extraction; never fails. `names` maps character names
/// used in name-bearing prompts back to query node ids.
pub fn extract_answer(task: TaskKind, text: &str, names: &[(String, NodeId)]) -> ParsedAnswer {
    let unparsed = || ParsedAnswer::Unparsed { raw: text.to_string() };
    match task {
        TaskKind::Connectivity | TaskKind::CycleDetection => match last_boolean(text) {
            Some(value) => ParsedAnswer::Boolean { value },
            None => unparsed(),
        },
        TaskKind::TopologicalSort | TaskKind::ShortestPath => {
            let mapped = reverse_map(text, names);
            let weight = WEIGHT_CUE.captures_iter(&mapped).last().and_then(|c| parse_rational(&c[1]));
            let stripped = WEIGHT_CUE.replace_all(&mapped, " ");
            let stripped = NODE_WORD.replace_all(&stripped, "");
            let seq = last_sequence(&stripped);
            if task == TaskKind::TopologicalSort {
                return match seq {
                    Some(nodes) => ParsedAnswer::Order { nodes },
                    None => unparsed(),
                };
            }
            match seq {
                Some(nodes) if nodes.len() >= 2 || !NO_PATH.is_match(text) => ParsedAnswer::Path { nodes, weight },
                _ if NO_PATH.is_match(text) => ParsedAnswer::Boolean { value: false },
                _ => unparsed(),
            }
        }
    }
}
