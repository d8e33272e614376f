//! Narrative reference graph: named characters with weighted relationships.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId, Rational, Weight};

pub const DEFAULT_MAX_SCALE: i64 = 5;

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error("cannot read reference graph {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("reference graph parse error: {0}")]
    Parse(String),
    #[error("relation ({u},{v}) has weight {weight} outside [1, {max_scale}]")]
    ScaleViolation { u: NodeId, v: NodeId, weight: i64, max_scale: i64 },
    #[error("duplicate character name `{0}`")]
    DuplicateName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub id: NodeId,
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: i64,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReferenceFile {
    #[serde(default)]
    title: Option<String>,
    #[serde(default = "default_scale")]
    max_scale: i64,
    characters: Vec<Character>,
    relations: Vec<Relation>,
}

fn default_scale() -> i64 {
    DEFAULT_MAX_SCALE
}

/// Validated reference graph; `skeleton` mirrors `relations` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceGraph {
    pub title: Option<String>,
    pub max_scale: i64,
    pub characters: Vec<Character>,
    pub relations: Vec<Relation>,
    #[serde(skip)]
    skeleton: Graph,
    #[serde(skip)]
    relation_index: BTreeMap<(NodeId, NodeId), usize>,
}

impl ReferenceGraph {
    pub fn new(
        title: Option<String>,
        max_scale: i64,
        characters: Vec<Character>,
        relations: Vec<Relation>,
    ) -> Result<Self, ReferenceError> {
        if max_scale < 1 {
            return Err(ReferenceError::Parse(format!("max_scale must be >= 1, got {max_scale}")));
        }
        let mut characters = characters;
        characters.sort_by_key(|c| c.id);
        let mut names = BTreeSet::new();
        for (expected, c) in characters.iter().enumerate() {
            if c.id as usize != expected {
                return Err(ReferenceError::Parse(format!(
                    "character ids must be dense 0..{}, found id {}",
                    characters.len(),
                    c.id
                )));
            }
            if c.name.trim().is_empty() {
                return Err(ReferenceError::Parse(format!("character {} has an empty name", c.id)));
            }
            if !names.insert(c.name.as_str()) {
                return Err(ReferenceError::DuplicateName(c.name.clone()));
            }
        }
        let mut skeleton = Graph::with_nodes(false, 0..characters.len() as NodeId);
        let mut relation_index = BTreeMap::new();
        for (i, r) in relations.iter().enumerate() {
            if !(1..=max_scale).contains(&r.weight) {
                return Err(ReferenceError::ScaleViolation { u: r.u, v: r.v, weight: r.weight, max_scale });
            }
            for end in [r.u, r.v] {
                if !skeleton.contains_node(end) {
                    return Err(ReferenceError::Parse(format!("relation ({},{}) names unknown character {end}", r.u, r.v)));
                }
            }
            let weight = Weight::from_int(r.weight).expect("checked positive");
            skeleton
                .add_edge(r.u, r.v, weight)
                .map_err(|e| ReferenceError::Parse(format!("relation ({},{}): {e}", r.u, r.v)))?;
            relation_index.insert((r.u.min(r.v), r.u.max(r.v)), i);
        }
        Ok(ReferenceGraph { title, max_scale, characters, relations, skeleton, relation_index })
    }

    pub fn from_json(text: &str) -> Result<Self, ReferenceError> {
        let file: ReferenceFile = serde_json::from_str(text).map_err(|e| ReferenceError::Parse(e.to_string()))?;
        ReferenceGraph::new(file.title, file.max_scale, file.characters, file.relations)
    }

    pub fn to_json(&self) -> String {
        let file = ReferenceFile {
            title: self.title.clone(),
            max_scale: self.max_scale,
            characters: self.characters.clone(),
            relations: self.relations.clone(),
        };
        serde_json::to_string_pretty(&file).expect("reference graph serializes")
    }

    pub fn skeleton(&self) -> &Graph {
        &self.skeleton
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn name(&self, id: NodeId) -> Option<&str> {
        self.characters.get(id as usize).map(|c| c.name.as_str())
    }

    pub fn relation(&self, a: NodeId, b: NodeId) -> Option<&Relation> {
        self.relation_index.get(&(a.min(b), a.max(b))).map(|&i| &self.relations[i])
    }

    /// Penalty charged for a query edge with no counterpart: the declared scale maximum.
    pub fn max_edge_weight(&self) -> Rational {
        Rational::from_integer(self.max_scale)
    }
}

/// Reads and validates a reference-graph JSON file.
pub fn load_reference_graph(path: impl AsRef<Path>) -> Result<ReferenceGraph, ReferenceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ReferenceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ReferenceGraph::from_json(&text)
}

/// The seven-character graph bundled with the crate.
pub fn builtin_small() -> ReferenceGraph {
    ReferenceGraph::from_json(include_str!("../data/reference/got_small.json")).expect("bundled graph is valid")
}

/// A larger bundled character graph for realistic query sizes.
pub fn builtin_extended() -> ReferenceGraph {
    ReferenceGraph::from_json(include_str!("../data/reference/got_extended.json")).expect("bundled graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::serialize_edge_list;

    #[test]
    fn small_graph_loads() {
        let r = builtin_small();
        assert_eq!(r.len(), 7);
        assert_eq!(r.relations.len(), 7);
        assert_eq!(
            serialize_edge_list(r.skeleton()),
            "(0,4,5) (1,4,2) (2,4,3) (2,5,5) (3,4) (3,6,4) (5,6,4)"
        );
        assert_eq!(r.name(4), Some("Tyrion Lannister"));
        assert_eq!(r.relation(4, 0).unwrap().weight, 5);
    }

    #[test]
    fn extended_graph_loads() {
        let r = builtin_extended();
        assert!(r.len() >= 20);
        assert!(crate::oracles::is_connected(r.skeleton(), 0, r.len() as NodeId - 1).unwrap());
    }

    #[test]
    fn rejects_scale_violation() {
        let text = r#"{"max_scale":5,"characters":[{"id":0,"name":"A"},{"id":1,"name":"B"}],
            "relations":[{"u":0,"v":1,"weight":9}]}"#;
        assert!(matches!(ReferenceGraph::from_json(text), Err(ReferenceError::ScaleViolation { weight: 9, .. })));
    }

    #[test]
    fn rejects_duplicate_names() {
        let text = r#"{"characters":[{"id":0,"name":"Jon Snow"},{"id":1,"name":"Jon Snow"}],"relations":[]}"#;
        assert!(matches!(ReferenceGraph::from_json(text), Err(ReferenceError::DuplicateName(n)) if n == "Jon Snow"));
    }

    #[test]
    fn rejects_bad_structure() {
        let sparse = r#"{"characters":[{"id":0,"name":"A"},{"id":2,"name":"B"}],"relations":[]}"#;
        assert!(matches!(ReferenceGraph::from_json(sparse), Err(ReferenceError::Parse(_))));
        let dup = r#"{"characters":[{"id":0,"name":"A"},{"id":1,"name":"B"}],
            "relations":[{"u":0,"v":1,"weight":2},{"u":1,"v":0,"weight":3}]}"#;
        assert!(matches!(ReferenceGraph::from_json(dup), Err(ReferenceError::Parse(_))));
        let looped = r#"{"characters":[{"id":0,"name":"A"}],"relations":[{"u":0,"v":0,"weight":2}]}"#;
        assert!(matches!(ReferenceGraph::from_json(looped), Err(ReferenceError::Parse(_))));
        assert!(matches!(ReferenceGraph::from_json("{"), Err(ReferenceError::Parse(_))));
    }

    #[test]
    fn json_round_trip() {
        let r = builtin_small();
        assert_eq!(ReferenceGraph::from_json(&r.to_json()).unwrap(), r);
    }
}
