use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{ContextError, PromptStrategy};
use crate::reference::{Character, Relation};
use crate::task::TaskKind;

pub(crate) const CONSOLIDATE: &str = include_str!("../../templates/context/consolidate.txt");
pub(crate) const DRAFT_REQUEST: &str = include_str!("../../templates/context/draft_request.txt");

macro_rules! strategy_templates {
    ($task:literal) => {
        [
            include_str!(concat!("../../templates/", $task, "/zero_shot.txt")),
            include_str!(concat!("../../templates/", $task, "/few_shot.txt")),
            include_str!(concat!("../../templates/", $task, "/zero_cot.txt")),
            include_str!(concat!("../../templates/", $task, "/cot.txt")),
            include_str!(concat!("../../templates/", $task, "/algorithm.txt")),
            include_str!(concat!("../../templates/", $task, "/instruct.txt")),
            include_str!(concat!("../../templates/", $task, "/noun_based.txt")),
            include_str!(concat!("../../templates/", $task, "/got_random.txt")),
            include_str!(concat!("../../templates/", $task, "/got_subgraph.txt")),
        ]
    };
}

const BUILTIN: [[&str; 9]; 4] = [
    strategy_templates!("connectivity"),
    strategy_templates!("cycle"),
    strategy_templates!("topology"),
    strategy_templates!("shortest_path"),
];

/// Prompt templates, one per (task, strategy). Files live at
/// `<root>/<task dir>/<strategy slug>.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    entries: BTreeMap<(TaskKind, PromptStrategy), String>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let mut entries = BTreeMap::new();
        for (ti, task) in TaskKind::ALL.into_iter().enumerate() {
            for (si, strategy) in PromptStrategy::ALL.into_iter().enumerate() {
                entries.insert((task, strategy), BUILTIN[ti][si].to_string());
            }
        }
        TemplateSet { entries }
    }

    /// Built-in templates overridden by whichever files exist under `root`.
    pub fn load_dir(root: impl AsRef<Path>) -> Result<Self, ContextError> {
        let root = root.as_ref();
        if !root.is_dir() {
            return Err(ContextError::Template(root.display().to_string(), "not a directory".into()));
        }
        let mut set = Self::builtin();
        for task in TaskKind::ALL {
            for strategy in PromptStrategy::ALL {
                let path = root.join(task.dir_name()).join(format!("{}.txt", strategy.slug()));
                if path.is_file() {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| ContextError::Template(path.display().to_string(), e.to_string()))?;
                    set.entries.insert((task, strategy), text);
                }
            }
        }
        Ok(set)
    }

    pub fn get(&self, task: TaskKind, strategy: PromptStrategy) -> &str {
        &self.entries[&(task, strategy)]
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Substitutes `{{name}}` placeholders. A line consisting of a single
/// placeholder whose value is empty is removed, runs of blank lines collapse
/// to one, and the result ends with exactly one newline.
pub(crate) fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut lines: Vec<String> = Vec::new();
    for line in template.lines() {
        let trimmed = line.trim();
        if let Some((_, value)) = vars.iter().find(|(k, _)| trimmed == format!("{{{{{k}}}}}")) {
            if value.is_empty() {
                continue;
            }
        }
        let mut out = line.to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        lines.push(out);
    }
    let mut text = String::new();
    let mut blank = true;
    for line in lines.iter().flat_map(|l| l.split('\n')) {
        let is_blank = line.trim().is_empty();
        if is_blank && blank {
            continue;
        }
        text.push_str(line.trim_end());
        text.push('\n');
        blank = is_blank;
    }
    while text.ends_with("\n\n") {
        text.pop();
    }
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructionStep {
    CharacterIdentification,
    RelationshipExtraction,
    EdgeWeighting,
    GraphStructuring,
}

impl ConstructionStep {
    pub const ALL: [ConstructionStep; 4] = [
        ConstructionStep::CharacterIdentification,
        ConstructionStep::RelationshipExtraction,
        ConstructionStep::EdgeWeighting,
        ConstructionStep::GraphStructuring,
    ];

    fn template(self) -> &'static str {
        match self {
            ConstructionStep::CharacterIdentification => {
                include_str!("../../templates/construction/character_identification.txt")
            }
            ConstructionStep::RelationshipExtraction => {
                include_str!("../../templates/construction/relationship_extraction.txt")
            }
            ConstructionStep::EdgeWeighting => include_str!("../../templates/construction/edge_weighting.txt"),
            ConstructionStep::GraphStructuring => include_str!("../../templates/construction/graph_structuring.txt"),
        }
    }
}

/// Prompt for one step of building a reference-graph file with a model. The
/// reply is reviewed and committed by hand; nothing here parses it.
pub fn construction_prompt(
    step: ConstructionStep,
    title: &str,
    max_scale: i64,
    characters: &[Character],
    relations: &[Relation],
) -> String {
    let chars: Vec<String> = characters
        .iter()
        .map(|c| {
            if c.description.is_empty() {
                format!("- {}: {}", c.id, c.name)
            } else {
                format!("- {}: {} ({})", c.id, c.name, c.description)
            }
        })
        .collect();
    let rels: Vec<String> = relations
        .iter()
        .map(|r| match step {
            ConstructionStep::GraphStructuring => format!("- {}, {}, weight {}: {}", r.u, r.v, r.weight, r.description),
            _ => format!("- {}, {}: {}", r.u, r.v, r.description),
        })
        .collect();
    let scale = max_scale.to_string();
    fill(
        step.template(),
        &[("title", title), ("max_scale", &scale), ("characters", &chars.join("\n")), ("relations", &rels.join("\n"))],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::builtin_small;

    #[test]
    fn empty_placeholder_lines_vanish() {
        let t = "Intro\n\n{{context}}\n\n{{graph}}\nQ {{question}}\n";
        let out = fill(t, &[("context", ""), ("graph", "Graph: (0,1)"), ("question", "")]);
        assert_eq!(out, "Intro\n\nGraph: (0,1)\nQ\n");
    }

    #[test]
    fn every_builtin_template_exists() {
        let set = TemplateSet::builtin();
        for task in TaskKind::ALL {
            for s in PromptStrategy::ALL {
                let t = set.get(task, s);
                assert!(t.contains("{{question}}"), "{task}/{s}");
                assert_eq!(t.contains("{{exemplars}}"), s.needs_exemplars(), "{task}/{s}");
                assert_eq!(t.contains("{{mapping}}"), s.uses_names(), "{task}/{s}");
            }
        }
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("cycle")).unwrap();
        std::fs::write(dir.path().join("cycle/zero_shot.txt"), "{{graph}}\n{{question}}\n").unwrap();
        let set = TemplateSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.get(TaskKind::CycleDetection, PromptStrategy::ZeroShot), "{{graph}}\n{{question}}\n");
        assert_eq!(
            set.get(TaskKind::Connectivity, PromptStrategy::ZeroShot),
            TemplateSet::builtin().get(TaskKind::Connectivity, PromptStrategy::ZeroShot)
        );
        assert!(TemplateSet::load_dir(dir.path().join("missing")).is_err());
    }

    #[test]
    fn construction_prompts_fill_everything() {
        let r = builtin_small();
        for step in ConstructionStep::ALL {
            let p = construction_prompt(step, "Game of Thrones", 5, &r.characters, &r.relations);
            assert!(!p.contains("{{"), "{step:?}");
        }
        let p = construction_prompt(ConstructionStep::RelationshipExtraction, "X", 5, &r.characters, &[]);
        assert!(p.contains("- 0: Jon Snow"));
    }
}
