//! Canonical natural-language answers derived from ground truth. Used by the
//! mock providers and by few-shot exemplars.

use crate::graph::{format_rational, NodeId};
use crate::task::{GroundTruth, TaskInstance};

fn join(nodes: &[NodeId], sep: &str) -> String {
    nodes.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

/// A correct answer phrased the way a cooperative model would.
pub fn oracle_answer(inst: &TaskInstance) -> String {
    let (s, t) = inst.endpoints.unwrap_or((0, 0));
    match &inst.truth {
        GroundTruth::Connected { value: true } => format!("Yes, there is a path between node {s} and node {t}."),
        GroundTruth::Connected { value: false } => format!("No, there is no path between node {s} and node {t}."),
        GroundTruth::HasCycle { value: true } => "Yes, there is a cycle in this graph.".to_string(),
        GroundTruth::HasCycle { value: false } => "No, there is no cycle in this graph.".to_string(),
        GroundTruth::TopologicalOrder { witness } => {
            format!("A valid topological order is: {}.", join(witness, ", "))
        }
        GroundTruth::ShortestPath { optimum: Some(opt) } => format!(
            "The shortest path is {} with total weight {}.",
            join(&opt.path, " -> "),
            format_rational(&opt.weight)
        ),
        GroundTruth::ShortestPath { optimum: None } => {
            format!("There is no path between node {s} and node {t}, so no shortest path exists.")
        }
    }
}

/// A fluent answer that is wrong under every grading rule.
pub fn adversarial_answer(inst: &TaskInstance) -> String {
    let (s, t) = inst.endpoints.unwrap_or((0, 0));
    let outside = inst.graph.id_bound();
    match &inst.truth {
        GroundTruth::Connected { value: true } => format!("No, there is no path between node {s} and node {t}."),
        GroundTruth::Connected { value: false } => format!("Yes, there is a path between node {s} and node {t}."),
        GroundTruth::HasCycle { value: true } => "No, there is no cycle in this graph.".to_string(),
        GroundTruth::HasCycle { value: false } => "Yes, there is a cycle in this graph.".to_string(),
        GroundTruth::TopologicalOrder { witness } => {
            // drops a node, so the sequence is never a permutation
            let mut order: Vec<NodeId> = witness.iter().rev().copied().collect();
            order.pop();
            if order.is_empty() {
                "A valid topological order cannot be given for this graph.".to_string()
            } else {
                format!("A valid topological order is: {}.", join(&order, ", "))
            }
        }
        GroundTruth::ShortestPath { optimum: Some(opt) } => format!(
            "The shortest path is {s} -> {outside} -> {t} with total weight {}.",
            format_rational(&(opt.weight + 1))
        ),
        GroundTruth::ShortestPath { optimum: None } => {
            format!("The shortest path is {s} -> {outside} -> {t} with total weight 1.")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;
    use crate::task::TaskKind;

    #[test]
    fn star_connectivity_answer() {
        let g = parse_edge_list("(0,4) (1,4) (2,4)", false, None).unwrap();
        let inst = TaskInstance::new("0", TaskKind::Connectivity, g, Some((0, 2)), "inline").unwrap();
        assert_eq!(oracle_answer(&inst), "Yes, there is a path between node 0 and node 2.");
        assert!(adversarial_answer(&inst).starts_with("No, there is no path"));
    }

    #[test]
    fn shortest_path_answer() {
        let g = parse_edge_list("(0,4,5) (1,4,2) (2,4,3) (3,4,1) (2,5,5) (5,6,4) (3,6,4)", false, None).unwrap();
        let inst = TaskInstance::new("0", TaskKind::ShortestPath, g, Some((0, 2)), "inline").unwrap();
        assert_eq!(oracle_answer(&inst), "The shortest path is 0 -> 4 -> 2 with total weight 8.");
        assert_eq!(adversarial_answer(&inst), "The shortest path is 0 -> 7 -> 2 with total weight 9.");
    }
}
