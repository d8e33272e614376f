//! Benchmark task kinds, ground truth, and task instances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{rational_str, Graph, NodeId, Rational};
use crate::oracles::{self, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Connectivity,
    CycleDetection,
    TopologicalSort,
    ShortestPath,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Connectivity,
        TaskKind::CycleDetection,
        TaskKind::TopologicalSort,
        TaskKind::ShortestPath,
    ];

    pub fn is_directed(self) -> bool {
        self == TaskKind::TopologicalSort
    }

    pub fn has_endpoints(self) -> bool {
        matches!(self, TaskKind::Connectivity | TaskKind::ShortestPath)
    }

    pub fn is_weighted(self) -> bool {
        self == TaskKind::ShortestPath
    }

    /// Dataset sub-directory name.
    pub fn dir_name(self) -> &'static str {
        match self {
            TaskKind::Connectivity => "connectivity",
            TaskKind::CycleDetection => "cycle",
            TaskKind::TopologicalSort => "topology",
            TaskKind::ShortestPath => "shortest_path",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TaskKind::Connectivity => "Connectivity",
            TaskKind::CycleDetection => "Cycle Detection",
            TaskKind::TopologicalSort => "Topological Sort",
            TaskKind::ShortestPath => "Shortest Path",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}` (expected connectivity, cycle, topology or shortest_path)")]
pub struct UnknownTask(pub String);

impl FromStr for TaskKind {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "connectivity" => Ok(TaskKind::Connectivity),
            "cycle" | "cycle_detection" => Ok(TaskKind::CycleDetection),
            "topology" | "toposort" | "topological_sort" => Ok(TaskKind::TopologicalSort),
            "shortest_path" | "shortest" => Ok(TaskKind::ShortestPath),
            _ => Err(UnknownTask(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalPath {
    pub path: Vec<NodeId>,
    #[serde(with = "rational_str")]
    pub weight: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundTruth {
    Connected { value: bool },
    HasCycle { value: bool },
    /// Witness order; grading accepts any valid order.
    TopologicalOrder { witness: Vec<NodeId> },
    /// `optimum` is `None` when the target is unreachable.
    ShortestPath { optimum: Option<OptimalPath> },
}

impl GroundTruth {
    /// Solves `task` on `graph` with the exact oracles.
    pub fn compute(
        task: TaskKind,
        graph: &Graph,
        endpoints: Option<(NodeId, NodeId)>,
    ) -> Result<Self, OracleError> {
        let pair = || endpoints.ok_or(OracleError::MissingEndpoints(task));
        Ok(match task {
            TaskKind::Connectivity => {
                let (s, t) = pair()?;
                GroundTruth::Connected { value: oracles::is_connected(graph, s, t)? }
            }
            TaskKind::CycleDetection => GroundTruth::HasCycle { value: oracles::has_cycle(graph)? },
            TaskKind::TopologicalSort => GroundTruth::TopologicalOrder {
                witness: oracles::solve_toposort(graph)?,
            },
            TaskKind::ShortestPath => {
                let (s, t) = pair()?;
                let optimum = match oracles::shortest_path(graph, s, t) {
                    Ok((path, weight)) => Some(OptimalPath { path, weight }),
                    Err(OracleError::Unreachable(..)) => None,
                    Err(e) => return Err(e),
                };
                GroundTruth::ShortestPath { optimum }
            }
        })
    }

    pub fn task(&self) -> TaskKind {
        match self {
            GroundTruth::Connected { .. } => TaskKind::Connectivity,
            GroundTruth::HasCycle { .. } => TaskKind::CycleDetection,
            GroundTruth::TopologicalOrder { .. } => TaskKind::TopologicalSort,
            GroundTruth::ShortestPath { .. } => TaskKind::ShortestPath,
        }
    }
}

/// One benchmark question with its oracle answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub task: TaskKind,
    pub graph: Graph,
    /// `(source, target)` for connectivity and shortest path.
    pub endpoints: Option<(NodeId, NodeId)>,
    pub truth: GroundTruth,
    /// Dataset file path or generator descriptor.
    pub source: String,
}

impl TaskInstance {
    /// Builds an instance, computing its ground truth.
    pub fn new(
        id: impl Into<String>,
        task: TaskKind,
        graph: Graph,
        endpoints: Option<(NodeId, NodeId)>,
        source: impl Into<String>,
    ) -> Result<Self, OracleError> {
        let truth = GroundTruth::compute(task, &graph, endpoints)?;
        Ok(TaskInstance {
            id: id.into(),
            task,
            graph,
            endpoints: if task.has_endpoints() { endpoints } else { None },
            truth,
            source: source.into(),
        })
    }

    /// Recomputes the truth and checks it against the stored one.
    pub fn is_consistent(&self) -> bool {
        GroundTruth::compute(self.task, &self.graph, self.endpoints).as_ref() == Ok(&self.truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;

    #[test]
    fn task_names_round_trip() {
        for task in TaskKind::ALL {
            assert_eq!(task.dir_name().parse::<TaskKind>().unwrap(), task);
        }
        assert_eq!("toposort".parse::<TaskKind>().unwrap(), TaskKind::TopologicalSort);
        assert!("flow".parse::<TaskKind>().is_err());
    }

    #[test]
    fn star_instance_truth() {
        let g = parse_edge_list("(0,4) (1,4) (2,4)", false, None).unwrap();
        let inst = TaskInstance::new("0", TaskKind::Connectivity, g, Some((0, 2)), "inline").unwrap();
        assert_eq!(inst.truth, GroundTruth::Connected { value: true });
        assert!(inst.is_consistent());
    }

    #[test]
    fn truth_serde_shape() {
        let truth = GroundTruth::ShortestPath {
            optimum: Some(OptimalPath { path: vec![0, 4, 2], weight: Rational::from_integer(8) }),
        };
        let json = serde_json::to_string(&truth).unwrap();
        assert_eq!(json, r#"{"kind":"shortest_path","optimum":{"path":[0,4,2],"weight":"8"}}"#);
        assert_eq!(serde_json::from_str::<GroundTruth>(&json).unwrap(), truth);
    }
}
