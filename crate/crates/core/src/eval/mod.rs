//! Datasets, answer extraction, grading and benchmark runs.

mod dataset;
mod extract;
mod grade;
mod run;

use thiserror::Error;

use crate::context::ContextError;
use crate::gateway::GatewayError;
use crate::reference::ReferenceError;

pub use dataset::{generate_dataset, id_order, instance_text, load_dataset, parse_instance, write_dataset};
pub use extract::{extract_answer, ParsedAnswer};
pub use grade::{aggregate, grade, AccuracyRow, AccuracyTable, GradeResult, PathColumns, Percent, Verdict};
pub use run::{
    emit_report, instance_seed, load_instances, load_reference, markdown_table, regrade, render_markdown,
    render_report, run_benchmark, CallCounts, DatasetSpec, ProviderSpec, ReportFormat, RunConfig, RunReport,
    CONVENTIONS,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset not found: {0}")]
    MissingDataset(String),
    #[error("{file}:{line}: {message}")]
    InstanceParse { file: String, line: usize, message: String },
    #[error("{file}:{line}: stored answer `{stored}` disagrees with the oracle (`{expected}`)")]
    TruthMismatch { file: String, line: usize, stored: String, expected: String },
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("no results to aggregate")]
    EmptyResults,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error("malformed report: {0}")]
    ReportParse(String),
}
