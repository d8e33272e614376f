use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{generate_dataset, id_order, load_dataset};
use super::extract::{extract_answer, ParsedAnswer};
use super::grade::{aggregate, grade, AccuracyTable, GradeResult, Verdict};
use super::EvalError;
use crate::context::{
    assign_matched_mapping, assign_random_mapping, builtin_drafts, consolidate_task_context_cached,
    exemplar_instances, name_table, render_prompt_with, PromptInputs, PromptStrategy, RenderedPrompt, TaskContext,
    TemplateSet,
};
use crate::gateway::{
    cached_complete, AnswerKey, CompletionClient, CompletionRequest, HttpClient, HttpConfig, MockKind, MockProvider,
    ResponseCache, ScriptedMock, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, DEFAULT_TOP_P,
};
use crate::graph::NodeId;
use crate::matcher::DEFAULT_CAP;
use crate::reference::{builtin_extended, load_reference_graph, ReferenceGraph};
use crate::task::{TaskInstance, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSpec {
    MockOracle {
        error_rate: f64,
    },
    MockAdversarial,
    /// JSON array of replies, consumed in order.
    MockScript {
        path: PathBuf,
    },
    Http {
        base_url: String,
        api_key_env: Option<String>,
        timeout_secs: u64,
        max_retries: u32,
        max_in_flight: usize,
    },
}

impl ProviderSpec {
    pub fn is_mock(&self) -> bool {
        !matches!(self, ProviderSpec::Http { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// `<root>/<task dir>/<id>.txt`
    Dir { root: PathBuf },
    /// Distinct generated instances, seeded from the run seed.
    Generated { count: usize, min_nodes: u32, max_nodes: u32, edge_density: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tasks: Vec<TaskKind>,
    pub strategy: PromptStrategy,
    pub model: String,
    pub provider: ProviderSpec,
    pub dataset: DatasetSpec,
    /// Reference-graph file; the bundled extended graph when absent.
    pub reference: Option<PathBuf>,
    /// JSON file holding one [`TaskContext`] or a list of them.
    pub context: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub exemplars: usize,
    pub seed: u64,
    pub cap: usize,
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub cache_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(
        tasks: Vec<TaskKind>,
        strategy: PromptStrategy,
        model: impl Into<String>,
        provider: ProviderSpec,
        dataset: DatasetSpec,
    ) -> Self {
        RunConfig {
            tasks,
            strategy,
            model: model.into(),
            provider,
            dataset,
            reference: None,
            context: None,
            templates: None,
            exemplars: 2,
            seed: 0,
            cap: DEFAULT_CAP,
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            cache_dir: None,
            jobs: 4,
        }
    }

    /// Hex SHA-256 of the serialized config.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.tasks.is_empty() {
            return bad("no tasks selected".into());
        }
        if self.strategy.needs_exemplars() && self.exemplars == 0 {
            return bad(format!("strategy {} needs at least one exemplar", self.strategy));
        }
        if self.cap == 0 {
            return bad("cap must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if let ProviderSpec::MockOracle { error_rate } = self.provider {
            if !(0.0..=1.0).contains(&error_rate) {
                return bad(format!("error rate {error_rate} outside [0, 1]"));
            }
        }
        let probe = CompletionRequest {
            model: self.model.clone(),
            prompt: String::new(),
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            top_p: self.top_p,
        };
        probe.validate().map_err(|e| EvalError::Config(e.to_string()))
    }

    fn request_model(&self) -> String {
        match &self.provider {
            ProviderSpec::MockOracle { error_rate } => format!("mock-oracle-p{error_rate}-s{}/{}", self.seed, self.model),
            ProviderSpec::MockAdversarial => format!("mock-adversarial/{}", self.model),
            ProviderSpec::MockScript { .. } => format!("mock-script/{}", self.model),
            ProviderSpec::Http { .. } => self.model.clone(),
        }
    }

    fn request(&self, prompt: String) -> CompletionRequest {
        CompletionRequest {
            model: self.request_model(),
            prompt,
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            top_p: self.top_p,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    /// Provider round trips of every kind, retries included.
    pub provider_calls: u64,
    /// Round trips spent on task-context consolidation.
    pub consolidation_calls: u64,
    /// Round trips spent on benchmark questions.
    pub completion_calls: u64,
    pub cache_hits: u64,
    pub failed_instances: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub fingerprint: String,
    pub config: RunConfig,
    pub table: AccuracyTable,
    /// Ordered by task, then instance id.
    pub results: Vec<GradeResult>,
    pub contexts: Vec<TaskContext>,
    pub calls: CallCounts,
    /// Grading conventions the numbers depend on.
    pub conventions: Vec<String>,
    pub elapsed_ms: u64,
}

impl RunReport {
    /// Copy with every timing field zeroed.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        r.elapsed_ms = 0;
        for g in &mut r.results {
            g.latency_ms = 0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::ReportParse(e.to_string()))
    }
}

pub const CONVENTIONS: [&str; 3] = [
    "unparsed responses are graded incorrect",
    "shortest path: Path requires a valid s-t path of optimal total weight, Weight requires the stated weight to equal the optimum",
    "shortest path: an unreachable target is graded correct only when the answer states that no path exists",
];

/// Deterministic per-instance seed.
pub fn instance_seed(seed: u64, task: TaskKind, id: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(task.dir_name().as_bytes())
        .chain_update([0])
        .chain_update(id.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Instances for `task` as described by the dataset spec.
pub fn load_instances(config: &RunConfig, task: TaskKind) -> Result<Vec<TaskInstance>, EvalError> {
    match &config.dataset {
        DatasetSpec::Dir { root } => load_dataset(root, task),
        DatasetSpec::Generated { count, min_nodes, max_nodes, edge_density } => {
            generate_dataset(task, *count, (*min_nodes, *max_nodes), *edge_density, instance_seed(config.seed, task, ""))
        }
    }
}

/// The reference graph the config names, if its strategy needs one.
pub fn load_reference(config: &RunConfig) -> Result<Option<ReferenceGraph>, EvalError> {
    if !config.strategy.uses_names() {
        return Ok(None);
    }
    Ok(Some(match &config.reference {
        Some(path) => load_reference_graph(path)?,
        None => builtin_extended(),
    }))
}

fn load_context_file(path: &Path) -> Result<Vec<TaskContext>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io(path.display().to_string(), e.to_string()))?;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(TaskContext),
        Many(Vec<TaskContext>),
    }
    match serde_json::from_str(&text) {
        Ok(OneOrMany::One(c)) => Ok(vec![c]),
        Ok(OneOrMany::Many(cs)) => Ok(cs),
        Err(e) => Err(EvalError::Config(format!("context file {}: {e}", path.display()))),
    }
}

fn build_client(config: &RunConfig, key: Arc<AnswerKey>) -> Result<Box<dyn CompletionClient>, EvalError> {
    Ok(match &config.provider {
        ProviderSpec::MockOracle { error_rate } => {
            Box::new(MockProvider::new(MockKind::Oracle { error_rate: *error_rate, seed: config.seed }, key))
        }
        ProviderSpec::MockAdversarial => Box::new(MockProvider::new(MockKind::Adversarial, key)),
        ProviderSpec::MockScript { path } => {
            let text =
                fs::read_to_string(path).map_err(|e| EvalError::Config(format!("script {}: {e}", path.display())))?;
            Box::new(
                ScriptedMock::from_json(&text)
                    .map_err(|e| EvalError::Config(format!("script {}: {e}", path.display())))?,
            )
        }
        ProviderSpec::Http { base_url, api_key_env, timeout_secs, max_retries, max_in_flight } => {
            let mut http = HttpConfig::new(base_url.clone());
            http.api_key_env = api_key_env.clone();
            http.timeout = Duration::from_secs(*timeout_secs);
            http.max_retries = *max_retries;
            http.max_in_flight = *max_in_flight;
            Box::new(HttpClient::new(http))
        }
    })
}

struct Job {
    inst: TaskInstance,
    prompt: Result<RenderedPrompt, String>,
    names: Vec<(String, NodeId)>,
}

fn prepare(
    config: &RunConfig,
    templates: &TemplateSet,
    reference: Option<&ReferenceGraph>,
    context: Option<&TaskContext>,
    exemplars: &[TaskInstance],
    inst: TaskInstance,
) -> Job {
    let seed = instance_seed(config.seed, inst.task, &inst.id);
    let rendered = (|| {
        let strategy = config.strategy;
        let (mapping, matched) = match (strategy, reference) {
            (PromptStrategy::GotSubgraph, Some(r)) => {
                let (m, res) = assign_matched_mapping(&inst.graph, r, config.cap, seed)?;
                (Some(m), Some(res))
            }
            (s, Some(r)) if s.uses_names() => (Some(assign_random_mapping(&inst.graph, r, seed)?), None),
            _ => (None, None),
        };
        let inputs = PromptInputs {
            mapping: mapping.as_ref(),
            matched: matched.as_ref(),
            context,
            reference,
            exemplars,
        };
        render_prompt_with(templates, &inst, strategy, inputs)
    })();
    let names = match (&rendered, reference) {
        (Ok(p), Some(r)) => p.mapping.as_ref().map(|m| name_table(m, r)).unwrap_or_default(),
        _ => Vec::new(),
    };
    Job { prompt: rendered.map_err(|e| format!("instance {}: {e}", inst.id)), inst, names }
}

fn execute(config: &RunConfig, client: &dyn CompletionClient, cache: Option<&ResponseCache>, job: &Job) -> GradeResult {
    let started = Instant::now();
    let mut result = GradeResult {
        instance_id: job.inst.id.clone(),
        task: job.inst.task,
        strategy: config.strategy,
        model: config.model.clone(),
        verdict: Verdict::WRONG,
        answer: ParsedAnswer::Unparsed { raw: String::new() },
        response: None,
        mapping: job.prompt.as_ref().ok().and_then(|p| p.mapping.clone()),
        from_cache: false,
        error: None,
        latency_ms: 0,
    };
    match &job.prompt {
        Err(e) => result.error = Some(e.clone()),
        Ok(prompt) => match cached_complete(cache, client, &config.request(prompt.text.clone())) {
            Err(e) => result.error = Some(format!("instance {}: {e}", job.inst.id)),
            Ok(resp) => {
                result.answer = extract_answer(job.inst.task, &resp.text, &job.names);
                result.verdict = grade(&job.inst, &result.answer);
                result.from_cache = resp.from_cache;
                result.response = Some(resp.text);
            }
        },
    }
    result.latency_ms = started.elapsed().as_millis() as u64;
    result
}

/// Runs the full pipeline: context once per task, then mapping, rendering,
/// one completion, extraction and grading per instance.
pub fn run_benchmark(config: &RunConfig) -> Result<RunReport, EvalError> {
    config.validate()?;
    let started = Instant::now();
    let templates = match &config.templates {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::builtin(),
    };
    let reference = load_reference(config)?;
    let cache = config.cache_dir.as_ref().map(ResponseCache::open).transpose()?;
    let key = Arc::new(AnswerKey::new());
    let client = build_client(config, key.clone())?;
    let supplied = config.context.as_deref().map(load_context_file).transpose()?;

    let mut tasks = config.tasks.clone();
    tasks.sort();
    tasks.dedup();

    let mut contexts = Vec::new();
    if config.strategy.uses_task_context() {
        for &task in &tasks {
            let ctx = match &supplied {
                Some(list) => list
                    .iter()
                    .find(|c| c.task == task)
                    .cloned()
                    .ok_or_else(|| EvalError::Config(format!("context file has no entry for task {task}")))?,
                None => consolidate_task_context_cached(
                    task,
                    &builtin_drafts(task),
                    client.as_ref(),
                    &config.request_model(),
                    cache.as_ref(),
                )?,
            };
            contexts.push(ctx);
        }
    }
    let consolidation_calls = client.call_count();

    let mut jobs = Vec::new();
    for &task in &tasks {
        let instances = load_instances(config, task)?;
        let exemplars = if config.strategy.needs_exemplars() {
            exemplar_instances(task, config.exemplars, instance_seed(config.seed, task, "exemplars"))
        } else {
            Vec::new()
        };
        let context = contexts.iter().find(|c| c.task == task);
        for inst in instances {
            jobs.push(prepare(config, &templates, reference.as_ref(), context, &exemplars, inst));
        }
    }
    for job in &jobs {
        if let Ok(p) = &job.prompt {
            key.insert(p.text.clone(), job.inst.clone());
        }
    }

    let run = |job: &Job| execute(config, client.as_ref(), cache.as_ref(), job);
    let mut results: Vec<GradeResult> = if matches!(config.provider, ProviderSpec::MockScript { .. }) || config.jobs == 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| EvalError::Config(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };
    results.sort_by_cached_key(|r| (r.task, id_order(&r.instance_id)));
    for r in results.iter().filter(|r| r.error.is_some()) {
        log::warn!("{}", r.error.as_deref().unwrap_or_default());
    }

    let table = aggregate(&results)?;
    let total = client.call_count();
    let calls = CallCounts {
        provider_calls: total,
        consolidation_calls,
        completion_calls: total - consolidation_calls,
        cache_hits: results.iter().filter(|r| r.from_cache).count() as u64,
        failed_instances: results.iter().filter(|r| r.error.is_some()).count() as u64,
    };
    Ok(RunReport {
        fingerprint: config.fingerprint(),
        config: config.clone(),
        table,
        results,
        contexts,
        calls,
        conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

/// Re-extracts and re-grades the stored responses of `report` against
/// freshly loaded instances.
pub fn regrade(report: &RunReport) -> Result<RunReport, EvalError> {
    let reference = load_reference(&report.config)?;
    let mut instances: BTreeMap<(TaskKind, String), TaskInstance> = BTreeMap::new();
    for &task in &report.config.tasks {
        for inst in load_instances(&report.config, task)? {
            instances.insert((task, inst.id.clone()), inst);
        }
    }
    let mut out = report.clone();
    for r in &mut out.results {
        let Some(text) = &r.response else { continue };
        let inst = instances
            .get(&(r.task, r.instance_id.clone()))
            .ok_or_else(|| EvalError::Config(format!("instance {} ({}) not in dataset", r.instance_id, r.task)))?;
        let names = match (&r.mapping, &reference) {
            (Some(m), Some(refg)) => name_table(m, refg),
            _ => Vec::new(),
        };
        r.answer = extract_answer(r.task, text, &names);
        r.verdict = grade(inst, &r.answer);
    }
    out.table = aggregate(&out.results)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(EvalError::Config(format!("unknown report format `{s}`"))),
        }
    }
}

/// Accuracy table laid out with strategies as rows and task column groups,
/// shortest path split into Path / Weight / Both.
pub fn markdown_table(table: &AccuracyTable) -> String {
    let mut out = String::from(
        "| Strategy | Model | Connectivity | Cycle Detection | Topological Sort | Shortest Path: Path | Shortest Path: Weight | Shortest Path: Both |\n\
         | --- | --- | ---: | ---: | ---: | ---: | ---: | ---: |\n",
    );
    let mut keys: Vec<(PromptStrategy, &str)> = table.rows.iter().map(|r| (r.strategy, r.model.as_str())).collect();
    keys.sort();
    keys.dedup();
    for (strategy, model) in keys {
        let cell = |task| {
            table.row(task, strategy, model).map(|r| r.accuracy.to_string()).unwrap_or_else(|| "-".to_string())
        };
        let sp = table.row(TaskKind::ShortestPath, strategy, model).and_then(|r| r.shortest_path.as_ref());
        let sp_cells = match sp {
            Some(c) => [c.path.to_string(), c.weight.to_string(), c.both.to_string()],
            None => ["-".to_string(), "-".to_string(), "-".to_string()],
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            strategy.label(),
            model,
            cell(TaskKind::Connectivity),
            cell(TaskKind::CycleDetection),
            cell(TaskKind::TopologicalSort),
            sp_cells[0],
            sp_cells[1],
            sp_cells[2]
        ));
    }
    out
}

pub fn render_markdown(report: &RunReport) -> String {
    let mut out = String::from("# Benchmark report\n\n");
    out.push_str(&format!("Config fingerprint: `{}`\n\n", report.fingerprint));
    out.push_str(&markdown_table(&report.table));
    out.push_str("\n## Instances\n\n");
    for row in &report.table.rows {
        out.push_str(&format!(
            "- {} / {} / {}: {} instances, {} correct\n",
            row.task.title(),
            row.strategy.label(),
            row.model,
            row.count,
            row.correct
        ));
    }
    let c = &report.calls;
    out.push_str(&format!(
        "\n## Calls\n\n- provider calls: {}\n- consolidation calls: {}\n- completion calls: {}\n- cache hits: {}\n- failed instances: {}\n",
        c.provider_calls, c.consolidation_calls, c.completion_calls, c.cache_hits, c.failed_instances
    ));
    out.push_str("\n## Conventions\n\n");
    for conv in &report.conventions {
        out.push_str(&format!("- {conv}\n"));
    }
    out
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Markdown => render_markdown(report),
    }
}

pub fn emit_report(report: &RunReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    fs::write(path, render_report(report, format)).map_err(|e| EvalError::Io(path.display().to_string(), e.to_string()))
}
