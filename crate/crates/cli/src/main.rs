use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use graphctx::context::{
    builtin_drafts, consolidate_task_context_cached, ContextError, PromptStrategy, TaskContext,
};
use graphctx::eval::{
    emit_report, regrade, render_report, run_benchmark, write_dataset, generate_dataset, DatasetSpec, EvalError,
    ProviderSpec, ReportFormat, RunConfig, RunReport,
};
use graphctx::gateway::{AnswerKey, CompletionClient, HttpClient, HttpConfig, MockKind, MockProvider, ResponseCache, ScriptedMock};
use graphctx::graph::parse_edge_list;
use graphctx::matcher::best_subgraph;
use graphctx::reference::{builtin_extended, builtin_small, load_reference_graph, ReferenceGraph};
use graphctx::task::{TaskKind, UnknownTask};

#[derive(Debug, Parser)]
#[command(name = "graphctx", version, about = "Graph reasoning prompts with structured context")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark and write a report.
    Run(RunArgs),
    /// Match one query graph against a reference graph.
    Match(MatchArgs),
    /// Re-grade the stored responses of a report.
    Grade(GradeArgs),
    /// Re-render a stored report.
    Report(ReportArgs),
    /// Consolidate drafts into a task context.
    GenContext(GenContextArgs),
    /// Write a generated dataset in the instance-file layout.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct ProviderArgs {
    /// OpenAI-compatible base URL, e.g. http://localhost:8000/v1
    #[arg(long, conflicts_with = "mock")]
    provider_url: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
    /// oracle, oracle:<error rate>, adversarial or script:<file>
    #[arg(long)]
    mock: Option<String>,
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    max_retries: u32,
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Task name, repeatable or comma separated; `all` selects every task.
    #[arg(long, required = true, value_delimiter = ',')]
    task: Vec<String>,
    #[arg(long)]
    strategy: PromptStrategy,
    #[arg(long, default_value = "mock")]
    model: String,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Dataset root with one directory per task.
    #[arg(long, conflicts_with = "generate")]
    dataset: Option<PathBuf>,
    /// Generate this many instances per task instead of reading a dataset.
    #[arg(long)]
    generate: Option<usize>,
    #[arg(long, default_value_t = 5)]
    min_nodes: u32,
    #[arg(long, default_value_t = 10)]
    max_nodes: u32,
    #[arg(long, default_value_t = 0.3)]
    edge_density: f64,
    #[arg(long)]
    ref_graph: Option<PathBuf>,
    /// JSON task context (or list of them) used instead of consolidation.
    #[arg(long)]
    context: Option<PathBuf>,
    /// Directory of template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    exemplars: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    cap: usize,
    #[arg(long, default_value_t = 512)]
    max_tokens: u32,
    #[arg(long, default_value_t = 0.001)]
    temperature: f64,
    #[arg(long, default_value_t = 0.95)]
    top_p: f64,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct MatchArgs {
    /// Edge list such as "(0,1) (1,2)".
    #[arg(long, conflicts_with = "graph_file")]
    graph: Option<String>,
    #[arg(long)]
    graph_file: Option<PathBuf>,
    #[arg(long)]
    directed: bool,
    /// Reference graph JSON; `small` or `extended` select a bundled graph.
    #[arg(long, default_value = "extended")]
    ref_graph: String,
    #[arg(long, default_value_t = 25)]
    cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GradeArgs {
    /// Stored JSON report.
    report: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct ReportArgs {
    report: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct GenContextArgs {
    #[arg(long)]
    task: String,
    /// JSON list of [label, text] pairs; bundled drafts when absent.
    #[arg(long)]
    drafts: Option<PathBuf>,
    #[arg(long, default_value = "mock")]
    model: String,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, required = true, value_delimiter = ',')]
    task: Vec<String>,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_nodes: u32,
    #[arg(long, default_value_t = 10)]
    max_nodes: u32,
    #[arg(long, default_value_t = 0.3)]
    edge_density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Bad flags or inputs the user can fix; exits with status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<ConfigError>()
            || e.is::<UnknownTask>()
            || matches!(
                e.downcast_ref::<EvalError>(),
                Some(EvalError::Config(_) | EvalError::MissingDataset(_) | EvalError::Context(ContextError::UnknownStrategy(_)))
            )
            || matches!(e.downcast_ref::<ContextError>(), Some(ContextError::UnknownStrategy(_)))
    })
}

fn parse_tasks(names: &[String]) -> Result<Vec<TaskKind>> {
    let mut tasks = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            tasks.extend(TaskKind::ALL);
        } else {
            tasks.push(name.parse::<TaskKind>()?);
        }
    }
    tasks.sort();
    tasks.dedup();
    Ok(tasks)
}

fn provider_spec(args: &ProviderArgs) -> Result<ProviderSpec> {
    match (&args.mock, &args.provider_url) {
        (Some(mock), None) => {
            let (kind, arg) = mock.split_once(':').unwrap_or((mock.as_str(), ""));
            match kind {
                "oracle" if arg.is_empty() => Ok(ProviderSpec::MockOracle { error_rate: 0.0 }),
                "oracle" => {
                    let error_rate = arg.parse().map_err(|_| config_err(format!("bad error rate `{arg}`")))?;
                    Ok(ProviderSpec::MockOracle { error_rate })
                }
                "adversarial" => Ok(ProviderSpec::MockAdversarial),
                "script" if !arg.is_empty() => Ok(ProviderSpec::MockScript { path: arg.into() }),
                _ => Err(config_err(format!("unknown mock `{mock}`"))),
            }
        }
        (None, Some(url)) => Ok(ProviderSpec::Http {
            base_url: url.clone(),
            api_key_env: args.api_key_env.clone(),
            timeout_secs: args.timeout_secs,
            max_retries: args.max_retries,
            max_in_flight: args.max_in_flight,
        }),
        (None, None) => Err(config_err("one of --mock or --provider-url is required")),
        (Some(_), Some(_)) => Err(config_err("--mock and --provider-url are mutually exclusive")),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RunReport::from_json(&text)?)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let tasks = parse_tasks(&args.task)?;
    let provider = provider_spec(&args.provider)?;
    let dataset = match (&args.dataset, args.generate) {
        (Some(root), None) => DatasetSpec::Dir { root: root.clone() },
        (None, Some(count)) => DatasetSpec::Generated {
            count,
            min_nodes: args.min_nodes,
            max_nodes: args.max_nodes,
            edge_density: args.edge_density,
        },
        _ => return Err(config_err("one of --dataset or --generate is required")),
    };
    let mut config = RunConfig::new(tasks, args.strategy, args.model, provider, dataset);
    config.reference = args.ref_graph;
    config.context = args.context;
    config.templates = args.templates;
    config.exemplars = args.exemplars;
    config.seed = args.seed;
    config.cap = args.cap;
    config.max_tokens = args.max_tokens;
    config.temperature = args.temperature;
    config.top_p = args.top_p;
    config.cache_dir = args.cache_dir;
    config.jobs = args.jobs;

    let report = run_benchmark(&config)?;
    log::info!(
        "{} instances, {} provider calls, {} cache hits",
        report.results.len(),
        report.calls.provider_calls,
        report.calls.cache_hits
    );
    match &args.out {
        Some(path) => emit_report(&report, args.format, path)?,
        None => print!("{}", render_report(&report, args.format)),
    }
    Ok(())
}

fn reference_arg(name: &str) -> Result<ReferenceGraph> {
    Ok(match name {
        "small" => builtin_small(),
        "extended" => builtin_extended(),
        path => load_reference_graph(path)?,
    })
}

fn cmd_match(args: MatchArgs) -> Result<()> {
    let text = match (&args.graph, &args.graph_file) {
        (Some(g), None) => g.clone(),
        (None, Some(path)) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        _ => return Err(config_err("one of --graph or --graph-file is required")),
    };
    let graph = parse_edge_list(&text, args.directed, None).map_err(|e| config_err(format!("query graph: {e}")))?;
    let reference = reference_arg(&args.ref_graph)?;
    let query = if args.directed { graph.undirected_skeleton() } else { graph };
    let result = best_subgraph(&query, &reference, args.cap, args.seed)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

fn cmd_grade(args: GradeArgs) -> Result<()> {
    let report = regrade(&read_report(&args.report)?)?;
    write_output(args.out.as_deref(), &render_report(&report, args.format))
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let report = read_report(&args.report)?;
    write_output(args.out.as_deref(), &render_report(&report, args.format))
}

fn cmd_gen_context(args: GenContextArgs) -> Result<()> {
    let task: TaskKind = args.task.parse()?;
    let drafts: Vec<(String, String)> = match &args.drafts {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| config_err(format!("drafts {}: {e}", path.display())))?
        }
        None => builtin_drafts(task),
    };
    let spec = provider_spec(&args.provider)?;
    let key = Arc::new(AnswerKey::new());
    let (client, model): (Box<dyn CompletionClient>, String) = match spec {
        ProviderSpec::MockOracle { error_rate } => (
            Box::new(MockProvider::new(MockKind::Oracle { error_rate, seed: 0 }, key)),
            format!("mock-oracle/{}", args.model),
        ),
        ProviderSpec::MockAdversarial => {
            (Box::new(MockProvider::adversarial(key)), format!("mock-adversarial/{}", args.model))
        }
        ProviderSpec::MockScript { path } => {
            let text = fs::read_to_string(&path).map_err(|e| config_err(format!("script {}: {e}", path.display())))?;
            let mock = ScriptedMock::from_json(&text).map_err(|e| config_err(format!("script: {e}")))?;
            (Box::new(mock), format!("mock-script/{}", args.model))
        }
        ProviderSpec::Http { base_url, api_key_env, timeout_secs, max_retries, max_in_flight } => {
            let mut cfg = HttpConfig::new(base_url);
            cfg.api_key_env = api_key_env;
            cfg.timeout = std::time::Duration::from_secs(timeout_secs);
            cfg.max_retries = max_retries;
            cfg.max_in_flight = max_in_flight;
            (Box::new(HttpClient::new(cfg)), args.model.clone())
        }
    };
    let cache = args.cache_dir.as_ref().map(ResponseCache::open).transpose()?;
    let ctx: TaskContext = consolidate_task_context_cached(task, &drafts, client.as_ref(), &model, cache.as_ref())?;
    log::info!("{} provider calls", client.call_count());
    write_output(args.out.as_deref(), &(serde_json::to_string_pretty(&ctx)? + "\n"))
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let tasks = parse_tasks(&args.task)?;
    if args.count == 0 {
        bail!(config_err("--count must be at least 1"));
    }
    for task in tasks {
        let instances =
            generate_dataset(task, args.count, (args.min_nodes, args.max_nodes), args.edge_density, args.seed)?;
        write_dataset(&args.out, &instances)?;
        eprintln!("wrote {} {} instances", instances.len(), task.dir_name());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Match(a) => cmd_match(a),
        Command::Grade(a) => cmd_grade(a),
        Command::Report(a) => cmd_report(a),
        Command::GenContext(a) => cmd_gen_context(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_config_error(&err) { 2 } else { 1 })
        }
    }
}
