use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use once_cell::sync::Lazy;
use regex::Regex;

use super::extract::extract_answer;
use super::grade::grade;
use super::EvalError;
use crate::answers::oracle_answer;
use crate::graph::{parse_rational, Graph, NodeId, Weight};
use crate::oracles::{generate_instance, GeneratorParams};
use crate::task::{TaskInstance, TaskKind};

static TUPLE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\(\s*(\d+)\s*,\s*(\d+)\s*(?:,\s*([0-9./]+)\s*)?\)").unwrap());
static EDGE_SENTENCE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)edge between node (\d+) and node (\d+)(?: with weight ([0-9]+(?:\.[0-9]+)?(?:/[0-9]+)?))?").unwrap()
});
static BEFORE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)node (\d+) should be visited before node (\d+)").unwrap());
static NUMBERED: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)numbered from (\d+) to (\d+)").unwrap());
static AMONG: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)among nodes ([0-9,\sand]+)").unwrap());
static NODE_REF: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)node (\d+)").unwrap());
static INT: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d+").unwrap());

fn err(file: &Path, line: usize, message: impl Into<String>) -> EvalError {
    EvalError::InstanceParse { file: file.display().to_string(), line, message: message.into() }
}

fn ints(text: &str) -> Vec<NodeId> {
    INT.find_iter(text).filter_map(|m| m.as_str().parse().ok()).collect()
}

/// Parses one instance file. Accepts the `Graph:` / `Nodes:` / `Question:` /
/// `Answer:` layout written by [`write_dataset`] as well as the sentence forms
/// of the public benchmark (`The edges in G are: (0, 1) ...`, `an edge between
/// node 0 and node 1`, optionally `with weight 2`, `node 0 should be visited before node 1`,
/// `numbered from 0 to 4`, `Q:` / `A:`).
pub fn parse_instance(task: TaskKind, id: &str, text: &str, file: &Path) -> Result<TaskInstance, EvalError> {
    let mut g = Graph::new(task.is_directed());
    let mut question: Option<(usize, String)> = None;
    let mut stored: Option<(usize, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        let lower = line.to_ascii_lowercase();
        if let Some(rest) = strip_any(line, &lower, &["question:", "q:"]) {
            question = Some((line_no, rest.to_string()));
            continue;
        }
        if let Some(rest) = strip_any(line, &lower, &["answer:", "a:"]) {
            if !rest.trim().is_empty() {
                stored = Some((line_no, rest.trim().to_string()));
            }
            continue;
        }
        if question.is_some() {
            continue;
        }
        if let Some(rest) = strip_any(line, &lower, &["nodes:"]) {
            for n in ints(rest) {
                g.add_node(n);
            }
            continue;
        }
        if let Some(c) = NUMBERED.captures(line) {
            let (lo, hi): (NodeId, NodeId) = (parse_id(&c[1], file, line_no)?, parse_id(&c[2], file, line_no)?);
            if lo > hi {
                return Err(err(file, line_no, format!("empty node range {lo}..{hi}")));
            }
            for n in lo..=hi {
                g.add_node(n);
            }
        }
        if let Some(c) = AMONG.captures(line) {
            for n in ints(&c[1]) {
                g.add_node(n);
            }
        }
        let mut edges: Vec<(NodeId, NodeId, Option<String>)> = Vec::new();
        for c in EDGE_SENTENCE.captures_iter(line) {
            edges.push((
                parse_id(&c[1], file, line_no)?,
                parse_id(&c[2], file, line_no)?,
                c.get(3).map(|m| m.as_str().to_string()),
            ));
        }
        for c in BEFORE.captures_iter(line) {
            edges.push((parse_id(&c[1], file, line_no)?, parse_id(&c[2], file, line_no)?, None));
        }
        for c in TUPLE.captures_iter(line) {
            edges.push((
                parse_id(&c[1], file, line_no)?,
                parse_id(&c[2], file, line_no)?,
                c.get(3).map(|m| m.as_str().to_string()),
            ));
        }
        for (u, v, w) in edges {
            let weight = match w {
                None => Weight::ONE,
                Some(w) => parse_rational(&w)
                    .ok_or_else(|| err(file, line_no, format!("bad weight `{w}`")))
                    .and_then(|r| Weight::new(r).map_err(|e| err(file, line_no, e.to_string())))?,
            };
            g.add_edge(u, v, weight).map_err(|e| err(file, line_no, e.to_string()))?;
        }
    }
    let endpoints = if task.has_endpoints() {
        let (line_no, q) = question.as_ref().ok_or_else(|| err(file, 0, "no question line"))?;
        let refs: Vec<NodeId> = NODE_REF.captures_iter(q).filter_map(|c| c[1].parse().ok()).collect();
        match refs.as_slice() {
            [s, t, ..] => Some((*s, *t)),
            _ => return Err(err(file, *line_no, "question names fewer than two nodes")),
        }
    } else {
        None
    };
    if let Some((s, t)) = endpoints {
        g.add_node(s);
        g.add_node(t);
    }
    if g.node_count() == 0 {
        return Err(err(file, 0, "no nodes or edges found"));
    }
    let inst = TaskInstance::new(id, task, g, endpoints, file.display().to_string())
        .map_err(|e| err(file, 0, e.to_string()))?;
    if let Some((line_no, answer)) = stored {
        let parsed = extract_answer(task, &answer, &[]);
        if !grade(&inst, &parsed).correct {
            return Err(EvalError::TruthMismatch {
                file: file.display().to_string(),
                line: line_no,
                stored: answer,
                expected: oracle_answer(&inst),
            });
        }
    }
    Ok(inst)
}

fn strip_any<'a>(line: &'a str, lower: &str, prefixes: &[&str]) -> Option<&'a str> {
    prefixes.iter().find(|p| lower.starts_with(*p)).map(|p| line[p.len()..].trim())
}

fn parse_id(s: &str, file: &Path, line: usize) -> Result<NodeId, EvalError> {
    s.parse().map_err(|_| err(file, line, format!("node id `{s}` out of range")))
}

/// Sort key putting numeric ids in numeric order ahead of the rest.
pub fn id_order(id: &str) -> (u8, u64, String) {
    match id.parse::<u64>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1, 0, id.to_string()),
    }
}

/// Every `*.txt` instance under `<root>/<task dir>/`, ordered by id.
pub fn load_dataset(root: impl AsRef<Path>, task: TaskKind) -> Result<Vec<TaskInstance>, EvalError> {
    let dir = root.as_ref().join(task.dir_name());
    let missing = || EvalError::MissingDataset(dir.display().to_string());
    let entries = fs::read_dir(&dir).map_err(|_| missing())?;
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| EvalError::Io(dir.display().to_string(), e.to_string()))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            let id = path.file_stem().expect("has extension").to_string_lossy().into_owned();
            files.push((id, path));
        }
    }
    if files.is_empty() {
        return Err(missing());
    }
    files.sort_by_key(|(id, _)| id_order(id));
    files
        .into_iter()
        .map(|(id, path)| {
            let text =
                fs::read_to_string(&path).map_err(|e| EvalError::Io(path.display().to_string(), e.to_string()))?;
            parse_instance(task, &id, &text, &path)
        })
        .collect()
}

/// The text written for one instance, with its oracle answer.
pub fn instance_text(inst: &TaskInstance) -> String {
    use crate::context::{render_prompt, PromptInputs, PromptStrategy};
    let prompt = render_prompt(inst, PromptStrategy::ZeroShot, PromptInputs::default()).expect("zero-shot needs nothing");
    let body: Vec<&str> =
        prompt.text.lines().filter(|l| l.starts_with("Graph:") || l.starts_with("Nodes:") || l.starts_with("Question:")).collect();
    format!("{}\nAnswer: {}\n", body.join("\n"), oracle_answer(inst))
}

/// Writes instances as `<root>/<task dir>/<id>.txt`.
pub fn write_dataset(root: impl AsRef<Path>, instances: &[TaskInstance]) -> Result<(), EvalError> {
    for inst in instances {
        let dir = root.as_ref().join(inst.task.dir_name());
        fs::create_dir_all(&dir).map_err(|e| EvalError::Io(dir.display().to_string(), e.to_string()))?;
        let path = dir.join(format!("{}.txt", inst.id));
        fs::write(&path, instance_text(inst)).map_err(|e| EvalError::Io(path.display().to_string(), e.to_string()))?;
    }
    Ok(())
}

/// `count` generated instances with pairwise distinct graphs and questions,
/// ids `0..count`. Node counts cycle through `nodes`.
pub fn generate_dataset(
    task: TaskKind,
    count: usize,
    nodes: (u32, u32),
    edge_density: f64,
    seed: u64,
) -> Result<Vec<TaskInstance>, EvalError> {
    let (lo, hi) = nodes;
    if lo == 0 || lo > hi {
        return Err(EvalError::Config(format!("node range {lo}..{hi} is empty")));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempt = 0u64;
    while out.len() < count {
        if attempt > 1000 + 100 * count as u64 {
            return Err(EvalError::Config(format!(
                "could only generate {} distinct {task} instances",
                out.len()
            )));
        }
        let n = lo + (attempt % u64::from(hi - lo + 1)) as u32;
        let sub_seed = seed.wrapping_mul(1_000_003).wrapping_add(attempt);
        attempt += 1;
        let mut inst = generate_instance(task, GeneratorParams::new(n, edge_density, (1, 10)), sub_seed)
            .map_err(|e| EvalError::Config(e.to_string()))?;
        let key = instance_text(&inst);
        if !seen.insert(key) {
            continue;
        }
        inst.id = out.len().to_string();
        out.push(inst);
    }
    Ok(out)
}
