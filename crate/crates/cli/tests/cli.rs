use std::path::Path;
use std::process::{Command, Output};

fn graphctx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphctx")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_then_run_with_oracle_mock() {
    let dir = tempfile::tempdir().unwrap();
    let gen = graphctx(dir.path(), &["generate", "--task", "all", "--count", "4", "--out", "ds", "--seed", "5"]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let run = graphctx(
        dir.path(),
        &["run", "--task", "all", "--strategy", "got_subgraph", "--mock", "oracle", "--dataset", "ds", "--format", "markdown"],
    );
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let md = stdout(&run);
    assert!(md.contains("| GOT Subgraph | mock | 100.00 | 100.00 | 100.00 | 100.00 | 100.00 | 100.00 |"), "{md}");
}

#[test]
fn report_and_grade_reuse_a_stored_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = graphctx(
        dir.path(),
        &["run", "--task", "connectivity,cycle", "--strategy", "zero-shot", "--mock", "adversarial", "--generate", "6", "--out", "r.json"],
    );
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = graphctx(dir.path(), &["report", "r.json"]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("| Zero-shot | mock | 0.00 | 0.00 | - | - | - | - |"));
    let graded = graphctx(dir.path(), &["grade", "r.json", "--format", "json", "--out", "g.json"]);
    assert!(graded.status.success());
    let a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(a["table"], b["table"]);
}

#[test]
fn match_prints_the_best_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphctx(dir.path(), &["match", "--graph", "(0,1) (0,2) (0,4)", "--ref-graph", "small"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["best_subgraph"]["nodes"], serde_json::json!([1, 2, 3, 4]));
    assert_eq!(v["combined_score"], "3");
}

#[test]
fn gen_context_consolidates_bundled_drafts() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphctx(dir.path(), &["gen-context", "--task", "shortest_path", "--mock", "oracle"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["task"], "shortest_path");
    assert_eq!(v["provenance"].as_array().unwrap().len(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| graphctx(dir.path(), args).status.code();
    assert_eq!(code(&["run", "--task", "bogus", "--strategy", "cot", "--mock", "oracle", "--generate", "2"]), Some(2));
    assert_eq!(code(&["run", "--task", "cycle", "--strategy", "cot", "--generate", "2"]), Some(2));
    assert_eq!(code(&["run", "--task", "cycle", "--strategy", "cot", "--mock", "oracle", "--dataset", "none"]), Some(2));
    assert_eq!(code(&["run", "--task", "cycle", "--strategy", "nonsense", "--mock", "oracle"]), Some(2));
    assert_eq!(code(&["report", "missing.json"]), Some(1));
    assert_eq!(code(&["match", "--graph", "(0,1)", "--ref-graph", "missing.json"]), Some(1));
}
