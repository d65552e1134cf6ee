//! Command-level flows: ingest reporting, run determinism across
//! parallelism, eval reporting, and test-set construction.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use lbd_cli::commands::eval::{cmd_eval, EvalArgs};
use lbd_cli::commands::ingest::{cmd_ingest, IngestArgs};
use lbd_cli::commands::run::{cmd_run, RunArgs};
use lbd_cli::commands::testset::{cmd_testset, TestsetArgs};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn ingest_corpus(out: &Path) {
    cmd_ingest(&IngestArgs {
        triplets: fixture("corpus/triplets.jsonl"),
        articles: fixture("corpus/articles.jsonl"),
        mesh: Some(fixture("corpus/mesh.jsonl")),
        cutoff: "2024-01-01".to_string(),
        out: out.to_path_buf(),
    })
    .unwrap();
}

fn run_args(kb: &Path, out: &Path) -> RunArgs {
    RunArgs {
        kb: kb.to_path_buf(),
        tests: fixture("testset/tests5.jsonl"),
        config: Some(fixture("config/replay.toml")),
        replay: Some(fixture("replay/run5.jsonl")),
        endpoint: None,
        model: None,
        service: None,
        out: out.to_path_buf(),
        parallelism: None,
        threshold: None,
        architecture: None,
    }
}

#[test]
fn ingest_reports_clean_fixture_counts() {
    let out = tempfile::tempdir().unwrap();
    let report = cmd_ingest(&IngestArgs {
        triplets: fixture("corpus/triplets.jsonl"),
        articles: fixture("corpus/articles.jsonl"),
        mesh: Some(fixture("corpus/mesh.jsonl")),
        cutoff: "2024-01-01".to_string(),
        out: out.path().to_path_buf(),
    })
    .unwrap();
    assert_eq!(report.records_kept, 20);
    assert_eq!(report.invalid_pair, 0);
    assert_eq!(report.article_lines, 14);
    assert!(out.path().join("manifest.json").exists());
    assert!(out.path().join("mesh.jsonl").exists());
}

#[test]
fn ingest_missing_file_is_fatal() {
    let out = tempfile::tempdir().unwrap();
    let err = cmd_ingest(&IngestArgs {
        triplets: fixture("corpus/no_such_file.jsonl"),
        articles: fixture("corpus/articles.jsonl"),
        mesh: None,
        cutoff: "2024-01-01".to_string(),
        out: out.path().to_path_buf(),
    });
    assert!(err.is_err());
}

#[test]
fn ingest_tolerates_malformed_lines_with_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let triplets = dir.path().join("t.jsonl");
    std::fs::write(
        &triplets,
        "garbage\n{\"subject_id\":\"c1\",\"subject_name\":\"n\",\"subject_type\":\"chemical\",\"relation\":\"treat\",\"object_id\":\"d1\",\"object_name\":\"m\",\"object_type\":\"disease\",\"pmids\":[101]}\n",
    )
    .unwrap();
    let report = cmd_ingest(&IngestArgs {
        triplets,
        articles: fixture("corpus/articles.jsonl"),
        mesh: None,
        cutoff: "2024-01-01".to_string(),
        out: dir.path().join("snap"),
    })
    .unwrap();
    assert_eq!(report.malformed_triplet_lines, 1);
    assert_eq!(report.records_kept, 1);
}

fn read_all_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    out.push((
        "proposals.jsonl".to_string(),
        std::fs::read(dir.join("proposals.jsonl")).unwrap(),
    ));
    out.push((
        "run_summary.json".to_string(),
        std::fs::read(dir.join("run_summary.json")).unwrap(),
    ));
    let mut traces: Vec<PathBuf> = std::fs::read_dir(dir.join("traces"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    traces.sort();
    for t in traces {
        out.push((
            t.file_name().unwrap().to_string_lossy().to_string(),
            std::fs::read(&t).unwrap(),
        ));
    }
    out
}

#[test]
fn replay_run_writes_traces_and_is_parallelism_independent() {
    let kb = tempfile::tempdir().unwrap();
    ingest_corpus(kb.path());

    let out1 = tempfile::tempdir().unwrap();
    let summary = cmd_run(&RunArgs {
        parallelism: Some(1),
        ..run_args(kb.path(), out1.path())
    })
    .unwrap();
    assert_eq!(summary.cases, 5);
    assert_eq!(summary.succeeded, 5);
    assert_eq!(summary.terminated_by_threshold, 3);
    assert_eq!(summary.terminated_by_extractor, 2);

    let out4 = tempfile::tempdir().unwrap();
    let summary4 = cmd_run(&RunArgs {
        parallelism: Some(4),
        ..run_args(kb.path(), out4.path())
    })
    .unwrap();
    assert_eq!(summary4.succeeded, 5);
    assert_eq!(read_all_outputs(out1.path()), read_all_outputs(out4.path()));

    // five trace files, one per case
    let traces = std::fs::read_dir(out1.path().join("traces")).unwrap().count();
    assert_eq!(traces, 5);
}

#[test]
fn invalid_threshold_is_a_config_error() {
    let kb = tempfile::tempdir().unwrap();
    ingest_corpus(kb.path());
    let out = tempfile::tempdir().unwrap();
    let err = cmd_run(&RunArgs {
        threshold: Some(150.0),
        ..run_args(kb.path(), out.path())
    });
    assert!(err.is_err());
    assert!(err.unwrap_err().to_string().contains("evaluation_threshold"));
}

#[test]
fn eval_scores_replay_run_with_scripted_judge() {
    let kb = tempfile::tempdir().unwrap();
    ingest_corpus(kb.path());
    let run_out = tempfile::tempdir().unwrap();
    cmd_run(&run_args(kb.path(), run_out.path())).unwrap();

    let eval_out = tempfile::tempdir().unwrap();
    let report = cmd_eval(&EvalArgs {
        proposals: run_out.path().join("proposals.jsonl"),
        tests: fixture("testset/tests5.jsonl"),
        kb: kb.path().to_path_buf(),
        judge_replay: Some(fixture("replay/judge5.jsonl")),
        endpoint: None,
        model: None,
        test_articles: Some(fixture("testset/test_articles.jsonl")),
        undirected: false,
        temperature_extract: 0.2,
        out: eval_out.path().to_path_buf(),
        label: "fixture".to_string(),
    })
    .unwrap();

    assert_eq!(report.aggregates.cases, 5);
    assert_eq!(report.aggregates.novelty_r_pct, 80.0);
    assert_eq!(report.aggregates.alignment_r_pct, 60.0);
    assert_eq!(report.aggregates.novelty_d_mean, Some(76.25));
    assert_eq!(report.aggregates.novelty_d_missing, 1);
    assert_eq!(report.aggregates.alignment_d_mean, Some(55.0));
    let table = std::fs::read_to_string(eval_out.path().join("report.txt")).unwrap();
    assert!(table.contains("80.00"));
    assert!(table.contains("60.00"));
    assert!(eval_out.path().join("report.json").exists());
    let usage = report.usage.unwrap();
    assert_eq!(usage.terminated_by_threshold, 3);
    assert_eq!(usage.api_function_counts.get("get_relations"), Some(&1));
}

#[test]
fn eval_missing_proposals_file_fails() {
    let kb = tempfile::tempdir().unwrap();
    ingest_corpus(kb.path());
    let out = tempfile::tempdir().unwrap();
    let err = cmd_eval(&EvalArgs {
        proposals: out.path().join("missing.jsonl"),
        tests: fixture("testset/tests5.jsonl"),
        kb: kb.path().to_path_buf(),
        judge_replay: Some(fixture("replay/judge5.jsonl")),
        endpoint: None,
        model: None,
        test_articles: None,
        undirected: false,
        temperature_extract: 0.2,
        out: out.path().to_path_buf(),
        label: "x".to_string(),
    });
    assert!(err.is_err());
}

#[test]
fn testset_command_applies_all_filters() {
    let kb = tempfile::tempdir().unwrap();
    ingest_corpus(kb.path());
    let out = tempfile::tempdir().unwrap();
    let n = cmd_testset(&TestsetArgs {
        candidates: fixture("testset/candidates.jsonl"),
        candidate_articles: fixture("testset/test_articles.jsonl"),
        kb: kb.path().to_path_buf(),
        target: "dx".to_string(),
        impact: fixture("testset/impact.jsonl"),
        top_journals: 2,
        related: "either".to_string(),
        out: out.path().to_path_buf(),
    })
    .unwrap();
    // hand trace of the 10-candidate fixture: 5 survivors grouping into 4
    // pairs; the KB-known, low-journal, invalid-pair, unknown-entity, and
    // KB-known-thyroid candidates all drop
    assert_eq!(n, 4);
    let tests = std::fs::read_to_string(out.path().join("tests.jsonl")).unwrap();
    let pairs: BTreeSet<(String, String)> = tests
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (
                v["subject_id"].as_str().unwrap().to_string(),
                v["object_id"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let expected: BTreeSet<(String, String)> = [
        ("c1", "dr"),
        ("c2", "dm"),
        ("c3", "dr"),
        ("g1", "dn"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    assert_eq!(pairs, expected);
    // the grouped pair carries both truth relations
    let g1_line = tests.lines().find(|l| l.contains("\"g1\"")).unwrap();
    let v: serde_json::Value = serde_json::from_str(g1_line).unwrap();
    assert_eq!(
        v["truth_relations"],
        serde_json::json!(["inhibit", "stimulate"])
    );
    assert!(out.path().join("test_articles.jsonl").exists());
}

#[test]
fn replay_run_works_under_double_architecture() {
    let kb = tempfile::tempdir().unwrap();
    ingest_corpus(kb.path());
    let out = tempfile::tempdir().unwrap();
    let summary = cmd_run(&RunArgs {
        architecture: Some("double".to_string()),
        ..run_args(kb.path(), out.path())
    })
    .unwrap();
    assert_eq!(summary.succeeded, 5);
    // isolation leaves hand-off payloads in the generation log
    let trace = std::fs::read_to_string(out.path().join("traces/case_0001.jsonl")).unwrap();
    assert!(trace.contains("\"handoff\":true"));
}

#[test]
fn mutation_class_entities_fall_back_to_ids_in_prompts() {
    let kb_dir = tempfile::tempdir().unwrap();
    ingest_corpus(kb_dir.path());

    let dir = tempfile::tempdir().unwrap();
    let tests = dir.path().join("tests.jsonl");
    std::fs::write(
        &tests,
        r#"{"subject_id":"rs9001","subject_type":"snp","object_id":"dn","object_type":"disease","truth_relations":["cause"],"truth_pmids":[205],"related_past_pmids":[113]}"#,
    )
    .unwrap();
    // rs9001 has an empty name in the catalog, so prompts carry its id
    let replay = dir.path().join("replay.jsonl");
    std::fs::write(
        &replay,
        r#"{"match":{"module":"generation","contains":"\"rs9001\" and \"Sugar Kidney Rot\""},"response":"Thought: ok.\n```json\n{\"Relation\": \"cause\", \"Hypothesis Description\": \"variant driven decay\"}\n```"}
{"match":{"module":"evaluation"},"response":"Thought: fine.\n```json\n{\"Is New\": \"True\", \"Feedback\": \"ok\", \"Evaluation Score\": \"80\"}\n```"}"#,
    )
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let summary = cmd_run(&RunArgs {
        kb: kb_dir.path().to_path_buf(),
        tests,
        config: None,
        replay: Some(replay),
        endpoint: None,
        model: None,
        service: None,
        out: out.path().to_path_buf(),
        parallelism: None,
        threshold: None,
        architecture: None,
    })
    .unwrap();
    assert_eq!(summary.succeeded, 1);
    assert_eq!(summary.terminated_by_threshold, 1);
}
