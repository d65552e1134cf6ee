//! `lbd run`: execute one episode per test case over a bounded worker pool
//! and write traces plus the proposals file.
//!
//! With a replay script, output bytes are independent of parallelism and
//! wall clock: episodes are pure functions of (case, config, snapshot,
//! script) and files are written in case order after all workers finish.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use clap::Args;
use serde::{Deserialize, Serialize};

use lbd_agent::trace::to_trace_jsonl;
use lbd_agent::{
    Architecture, ChatBackend, EpisodeMemory, EpisodeResult, EpisodeRunner, LocalTools,
    OpenAiBackend, QueryCase, ScriptedBackend, TerminatedBy, ToolRegistry, ToolTransport,
};
use lbd_eval::{load_test_set, ProposalRecord, TestCase};
use lbd_kb::graph::{build_graph, GraphConfig};
use lbd_kb::query::QueryEngine;
use lbd_kb::snapshot::load_snapshot;

use crate::config::{BackendChoice, RunConfig, RunConfigFile, RunOverrides};
use crate::http_tools::HttpTools;

use super::open;

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Knowledge-base snapshot directory
    #[arg(long)]
    pub kb: PathBuf,
    /// Test-set JSONL
    #[arg(long)]
    pub tests: PathBuf,
    /// Run configuration TOML
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replay script (deterministic scripted backend)
    #[arg(long, conflicts_with = "endpoint")]
    pub replay: Option<PathBuf>,
    /// OpenAI-compatible chat endpoint base URL
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name for the live endpoint
    #[arg(long)]
    pub model: Option<String>,
    /// Execute tools against a running service instead of in-process
    #[arg(long)]
    pub service: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Override the evaluation threshold
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Override the architecture (single | double)
    #[arg(long)]
    pub architecture: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub cases: usize,
    pub succeeded: usize,
    pub failed_cases: Vec<usize>,
    pub terminated_by_threshold: usize,
    pub terminated_by_extractor: usize,
}

fn parse_architecture(s: &str) -> anyhow::Result<Architecture> {
    match s {
        "single" => Ok(Architecture::Single),
        "double" => Ok(Architecture::Double),
        other => anyhow::bail!("unknown architecture {other:?} (expected single or double)"),
    }
}

pub fn cmd_run(args: &RunArgs) -> anyhow::Result<RunSummary> {
    let file = match &args.config {
        Some(path) => Some(RunConfigFile::load(path)?),
        None => None,
    };
    let config = RunConfig::resolve(
        file,
        RunOverrides {
            parallelism: args.parallelism,
            threshold: args.threshold,
            architecture: args
                .architecture
                .as_deref()
                .map(parse_architecture)
                .transpose()?,
            replay: args.replay.clone(),
            endpoint: args.endpoint.clone(),
            model: args.model.clone(),
        },
    )?;

    let (kb, mesh) = load_snapshot(&args.kb)?;
    let kb = Arc::new(kb);
    let cases = load_test_set(open(&args.tests)?, &kb)?;
    if cases.is_empty() {
        anyhow::bail!("test set {} is empty", args.tests.display());
    }

    let backend: Box<dyn ChatBackend> = match &config.backend {
        BackendChoice::Replay(path) => Box::new(ScriptedBackend::from_reader(open(path)?)?),
        BackendChoice::Live {
            endpoint,
            model,
            api_key_env,
        } => Box::new(OpenAiBackend::new(
            endpoint.clone(),
            model.clone(),
            std::env::var(api_key_env).ok(),
        )),
    };
    let transport: Arc<dyn ToolTransport> = match &args.service {
        Some(url) => Arc::new(HttpTools::new(url.clone())),
        None => {
            let graph = Arc::new(build_graph(&kb));
            let engine = QueryEngine::new(kb.clone());
            Arc::new(LocalTools::new(
                engine,
                graph,
                mesh.map(Arc::new),
                GraphConfig::default(),
            ))
        }
    };
    let tools = ToolRegistry::new(transport);
    let runner = EpisodeRunner::new(&config.agent, backend.as_ref(), &tools, &kb);

    type Outcome = Result<(EpisodeResult, EpisodeMemory), lbd_agent::EpisodeError>;
    let results: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..cases.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..config.parallelism.min(cases.len()) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= cases.len() {
                    break;
                }
                let case = query_case(&cases[index]);
                let outcome = runner.run_episode(&case);
                results.lock().unwrap()[index] = Some(outcome);
            });
        }
    });
    let results = results.into_inner().unwrap();

    let traces_dir = args.out.join("traces");
    std::fs::create_dir_all(&traces_dir)?;
    let mut proposals = String::new();
    let mut summary = RunSummary {
        cases: cases.len(),
        succeeded: 0,
        failed_cases: Vec::new(),
        terminated_by_threshold: 0,
        terminated_by_extractor: 0,
    };
    for (index, outcome) in results.into_iter().enumerate() {
        let case = query_case(&cases[index]);
        match outcome.expect("every case ran") {
            Err(e) => {
                eprintln!("case {index} failed: {e}");
                summary.failed_cases.push(index);
            }
            Ok((result, memory)) => {
                summary.succeeded += 1;
                match result.terminated_by {
                    TerminatedBy::Threshold => summary.terminated_by_threshold += 1,
                    TerminatedBy::Extractor => summary.terminated_by_extractor += 1,
                }
                std::fs::write(
                    traces_dir.join(format!("case_{index:04}.jsonl")),
                    to_trace_jsonl(index, &case, &memory, &result),
                )?;
                let record = proposal_record(index, &case, &result);
                proposals.push_str(&serde_json::to_string(&record)?);
                proposals.push('\n');
            }
        }
    }
    std::fs::write(args.out.join("proposals.jsonl"), proposals)?;
    std::fs::write(
        args.out.join("run_summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(summary)
}

fn query_case(case: &TestCase) -> QueryCase {
    QueryCase {
        subject: case.subject.clone(),
        object: case.object.clone(),
    }
}

fn proposal_record(index: usize, case: &QueryCase, result: &EpisodeResult) -> ProposalRecord {
    let mut api_function_counts: BTreeMap<String, u64> = BTreeMap::new();
    for call in &result.api_call_log {
        *api_function_counts.entry(call.function.clone()).or_insert(0) += 1;
    }
    ProposalRecord {
        case_index: index,
        subject_id: case.subject.id.clone(),
        object_id: case.object.id.clone(),
        relation: result.final_proposal.relation,
        description: result.final_proposal.description.clone(),
        terminated_by: match result.terminated_by {
            TerminatedBy::Threshold => "threshold".to_string(),
            TerminatedBy::Extractor => "extractor".to_string(),
        },
        outer_iterations_used: result.outer_iterations_used,
        inner_generation: result.inner_iterations.generation,
        inner_evaluation: result.inner_iterations.evaluation,
        api_calls: result.api_call_log.len() as u32,
        api_function_counts,
        backend_calls: result.backend_calls,
    }
}
