//! `lbd eval`: score proposals against the test set and the knowledge
//! base, run the description judge, and write the metric report.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::PathBuf;

use clap::Args;

use lbd_agent::{ChatBackend, OpenAiBackend, ScriptedBackend};
use lbd_eval::{
    aggregate, alignment_r, judge_descriptions, load_test_set, novelty_r_key, summarize_usage,
    MetricReport, MetricRow, ProposalRecord,
};
use lbd_kb::ingest::ArticleLine;
use lbd_kb::query::QueryEngine;
use lbd_kb::snapshot::load_snapshot;
use lbd_kb::types::parse_flexible_date;
use lbd_kb::{Article, Pmid, Triplet, TripletKey};

use super::open;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// proposals.jsonl produced by `lbd run`
    #[arg(long)]
    pub proposals: PathBuf,
    /// Test-set JSONL
    #[arg(long)]
    pub tests: PathBuf,
    /// Knowledge-base snapshot directory
    #[arg(long)]
    pub kb: PathBuf,
    /// Replay script for the judge
    #[arg(long, conflicts_with = "endpoint")]
    pub judge_replay: Option<PathBuf>,
    /// OpenAI-compatible chat endpoint for the judge
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name for the live judge endpoint
    #[arg(long)]
    pub model: Option<String>,
    /// Ground-truth article texts (JSONL), for the alignment judge
    #[arg(long)]
    pub test_articles: Option<PathBuf>,
    /// Treat the reverse triplet orientation as known for novelty
    #[arg(long, default_value_t = false)]
    pub undirected: bool,
    /// Judge sampling temperature
    #[arg(long, default_value_t = 0.2)]
    pub temperature_extract: f64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Row label in the plain-text table
    #[arg(long, default_value = "run")]
    pub label: String,
}

fn load_articles(path: &std::path::Path) -> anyhow::Result<BTreeMap<Pmid, Article>> {
    let mut out = BTreeMap::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ArticleLine = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), idx + 1))?;
        out.insert(
            parsed.pmid,
            Article {
                pmid: parsed.pmid,
                title: parsed.title,
                abstract_text: parsed.abstract_text,
                pub_date: parse_flexible_date(&parsed.pub_date)?,
                journal: parsed.journal,
            },
        );
    }
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<MetricReport> {
    let (kb, _mesh) = load_snapshot(&args.kb)?;
    let kb = std::sync::Arc::new(kb);
    let engine = QueryEngine::new(kb.clone());
    let cases = load_test_set(open(&args.tests)?, &kb)?;

    let mut proposals: Vec<ProposalRecord> = Vec::new();
    for (idx, line) in open(&args.proposals)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        proposals.push(serde_json::from_str(&line).map_err(|e| {
            anyhow::anyhow!("{}:{}: {e}", args.proposals.display(), idx + 1)
        })?);
    }
    if proposals.is_empty() {
        anyhow::bail!("no proposals in {}", args.proposals.display());
    }

    let judge: Box<dyn ChatBackend> = match (&args.judge_replay, &args.endpoint) {
        (Some(path), None) => Box::new(ScriptedBackend::from_reader(open(path)?)?),
        (None, Some(endpoint)) => Box::new(OpenAiBackend::new(
            endpoint.clone(),
            args.model
                .clone()
                .ok_or_else(|| anyhow::anyhow!("a live judge endpoint needs --model"))?,
            std::env::var(crate::config::DEFAULT_API_KEY_ENV).ok(),
        )),
        _ => anyhow::bail!("set exactly one of --judge-replay and --endpoint"),
    };
    let test_articles = match &args.test_articles {
        Some(path) => load_articles(path)?,
        None => BTreeMap::new(),
    };

    let mut rows = Vec::new();
    for p in &proposals {
        let case = cases.get(p.case_index).ok_or_else(|| {
            anyhow::anyhow!("proposal references unknown case index {}", p.case_index)
        })?;
        if case.subject.id != p.subject_id || case.object.id != p.object_id {
            anyhow::bail!(
                "proposal {} is about ({}, {}) but case {} is ({}, {})",
                p.case_index,
                p.subject_id,
                p.object_id,
                p.case_index,
                case.subject.id,
                case.object.id
            );
        }
        let key = TripletKey::new(case.subject.id.clone(), p.relation, case.object.id.clone());
        let novelty = novelty_r_key(&kb, &key, args.undirected);
        let proposal_triplet = Triplet {
            subject: case.subject.clone(),
            relation: p.relation,
            object: case.object.clone(),
        };
        let alignment = alignment_r(case, &proposal_triplet)?;
        let scores = judge_descriptions(
            judge.as_ref(),
            case,
            &p.description,
            &engine,
            &test_articles,
            p.case_index,
            args.temperature_extract,
        )?;
        rows.push(MetricRow {
            case_index: p.case_index,
            subject_id: p.subject_id.clone(),
            object_id: p.object_id.clone(),
            relation: p.relation,
            novelty_r: novelty,
            alignment_r: alignment,
            novelty_d: scores.map(|s| s.novelty_d),
            alignment_d: scores.map(|s| s.alignment_d),
        });
    }

    let mut report = aggregate(&rows)?;
    report.usage = Some(summarize_usage(&proposals));

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(
        args.out.join("report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    let table = lbd_eval::metrics::render_table(&args.label, &report);
    std::fs::write(args.out.join("report.txt"), &table)?;
    Ok(report)
}
