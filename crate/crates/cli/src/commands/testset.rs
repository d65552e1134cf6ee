//! `lbd testset`: build the held-out test set from post-cutoff candidates.

use std::path::PathBuf;

use clap::Args;

use lbd_eval::{build_test_set, write_test_set, ImpactTable, RelatedPastMode, TestSetOptions};
use lbd_kb::ingest::ArticleLine;
use lbd_kb::snapshot::load_snapshot;

use super::open;

#[derive(Debug, Args)]
pub struct TestsetArgs {
    /// Candidate triplets (JSONL), discovered after the cutoff
    #[arg(long)]
    pub candidates: PathBuf,
    /// Articles supporting the candidates (JSONL)
    #[arg(long)]
    pub candidate_articles: PathBuf,
    /// Knowledge-base snapshot directory
    #[arg(long)]
    pub kb: PathBuf,
    /// Target entity id; the test set keeps pairs touching it or its MeSH
    /// descendants
    #[arg(long)]
    pub target: String,
    /// Journal impact table (JSONL: {"journal", "impact"})
    #[arg(long)]
    pub impact: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub top_journals: usize,
    /// Related-past scope: either | both
    #[arg(long, default_value = "either")]
    pub related: String,
    /// Output directory (tests.jsonl + test_articles.jsonl)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_testset(args: &TestsetArgs) -> anyhow::Result<usize> {
    let (kb, mesh) = load_snapshot(&args.kb)?;
    let impact = ImpactTable::from_reader(open(&args.impact)?)?;
    let related_past = match args.related.as_str() {
        "either" => RelatedPastMode::EitherEntity,
        "both" => RelatedPastMode::BothEntities,
        other => anyhow::bail!("unknown related-past mode {other:?} (expected either or both)"),
    };
    let options = TestSetOptions {
        top_journals: args.top_journals,
        related_past,
    };
    let (cases, articles) = build_test_set(
        open(&args.candidates)?,
        open(&args.candidate_articles)?,
        &kb,
        mesh.as_ref(),
        &args.target,
        &impact,
        &options,
    )?;
    if cases.is_empty() {
        eprintln!("warning: no candidates survived the test-set filters");
    }
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("tests.jsonl"), write_test_set(&cases))?;
    let mut lines = String::new();
    for article in articles.values() {
        lines.push_str(&serde_json::to_string(&ArticleLine::from_article(article))?);
        lines.push('\n');
    }
    std::fs::write(args.out.join("test_articles.jsonl"), lines)?;
    Ok(cases.len())
}
