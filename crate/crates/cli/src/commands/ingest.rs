//! `lbd ingest`: build an immutable snapshot from raw corpus files.

use std::path::PathBuf;

use clap::Args;

use lbd_kb::ingest::{ingest, IngestReport};
use lbd_kb::mesh::MeshTree;
use lbd_kb::snapshot::write_snapshot;
use lbd_kb::types::parse_flexible_date;

use super::open;

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Triplet corpus (JSONL, one raw assertion per line)
    #[arg(long)]
    pub triplets: PathBuf,
    /// Article corpus (JSONL)
    #[arg(long)]
    pub articles: PathBuf,
    /// Optional MeSH tree-number side file (JSONL)
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Cutoff date (YYYY-MM-DD); only records discovered before it are kept
    #[arg(long)]
    pub cutoff: String,
    /// Snapshot output directory
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_ingest(args: &IngestArgs) -> anyhow::Result<IngestReport> {
    let cutoff = parse_flexible_date(&args.cutoff)?;
    let (kb, report) = ingest(open(&args.triplets)?, open(&args.articles)?, cutoff)?;
    let mesh = match &args.mesh {
        Some(path) => Some(MeshTree::from_reader(open(path)?)?),
        None => None,
    };
    write_snapshot(&kb, mesh.as_ref(), &args.out)?;
    Ok(report)
}

pub fn print_report(report: &IngestReport) {
    use std::io::Write;
    let out = std::io::stdout();
    let mut out = out.lock();
    // a closed pipe (e.g. `| head`) is not an error worth crashing for
    let _ = writeln!(out, "triplet lines        {}", report.triplet_lines)
        .and_then(|_| writeln!(out, "article lines        {}", report.article_lines))
        .and_then(|_| writeln!(out, "records kept         {}", report.records_kept))
        .and_then(|_| writeln!(out, "records merged       {}", report.records_merged))
        .and_then(|_| writeln!(out, "invalid pair         {}", report.invalid_pair))
        .and_then(|_| writeln!(out, "missing name         {}", report.missing_name))
        .and_then(|_| writeln!(out, "no articles          {}", report.no_articles))
        .and_then(|_| writeln!(out, "past cutoff          {}", report.past_cutoff))
        .and_then(|_| writeln!(out, "articles w/o date    {}", report.missing_date))
        .and_then(|_| writeln!(out, "articles w/o text    {}", report.empty_text))
        .and_then(|_| writeln!(out, "duplicate pmids      {}", report.duplicate_pmid))
        .and_then(|_| {
            writeln!(
                out,
                "malformed lines      {}",
                report.malformed_triplet_lines + report.malformed_article_lines
            )
        });
}
