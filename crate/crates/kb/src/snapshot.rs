//! Knowledge-base snapshots: a directory holding `triplets.jsonl`,
//! `articles.jsonl`, an optional `mesh.jsonl`, and `manifest.json`.
//!
//! Writing is deterministic (records in identity order, articles in PMID
//! order), so re-ingesting a snapshot and writing it again reproduces the
//! same bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KbError, Result};
use crate::ingest::{ingest, ArticleLine, TripletLine};
use crate::mesh::MeshTree;
use crate::types::{parse_flexible_date, KnowledgeBase};

pub const TRIPLETS_FILE: &str = "triplets.jsonl";
pub const ARTICLES_FILE: &str = "articles.jsonl";
pub const MESH_FILE: &str = "mesh.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub cutoff: String,
    pub counts: BTreeMap<String, u64>,
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| KbError::Io {
            path: path.display().to_string(),
            source: e,
        })
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| KbError::WriteIo {
            path: path.display().to_string(),
            source: e,
        })
}

fn write_err(path: &Path, e: std::io::Error) -> KbError {
    KbError::WriteIo {
        path: path.display().to_string(),
        source: e,
    }
}

/// Write a snapshot of `kb` (and `mesh`, when present) into `dir`,
/// creating the directory if needed.
pub fn write_snapshot(kb: &KnowledgeBase, mesh: Option<&MeshTree>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;

    let tpath = dir.join(TRIPLETS_FILE);
    let mut tw = create_writer(&tpath)?;
    for record in kb.records() {
        let line = serde_json::to_string(&TripletLine::from_record(record))
            .expect("record serializes");
        writeln!(tw, "{line}").map_err(|e| write_err(&tpath, e))?;
    }
    tw.flush().map_err(|e| write_err(&tpath, e))?;

    let apath = dir.join(ARTICLES_FILE);
    let mut aw = create_writer(&apath)?;
    for article in kb.articles() {
        let line =
            serde_json::to_string(&ArticleLine::from_article(article)).expect("article serializes");
        writeln!(aw, "{line}").map_err(|e| write_err(&apath, e))?;
    }
    aw.flush().map_err(|e| write_err(&apath, e))?;

    let mut counts = BTreeMap::new();
    counts.insert("articles".to_string(), kb.article_count() as u64);
    counts.insert("entities".to_string(), kb.entity_count() as u64);
    counts.insert("records".to_string(), kb.record_count() as u64);

    if let Some(mesh) = mesh {
        let mpath = dir.join(MESH_FILE);
        let mut mw = create_writer(&mpath)?;
        for line in mesh.to_jsonl_lines() {
            writeln!(mw, "{line}").map_err(|e| write_err(&mpath, e))?;
        }
        mw.flush().map_err(|e| write_err(&mpath, e))?;
        counts.insert("mesh_entities".to_string(), mesh.entity_count() as u64);
    }

    let manifest = Manifest {
        cutoff: kb.cutoff().format("%Y-%m-%d").to_string(),
        counts,
    };
    let mpath = dir.join(MANIFEST_FILE);
    let mut mw = create_writer(&mpath)?;
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    writeln!(mw, "{body}").map_err(|e| write_err(&mpath, e))?;
    mw.flush().map_err(|e| write_err(&mpath, e))?;
    Ok(())
}

/// Load a snapshot directory back into a [`KnowledgeBase`] and, when
/// `mesh.jsonl` is present, a [`MeshTree`].
///
/// Loading re-runs ingestion over the snapshot files; a snapshot that fails
/// its own cleaning rules or disagrees with the manifest counts is an error.
pub fn load_snapshot(dir: &Path) -> Result<(KnowledgeBase, Option<MeshTree>)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_reader(open_reader(&manifest_path)?)
        .map_err(|e| KbError::InvalidInput(format!("bad manifest: {e}")))?;
    let cutoff = parse_flexible_date(&manifest.cutoff)?;

    let triplets = open_reader(&dir.join(TRIPLETS_FILE))?;
    let articles = open_reader(&dir.join(ARTICLES_FILE))?;
    let (kb, report) = ingest(triplets, articles, cutoff)?;

    let expect = |k: &str| manifest.counts.get(k).copied();
    for (key, actual) in [
        ("records", kb.record_count() as u64),
        ("articles", kb.article_count() as u64),
        ("entities", kb.entity_count() as u64),
    ] {
        if let Some(expected) = expect(key) {
            if expected != actual {
                return Err(KbError::InvalidInput(format!(
                    "snapshot {key} count mismatch: manifest says {expected}, loaded {actual}"
                )));
            }
        }
    }
    if report.malformed_triplet_lines + report.malformed_article_lines > 0 {
        return Err(KbError::InvalidInput(format!(
            "snapshot contains {} malformed lines",
            report.malformed_triplet_lines + report.malformed_article_lines
        )));
    }

    let mesh_path = dir.join(MESH_FILE);
    let mesh = if mesh_path.exists() {
        Some(MeshTree::from_reader(open_reader(&mesh_path)?)?)
    } else {
        None
    };
    Ok((kb, mesh))
}

/// Read one snapshot file fully, for byte-level comparisons.
pub fn read_file_bytes(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    std::fs::read(&path).map_err(|e| KbError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
