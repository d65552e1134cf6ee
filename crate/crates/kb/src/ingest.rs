//! Corpus ingestion: JSONL parsing, cleaning, merge, and the cutoff split.
//!
//! Pipeline order is fixed so reports are deterministic:
//! article filtering, then triplet validity/name filtering, then merge by
//! directed identity, then no-article discard, then the cutoff split.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{KbError, Result};
use crate::types::{
    parse_flexible_date, Article, Entity, EntityType, HypothesisRecord, KnowledgeBase, Pmid,
    RelationType, Triplet, TripletKey,
};

/// One raw triplet assertion, as parsed from a corpus line.
#[derive(Debug, Clone)]
pub struct RawAssertion {
    pub triplet: Triplet,
    pub pmids: Vec<Pmid>,
}

/// Wire schema of a triplet JSONL line (also used by snapshots).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletLine {
    pub subject_id: String,
    #[serde(default)]
    pub subject_name: String,
    pub subject_type: String,
    pub relation: String,
    pub object_id: String,
    #[serde(default)]
    pub object_name: String,
    pub object_type: String,
    pub pmids: Vec<Pmid>,
}

impl TripletLine {
    pub fn parse(&self) -> Result<RawAssertion> {
        Ok(RawAssertion {
            triplet: Triplet {
                subject: Entity::new(
                    self.subject_id.clone(),
                    self.subject_name.clone(),
                    EntityType::parse(&self.subject_type)?,
                ),
                relation: RelationType::parse(&self.relation)?,
                object: Entity::new(
                    self.object_id.clone(),
                    self.object_name.clone(),
                    EntityType::parse(&self.object_type)?,
                ),
            },
            pmids: self.pmids.clone(),
        })
    }

    pub fn from_record(record: &HypothesisRecord) -> TripletLine {
        let t = &record.triplet;
        TripletLine {
            subject_id: t.subject.id.clone(),
            subject_name: t.subject.name.clone(),
            subject_type: t.subject.entity_type.as_str().to_string(),
            relation: t.relation.as_str().to_string(),
            object_id: t.object.id.clone(),
            object_name: t.object.name.clone(),
            object_type: t.object.entity_type.as_str().to_string(),
            pmids: record.pmids.iter().copied().collect(),
        }
    }
}

/// Wire schema of an article JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArticleLine {
    pub pmid: Pmid,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub pub_date: String,
    #[serde(default)]
    pub journal: String,
}

impl ArticleLine {
    pub fn from_article(a: &Article) -> ArticleLine {
        ArticleLine {
            pmid: a.pmid,
            title: a.title.clone(),
            abstract_text: a.abstract_text.clone(),
            pub_date: a.pub_date.format("%Y-%m-%d").to_string(),
            journal: a.journal.clone(),
        }
    }
}

/// Which input file a rejected line came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSource {
    Triplets,
    Articles,
}

/// A malformed input line, recorded with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRejection {
    pub source: LineSource,
    pub line: u64,
    pub reason: String,
}

/// Counters for every rejection reason plus merge accounting.
///
/// Accounting identities (checked in tests):
/// * `article_lines = articles kept + malformed_article_lines + missing_date
///   + empty_text + duplicate_pmid`
/// * `triplet_lines = malformed_triplet_lines + invalid_pair + missing_name
///   + records_merged + no_articles + past_cutoff + records_kept`
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub triplet_lines: u64,
    pub article_lines: u64,
    pub malformed_triplet_lines: u64,
    pub malformed_article_lines: u64,
    /// Articles discarded for a missing or unparseable publication date.
    pub missing_date: u64,
    /// Articles discarded because title and abstract are both empty.
    pub empty_text: u64,
    /// Later article lines repeating an already-admitted PMID.
    pub duplicate_pmid: u64,
    /// Triplets whose (relation, subject type, object type) is not admitted.
    pub invalid_pair: u64,
    /// Triplets with an empty name on a non-mutation-class entity.
    pub missing_name: u64,
    /// Merged identities left with no resolvable supporting article.
    pub no_articles: u64,
    /// Merged identities whose discovery date is at or after the cutoff.
    pub past_cutoff: u64,
    /// Raw assertions absorbed into an already-seen directed identity.
    pub records_merged: u64,
    pub records_kept: u64,
    pub rejections: Vec<LineRejection>,
}

/// Merge a group of raw assertions sharing one directed identity.
///
/// PMIDs resolve against the admitted article catalog; unresolvable PMIDs
/// are dropped. Returns `None` when no PMID survives. The discovery date is
/// the earliest publication date among the surviving articles. Entity names
/// come from the first assertion in the group.
pub fn merge_records(
    group: &[RawAssertion],
    articles: &BTreeMap<Pmid, Article>,
) -> Option<HypothesisRecord> {
    let first = group.first()?;
    let mut pmids = std::collections::BTreeSet::new();
    for raw in group {
        debug_assert_eq!(raw.triplet.key(), first.triplet.key());
        for &pmid in &raw.pmids {
            if articles.contains_key(&pmid) {
                pmids.insert(pmid);
            }
        }
    }
    let discovery_date = pmids.iter().map(|p| articles[p].pub_date).min()?;
    Some(HypothesisRecord {
        triplet: first.triplet.clone(),
        pmids,
        discovery_date,
    })
}

/// Ingest a triplet stream and an article stream into an immutable
/// [`KnowledgeBase`], keeping only records discovered before `cutoff`.
///
/// Malformed lines are tallied and skipped; an unreadable source is fatal.
pub fn ingest<T: BufRead, A: BufRead>(
    triplets: T,
    articles: A,
    cutoff: NaiveDate,
) -> Result<(KnowledgeBase, IngestReport)> {
    let mut report = IngestReport::default();

    // Pass 1: article filtering.
    let mut catalog: BTreeMap<Pmid, Article> = BTreeMap::new();
    for (idx, line) in articles.lines().enumerate() {
        let line = line.map_err(|e| KbError::Io {
            path: "<article stream>".into(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.article_lines += 1;
        let parsed: ArticleLine = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                report.malformed_article_lines += 1;
                report.rejections.push(LineRejection {
                    source: LineSource::Articles,
                    line: idx as u64 + 1,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if parsed.pmid == 0 {
            report.malformed_article_lines += 1;
            report.rejections.push(LineRejection {
                source: LineSource::Articles,
                line: idx as u64 + 1,
                reason: "pmid must be positive".into(),
            });
            continue;
        }
        let Ok(pub_date) = parse_flexible_date(&parsed.pub_date) else {
            report.missing_date += 1;
            continue;
        };
        if parsed.title.trim().is_empty() && parsed.abstract_text.trim().is_empty() {
            report.empty_text += 1;
            continue;
        }
        if catalog.contains_key(&parsed.pmid) {
            report.duplicate_pmid += 1;
            continue;
        }
        catalog.insert(
            parsed.pmid,
            Article {
                pmid: parsed.pmid,
                title: parsed.title,
                abstract_text: parsed.abstract_text,
                pub_date,
                journal: parsed.journal,
            },
        );
    }

    // Pass 2: triplet validity/name filtering, then merge by identity.
    struct Group {
        assertions: Vec<RawAssertion>,
    }
    let mut groups: BTreeMap<TripletKey, Group> = BTreeMap::new();
    for (idx, line) in triplets.lines().enumerate() {
        let line = line.map_err(|e| KbError::Io {
            path: "<triplet stream>".into(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.triplet_lines += 1;
        let raw: Result<RawAssertion> = serde_json::from_str::<TripletLine>(&line)
            .map_err(|e| KbError::InvalidInput(e.to_string()))
            .and_then(|l| l.parse());
        let raw = match raw {
            Ok(v) => v,
            Err(e) => {
                report.malformed_triplet_lines += 1;
                report.rejections.push(LineRejection {
                    source: LineSource::Triplets,
                    line: idx as u64 + 1,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !raw.triplet.is_valid_pair() {
            report.invalid_pair += 1;
            continue;
        }
        let named = |e: &Entity| e.entity_type.is_mutation_class() || !e.name.trim().is_empty();
        if !named(&raw.triplet.subject) || !named(&raw.triplet.object) {
            report.missing_name += 1;
            continue;
        }
        let key = raw.triplet.key();
        match groups.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(Group {
                    assertions: vec![raw],
                });
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                report.records_merged += 1;
                o.get_mut().assertions.push(raw);
            }
        }
    }

    // Pass 3: no-article discard and cutoff split.
    let mut records: BTreeMap<TripletKey, HypothesisRecord> = BTreeMap::new();
    for (key, group) in groups {
        match merge_records(&group.assertions, &catalog) {
            None => report.no_articles += 1,
            Some(record) if record.discovery_date >= cutoff => report.past_cutoff += 1,
            Some(record) => {
                records.insert(key, record);
            }
        }
    }
    report.records_kept = records.len() as u64;

    // Entity catalog: entities appearing in kept records. First occurrence in
    // identity order wins; an empty name is upgraded if a later record names
    // the same id.
    let mut entities: BTreeMap<String, Entity> = BTreeMap::new();
    for record in records.values() {
        for e in [&record.triplet.subject, &record.triplet.object] {
            match entities.entry(e.id.clone()) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(e.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    if o.get().name.is_empty() && !e.name.is_empty() {
                        o.get_mut().name = e.name.clone();
                    }
                }
            }
        }
    }

    Ok((
        KnowledgeBase::new(entities, records, catalog, cutoff),
        report,
    ))
}
