//! Test-set construction: clean post-cutoff candidates, drop anything the
//! knowledge base already contains, keep the target entity's neighborhood,
//! rank by journal impact, and group into per-entity-pair cases.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::{EvalError, Result};
use lbd_kb::ingest::ingest;
use lbd_kb::types::parse_flexible_date;
use lbd_kb::{Article, Entity, EntityType, KnowledgeBase, MeshTree, Pmid, RelationType};

/// Journal name to impact score. Scores must be non-negative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactTable {
    scores: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct ImpactLine {
    journal: String,
    impact: f64,
}

impl ImpactTable {
    pub fn insert(&mut self, journal: impl Into<String>, impact: f64) -> Result<()> {
        if impact < 0.0 {
            return Err(EvalError::InvalidInput(format!(
                "impact score must be non-negative, got {impact}"
            )));
        }
        self.scores.insert(journal.into(), impact);
        Ok(())
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<ImpactTable> {
        let mut table = ImpactTable::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvalError::InvalidInput(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ImpactLine = serde_json::from_str(&line).map_err(|e| {
                EvalError::InvalidInput(format!("impact line {}: {e}", idx + 1))
            })?;
            table.insert(parsed.journal, parsed.impact)?;
        }
        Ok(table)
    }

    pub fn score(&self, journal: &str) -> Option<f64> {
        self.scores.get(journal).copied()
    }

    /// The `top_n` journal names, ranked by score descending then name.
    pub fn top_journals(&self, top_n: usize) -> BTreeSet<String> {
        let mut entries: Vec<(&String, f64)> =
            self.scores.iter().map(|(j, s)| (j, *s)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
            .into_iter()
            .take(top_n)
            .map(|(j, _)| j.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// What "historical articles about the same entities" means for
/// related-past literature: records touching either entity, or only records
/// touching both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelatedPastMode {
    EitherEntity,
    BothEntities,
}

#[derive(Debug, Clone)]
pub struct TestSetOptions {
    pub top_journals: usize,
    pub related_past: RelatedPastMode,
}

impl Default for TestSetOptions {
    fn default() -> TestSetOptions {
        TestSetOptions {
            top_journals: 50,
            related_past: RelatedPastMode::EitherEntity,
        }
    }
}

/// One held-out case: a query entity pair, the ground-truth relations
/// discovered for it, their supporting articles, and the historical
/// articles used for the novelty judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub subject: Entity,
    pub object: Entity,
    pub truth_relations: BTreeSet<RelationType>,
    pub truth_pmids: BTreeSet<Pmid>,
    pub related_past_pmids: BTreeSet<Pmid>,
}

/// Wire schema of a test-set JSONL line. Entity names are not stored; they
/// resolve from the knowledge-base catalog at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TestCaseLine {
    subject_id: String,
    subject_type: String,
    object_id: String,
    object_type: String,
    truth_relations: Vec<String>,
    truth_pmids: Vec<Pmid>,
    related_past_pmids: Vec<Pmid>,
}

/// Historical-record PMIDs supporting any record that touches the pair.
fn related_past(
    kb: &KnowledgeBase,
    subject_id: &str,
    object_id: &str,
    mode: RelatedPastMode,
) -> BTreeSet<Pmid> {
    let mut out = BTreeSet::new();
    for record in kb.records() {
        let s = record.triplet.subject.id.as_str();
        let o = record.triplet.object.id.as_str();
        let touches_subject = s == subject_id || o == subject_id;
        let touches_object = s == object_id || o == object_id;
        let keep = match mode {
            RelatedPastMode::EitherEntity => touches_subject || touches_object,
            RelatedPastMode::BothEntities => touches_subject && touches_object,
        };
        if keep {
            out.extend(record.pmids.iter().copied());
        }
    }
    out
}

/// Build the test set from a candidate triplet stream plus its article
/// stream (both post-cutoff).
///
/// Filters apply in order: corpus cleaning (identical rules to knowledge
/// base ingestion), novelty against the knowledge base, target-entity
/// neighborhood (the entity itself or any MeSH descendant), journal impact
/// rank, and entity-catalog membership so every case is queryable. The
/// remaining candidates group by (subject, object) with truth relations and
/// supporting PMIDs unioned.
pub fn build_test_set<T: BufRead, A: BufRead>(
    candidates: T,
    candidate_articles: A,
    kb: &KnowledgeBase,
    mesh: Option<&MeshTree>,
    target_entity: &str,
    impact: &ImpactTable,
    options: &TestSetOptions,
) -> Result<(Vec<TestCase>, BTreeMap<Pmid, Article>)> {
    // cleaning: reuse the ingestion pipeline with a far-future cutoff so the
    // cutoff split never triggers
    let far_future = parse_flexible_date("9999-01-01").expect("valid date");
    let (candidate_kb, _report) = ingest(candidates, candidate_articles, far_future)?;

    let mut target_ids: BTreeSet<String> = BTreeSet::from([target_entity.to_string()]);
    if let Some(mesh) = mesh {
        if mesh.contains(target_entity) {
            target_ids.extend(mesh.descendants(target_entity)?);
        }
    }

    let top = impact.top_journals(options.top_journals);

    struct PairGroup {
        truth_relations: BTreeSet<RelationType>,
        truth_pmids: BTreeSet<Pmid>,
    }
    let mut groups: BTreeMap<(String, String), PairGroup> = BTreeMap::new();
    let mut kept_articles: BTreeMap<Pmid, Article> = BTreeMap::new();

    for record in candidate_kb.records() {
        // novelty: the directed triplet must be absent from the KB
        if kb.contains_key(&record.key()) {
            continue;
        }
        let subject_id = &record.triplet.subject.id;
        let object_id = &record.triplet.object.id;
        // target neighborhood
        if !target_ids.contains(subject_id) && !target_ids.contains(object_id) {
            continue;
        }
        // support must not leak from the historical catalog
        let pmids: BTreeSet<Pmid> = record
            .pmids
            .iter()
            .copied()
            .filter(|p| kb.article(*p).is_none())
            .collect();
        if pmids.is_empty() {
            continue;
        }
        // journal rank: the best-impact supporting journal must be in the top set
        let best_journal = pmids
            .iter()
            .filter_map(|p| candidate_kb.article(*p))
            .filter_map(|a| impact.score(&a.journal).map(|s| (s, a.journal.clone())))
            .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)));
        let Some((_, journal)) = best_journal else {
            continue;
        };
        if !top.contains(&journal) {
            continue;
        }
        // the pair must be queryable against the knowledge base
        if kb.entity(subject_id).is_none() || kb.entity(object_id).is_none() {
            continue;
        }

        let group = groups
            .entry((subject_id.clone(), object_id.clone()))
            .or_insert_with(|| PairGroup {
                truth_relations: BTreeSet::new(),
                truth_pmids: BTreeSet::new(),
            });
        group.truth_relations.insert(record.triplet.relation);
        group.truth_pmids.extend(pmids.iter().copied());
        for p in &pmids {
            if let Some(a) = candidate_kb.article(*p) {
                kept_articles.insert(*p, a.clone());
            }
        }
    }

    let cases = groups
        .into_iter()
        .map(|((subject_id, object_id), group)| {
            let subject = kb.entity(&subject_id).expect("filtered above").clone();
            let object = kb.entity(&object_id).expect("filtered above").clone();
            let related_past_pmids =
                related_past(kb, &subject_id, &object_id, options.related_past);
            TestCase {
                subject,
                object,
                truth_relations: group.truth_relations,
                truth_pmids: group.truth_pmids,
                related_past_pmids,
            }
        })
        .collect();
    Ok((cases, kept_articles))
}

/// Serialize a test set as JSONL.
pub fn write_test_set(cases: &[TestCase]) -> String {
    let mut out = String::new();
    for case in cases {
        let line = TestCaseLine {
            subject_id: case.subject.id.clone(),
            subject_type: case.subject.entity_type.as_str().to_string(),
            object_id: case.object.id.clone(),
            object_type: case.object.entity_type.as_str().to_string(),
            truth_relations: case
                .truth_relations
                .iter()
                .map(|r| r.as_str().to_string())
                .collect(),
            truth_pmids: case.truth_pmids.iter().copied().collect(),
            related_past_pmids: case.related_past_pmids.iter().copied().collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("serializes"));
        out.push('\n');
    }
    out
}

/// Load a test set, resolving entity names from the knowledge base catalog.
pub fn load_test_set<R: BufRead>(reader: R, kb: &KnowledgeBase) -> Result<Vec<TestCase>> {
    let mut cases = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::InvalidInput(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TestCaseLine = serde_json::from_str(&line)
            .map_err(|e| EvalError::InvalidInput(format!("test case line {}: {e}", idx + 1)))?;
        let resolve = |id: &str, type_str: &str| -> Result<Entity> {
            let declared = EntityType::parse(type_str)?;
            match kb.entity(id) {
                Some(e) => Ok(e.clone()),
                // tolerated so hand-written fixtures can reference entities
                // outside the catalog; the episode layer still requires names
                None => Ok(Entity::new(id, "", declared)),
            }
        };
        let mut truth_relations = BTreeSet::new();
        for r in &parsed.truth_relations {
            truth_relations.insert(RelationType::parse(r)?);
        }
        if truth_relations.is_empty() {
            return Err(EvalError::InvalidInput(format!(
                "test case line {}: truth_relations must be non-empty",
                idx + 1
            )));
        }
        cases.push(TestCase {
            subject: resolve(&parsed.subject_id, &parsed.subject_type)?,
            object: resolve(&parsed.object_id, &parsed.object_type)?,
            truth_relations,
            truth_pmids: parsed.truth_pmids.into_iter().collect(),
            related_past_pmids: parsed.related_past_pmids.into_iter().collect(),
        });
    }
    Ok(cases)
}
