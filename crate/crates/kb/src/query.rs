//! The filterable retrieval surface over an immutable knowledge base.
//!
//! All operations are pure reads with total, deterministic ordering:
//! score descending, then ascending identity. Relevance is deterministic
//! lexical scoring over a text index, never embeddings.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KbError, Result};
use crate::index::TextIndex;
use crate::types::{
    Article, Entity, EntityId, EntityType, HypothesisRecord, KnowledgeBase, Pmid, RelationType,
};

/// Default number of items returned when a filter sets no limit.
pub const DEFAULT_LIMIT: usize = 20;

/// A partial entity prototype used in filters: any subset of id, name, and
/// type may be set; every set field must match. Name matching is
/// case-insensitive (ASCII).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_type: Option<EntityType>,
}

impl EntityRef {
    pub fn by_id(id: impl Into<String>) -> EntityRef {
        EntityRef {
            id: Some(id.into()),
            ..EntityRef::default()
        }
    }

    pub fn by_name(name: impl Into<String>) -> EntityRef {
        EntityRef {
            name: Some(name.into()),
            ..EntityRef::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.id.is_none() && self.name.is_none() && self.entity_type.is_none()
    }

    pub fn matches(&self, e: &Entity) -> bool {
        if let Some(id) = &self.id {
            if *id != e.id {
                return false;
            }
        }
        if let Some(name) = &self.name {
            if !name.eq_ignore_ascii_case(&e.name) {
                return false;
            }
        }
        if let Some(t) = self.entity_type {
            if t != e.entity_type {
                return false;
            }
        }
        true
    }
}

/// The optional-parameter bundle driving all retrieval APIs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_entities: Option<Vec<EntityRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_entities: Option<Vec<EntityRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<Vec<RelationType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmids: Option<Vec<Pmid>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

impl QueryFilter {
    pub fn effective_limit(&self) -> usize {
        self.limit.unwrap_or(DEFAULT_LIMIT)
    }

    /// Text description with blank strings normalized away.
    pub fn text(&self) -> Option<&str> {
        self.text_description
            .as_deref()
            .map(str::trim)
            .filter(|t| !t.is_empty())
    }

    fn heads(&self) -> Option<&[EntityRef]> {
        self.head_entities.as_deref().filter(|v| !v.is_empty())
    }

    fn tails(&self) -> Option<&[EntityRef]> {
        self.tail_entities.as_deref().filter(|v| !v.is_empty())
    }

    fn validate_common(&self) -> Result<()> {
        if self.effective_limit() == 0 {
            return Err(KbError::InvalidFilter("limit must be >= 1".into()));
        }
        for r in self
            .head_entities
            .iter()
            .flatten()
            .chain(self.tail_entities.iter().flatten())
        {
            if r.is_empty() {
                return Err(KbError::InvalidFilter(
                    "entity reference must set at least one of id, name, entity_type".into(),
                ));
            }
        }
        Ok(())
    }

    fn has_entity_or_relation_constraint(&self) -> bool {
        self.heads().is_some() || self.tails().is_some() || self.relations.is_some()
    }

    fn is_effectively_empty(&self) -> bool {
        self.heads().is_none()
            && self.tails().is_none()
            && self.relations.is_none()
            && self.pmids.is_none()
            && self.text().is_none()
    }
}

/// An item with the deterministic ranking score it was ordered by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored<T> {
    pub item: T,
    pub score: f64,
}

/// A relation type with the number of matching records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCount {
    pub relation: RelationType,
    pub frequency: u64,
}

/// Result of `browse_articles`: found articles in request order plus the
/// unknown PMIDs reported alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrowseResult {
    pub articles: Vec<Article>,
    pub missing: Vec<Pmid>,
}

/// Read-only query engine over a knowledge base, with a name index over the
/// entity catalog and a text index over article titles and abstracts.
#[derive(Debug, Clone)]
pub struct QueryEngine {
    kb: Arc<KnowledgeBase>,
    name_index: TextIndex<EntityId>,
    article_index: TextIndex<Pmid>,
}

impl QueryEngine {
    pub fn new(kb: Arc<KnowledgeBase>) -> QueryEngine {
        let mut name_index = TextIndex::new();
        for e in kb.entities() {
            name_index.add_document(e.id.clone(), &e.name);
        }
        let mut article_index = TextIndex::new();
        for a in kb.articles() {
            article_index.add_document(a.pmid, &a.text());
        }
        QueryEngine {
            kb,
            name_index,
            article_index,
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn article_index(&self) -> &TextIndex<Pmid> {
        &self.article_index
    }

    /// Lexical score of `query` against one indexed article.
    pub fn score_text(&self, query: &str, pmid: Pmid) -> Result<f64> {
        self.article_index.score(query, &pmid)
    }

    /// Records satisfying every provided entity/relation/pmid constraint.
    fn matching_records<'a>(&'a self, filter: &QueryFilter) -> Vec<&'a HypothesisRecord> {
        self.kb
            .records()
            .filter(|r| {
                if let Some(heads) = filter.heads() {
                    if !heads.iter().any(|h| h.matches(&r.triplet.subject)) {
                        return false;
                    }
                }
                if let Some(tails) = filter.tails() {
                    if !tails.iter().any(|t| t.matches(&r.triplet.object)) {
                        return false;
                    }
                }
                if let Some(relations) = &filter.relations {
                    if !relations.contains(&r.triplet.relation) {
                        return false;
                    }
                }
                if let Some(pmids) = &filter.pmids {
                    if !pmids.iter().any(|p| r.pmids.contains(p)) {
                        return false;
                    }
                }
                true
            })
            .collect()
    }

    /// Entities matching the filter's prototypes, ranked by name relevance
    /// when a text description is given.
    pub fn get_entities(&self, filter: &QueryFilter) -> Result<Vec<Scored<Entity>>> {
        filter.validate_common()?;
        let protos: Vec<&EntityRef> = filter
            .head_entities
            .iter()
            .flatten()
            .chain(filter.tail_entities.iter().flatten())
            .collect();
        if filter.text().is_none() && protos.is_empty() {
            return Err(KbError::InvalidFilter(
                "get_entities needs text_description and/or entity lists".into(),
            ));
        }
        let candidates = self
            .kb
            .entities()
            .filter(|e| protos.is_empty() || protos.iter().any(|p| p.matches(e)));
        let mut out: Vec<Scored<Entity>> = match filter.text() {
            Some(text) => {
                let scores = self.name_index.scores(text);
                candidates
                    .filter_map(|e| {
                        scores.get(&e.id).filter(|s| **s > 0.0).map(|s| Scored {
                            item: e.clone(),
                            score: *s,
                        })
                    })
                    .collect()
            }
            None => candidates
                .map(|e| Scored {
                    item: e.clone(),
                    score: 0.0,
                })
                .collect(),
        };
        out.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.item.id.cmp(&b.item.id))
        });
        out.truncate(filter.effective_limit());
        Ok(out)
    }

    /// Relation types over records matching the entity constraints, with
    /// record counts, sorted by descending frequency then name.
    pub fn get_relations(&self, filter: &QueryFilter) -> Result<Vec<RelationCount>> {
        filter.validate_common()?;
        if filter.heads().is_none() && filter.tails().is_none() {
            return Err(KbError::InvalidFilter(
                "get_relations needs head_entities and/or tail_entities".into(),
            ));
        }
        let mut counts: std::collections::BTreeMap<RelationType, u64> =
            std::collections::BTreeMap::new();
        for r in self.matching_records(filter) {
            *counts.entry(r.triplet.relation).or_insert(0) += 1;
        }
        let mut out: Vec<RelationCount> = counts
            .into_iter()
            .map(|(relation, frequency)| RelationCount {
                relation,
                frequency,
            })
            .collect();
        out.sort_by(|a, b| {
            b.frequency
                .cmp(&a.frequency)
                .then_with(|| a.relation.as_str().cmp(b.relation.as_str()))
        });
        out.truncate(filter.effective_limit());
        Ok(out)
    }

    /// Records satisfying all provided constraints. With a text description,
    /// ranked by the best lexical score over supporting articles; otherwise
    /// by descending support size.
    pub fn get_triplets(&self, filter: &QueryFilter) -> Result<Vec<Scored<HypothesisRecord>>> {
        filter.validate_common()?;
        if filter.is_effectively_empty() {
            return Err(KbError::InvalidFilter(
                "get_triplets needs at least one filter field".into(),
            ));
        }
        let records = self.matching_records(filter);
        let mut out: Vec<Scored<HypothesisRecord>> = match filter.text() {
            Some(text) => {
                let scores = self.article_index.scores(text);
                records
                    .into_iter()
                    .map(|r| {
                        let best = r
                            .pmids
                            .iter()
                            .filter_map(|p| scores.get(p).copied())
                            .fold(0.0f64, f64::max);
                        Scored {
                            item: r.clone(),
                            score: best,
                        }
                    })
                    .collect()
            }
            None => records
                .into_iter()
                .map(|r| Scored {
                    item: r.clone(),
                    score: r.pmids.len() as f64,
                })
                .collect(),
        };
        out.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.item.key().cmp(&b.item.key()))
        });
        out.truncate(filter.effective_limit());
        Ok(out)
    }

    /// PMIDs from the candidate pool (articles supporting matching records
    /// when entity/relation constraints are set, else the whole catalog),
    /// ranked by the text description when given.
    pub fn get_articles(&self, filter: &QueryFilter) -> Result<Vec<Scored<Pmid>>> {
        filter.validate_common()?;
        if filter.is_effectively_empty() {
            return Err(KbError::InvalidFilter(
                "get_articles needs at least one filter field".into(),
            ));
        }
        let mut pool: Vec<Pmid> = if filter.has_entity_or_relation_constraint() {
            let mut set = std::collections::BTreeSet::new();
            for r in self.matching_records(filter) {
                set.extend(r.pmids.iter().copied());
            }
            set.into_iter().collect()
        } else {
            self.kb.articles().map(|a| a.pmid).collect()
        };
        if let Some(pmids) = &filter.pmids {
            pool.retain(|p| pmids.contains(p));
        }
        let mut out: Vec<Scored<Pmid>> = match filter.text() {
            Some(text) => {
                let scores = self.article_index.scores(text);
                pool.into_iter()
                    .map(|p| Scored {
                        item: p,
                        score: scores.get(&p).copied().unwrap_or(0.0),
                    })
                    .collect()
            }
            None => pool
                .into_iter()
                .map(|p| Scored {
                    item: p,
                    score: 0.0,
                })
                .collect(),
        };
        out.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.item.cmp(&b.item))
        });
        out.truncate(filter.effective_limit());
        Ok(out)
    }

    /// Full article metadata for the requested PMIDs, in request order, with
    /// unknown PMIDs reported alongside.
    pub fn browse_articles(&self, pmids: &[Pmid]) -> Result<BrowseResult> {
        if pmids.is_empty() {
            return Err(KbError::InvalidFilter("pmid list must be non-empty".into()));
        }
        let mut articles = Vec::new();
        let mut missing = Vec::new();
        for &pmid in pmids {
            match self.kb.article(pmid) {
                Some(a) => articles.push(a.clone()),
                None => missing.push(pmid),
            }
        }
        if articles.is_empty() {
            return Err(KbError::NotFound(format!(
                "none of the {} requested pmids exist",
                pmids.len()
            )));
        }
        Ok(BrowseResult { articles, missing })
    }

    /// Resolve an entity prototype to one catalog entity: the match with the
    /// smallest id.
    pub fn resolve_entity(&self, proto: &EntityRef) -> Result<Entity> {
        if proto.is_empty() {
            return Err(KbError::InvalidFilter("empty entity reference".into()));
        }
        self.kb
            .entities()
            .find(|e| proto.matches(e))
            .cloned()
            .ok_or_else(|| KbError::NotFound(format!("no entity matches {proto:?}")))
    }

    /// Static description of one relation type.
    pub fn relation_description(&self, relation: RelationType) -> &'static str {
        relation.description()
    }

    /// Catalog metadata for one entity, resolved from a prototype.
    pub fn entity_description(&self, proto: &EntityRef) -> Result<String> {
        Ok(describe_entity(&self.resolve_entity(proto)?))
    }
}

/// Canonical one-line rendering of a catalog entity.
pub fn describe_entity(e: &Entity) -> String {
    format!(
        "Entity(id={}, name=\"{}\", entity_type={})",
        e.id, e.name, e.entity_type
    )
}
