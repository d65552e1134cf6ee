//! Retrieval operations checked item-for-item (order included) against a
//! naive linear-scan oracle on randomized corpora and filters.

use std::collections::BTreeSet;
use std::io::Cursor;
use std::sync::Arc;

use lbd_kb::ingest::ingest;
use lbd_kb::query::{EntityRef, QueryEngine, QueryFilter};
use lbd_kb::types::{
    parse_flexible_date, validate_pair, Entity, EntityType, KnowledgeBase, Pmid, RelationType,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const WORDS: [&str; 18] = [
    "glucose", "insulin", "receptor", "hepatic", "retinal", "kinase", "uptake", "signaling",
    "trial", "cohort", "marker", "serum", "chronic", "acute", "expression", "pathway", "binding",
    "therapy",
];

fn words(rng: &mut StdRng, n: usize) -> String {
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

struct Corpus {
    kb: KnowledgeBase,
}

fn random_corpus(rng: &mut StdRng, n_records: usize, n_articles: usize) -> Corpus {
    let mut articles = String::new();
    for pmid in 1..=n_articles as Pmid {
        let tn = rng.gen_range(2..6);
        let title = words(rng, tn);
        let an = rng.gen_range(4..12);
        let abs = words(rng, an);
        let year = rng.gen_range(1990..2023);
        articles.push_str(&format!(
            r#"{{"pmid":{pmid},"title":"{title}","abstract":"{abs}","pub_date":"{year}-01-01","journal":"J{}"}}"#,
            rng.gen_range(1..5)
        ));
        articles.push('\n');
    }
    let types = [EntityType::Chemical, EntityType::Disease, EntityType::Gene, EntityType::Snp];
    let entities: Vec<Entity> = (0..30)
        .map(|i| {
            let t = types[i % types.len()];
            Entity::new(
                format!("{}{i:02}", t.as_str().chars().next().unwrap()),
                { let k = rng.gen_range(1..3); words(rng, k) },
                t,
            )
        })
        .collect();
    let mut triplets = String::new();
    let mut made = 0;
    while made < n_records {
        let s = entities.choose(rng).unwrap();
        let o = entities.choose(rng).unwrap();
        let r = RelationType::ALL[rng.gen_range(0..12)];
        if s.id == o.id || !validate_pair(r, s.entity_type, o.entity_type) {
            continue;
        }
        let n_pmids = rng.gen_range(1..4);
        let pmids: Vec<String> = (0..n_pmids)
            .map(|_| rng.gen_range(1..=n_articles).to_string())
            .collect();
        triplets.push_str(&format!(
            r#"{{"subject_id":"{}","subject_name":"{}","subject_type":"{}","relation":"{}","object_id":"{}","object_name":"{}","object_type":"{}","pmids":[{}]}}"#,
            s.id, s.name, s.entity_type, r, o.id, o.name, o.entity_type, pmids.join(",")
        ));
        triplets.push('\n');
        made += 1;
    }
    let (kb, _) = ingest(
        Cursor::new(triplets),
        Cursor::new(articles),
        parse_flexible_date("2024-01-01").unwrap(),
    )
    .unwrap();
    Corpus { kb }
}

fn random_filter(rng: &mut StdRng, kb: &KnowledgeBase) -> QueryFilter {
    let entities: Vec<&Entity> = kb.entities().collect();
    let pick_ref = |rng: &mut StdRng| -> EntityRef {
        let e = entities.choose(rng).unwrap();
        match rng.gen_range(0..4) {
            0 => EntityRef::by_id(e.id.clone()),
            1 => EntityRef::by_name(e.name.clone()),
            2 => EntityRef {
                entity_type: Some(e.entity_type),
                ..EntityRef::default()
            },
            _ => EntityRef {
                id: Some(e.id.clone()),
                name: Some(e.name.clone()),
                entity_type: Some(e.entity_type),
            },
        }
    };
    let mut f = QueryFilter::default();
    if rng.gen_bool(0.5) {
        f.head_entities = Some((0..rng.gen_range(1..3)).map(|_| pick_ref(rng)).collect());
    }
    if rng.gen_bool(0.5) {
        f.tail_entities = Some((0..rng.gen_range(1..3)).map(|_| pick_ref(rng)).collect());
    }
    if rng.gen_bool(0.4) {
        f.relations = Some(
            (0..rng.gen_range(1..4))
                .map(|_| RelationType::ALL[rng.gen_range(0..12)])
                .collect(),
        );
    }
    if rng.gen_bool(0.3) {
        let max = kb.article_count().max(1) as Pmid;
        f.pmids = Some((0..rng.gen_range(1..5)).map(|_| rng.gen_range(1..=max + 3)).collect());
    }
    if rng.gen_bool(0.5) {
        let k = rng.gen_range(1..4);
        f.text_description = Some(words(rng, k));
    }
    if rng.gen_bool(0.7) {
        f.limit = Some(rng.gen_range(1..25));
    }
    f
}

// ---- independent linear-scan oracle -------------------------------------

fn oracle_tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

/// Brute-force score over an explicit document list.
fn oracle_score(query: &str, doc: &str, docs: &[(String, String)]) -> f64 {
    let n = docs.len() as f64;
    let mut score = 0.0;
    for token in oracle_tokenize(query) {
        let df = docs
            .iter()
            .filter(|(_, text)| oracle_tokenize(text).contains(&token))
            .count() as f64;
        if df == 0.0 {
            continue;
        }
        let tf = oracle_tokenize(doc).iter().filter(|t| **t == token).count() as f64;
        score += tf * (1.0 + n / df).ln();
    }
    score
}

fn matches_ref(r: &EntityRef, e: &Entity) -> bool {
    r.id.as_ref().is_none_or(|id| *id == e.id)
        && r.name.as_ref().is_none_or(|n| n.eq_ignore_ascii_case(&e.name))
        && r.entity_type.is_none_or(|t| t == e.entity_type)
}

fn record_matches(f: &QueryFilter, r: &lbd_kb::HypothesisRecord) -> bool {
    let heads_ok = match f.head_entities.as_deref().filter(|v| !v.is_empty()) {
        Some(hs) => hs.iter().any(|h| matches_ref(h, &r.triplet.subject)),
        None => true,
    };
    let tails_ok = match f.tail_entities.as_deref().filter(|v| !v.is_empty()) {
        Some(ts) => ts.iter().any(|t| matches_ref(t, &r.triplet.object)),
        None => true,
    };
    let rel_ok = f.relations.as_ref().is_none_or(|rs| rs.contains(&r.triplet.relation));
    let pmid_ok = f.pmids.as_ref().is_none_or(|ps| ps.iter().any(|p| r.pmids.contains(p)));
    heads_ok && tails_ok && rel_ok && pmid_ok
}

#[test]
fn retrieval_ops_match_linear_scan_oracle() {
    let mut rng = StdRng::seed_from_u64(20240101);
    let corpus = random_corpus(&mut rng, 120, 40);
    let kb = Arc::new(corpus.kb);
    let engine = QueryEngine::new(kb.clone());

    let article_docs: Vec<(String, String)> = kb
        .articles()
        .map(|a| (a.pmid.to_string(), a.text()))
        .collect();
    let name_docs: Vec<(String, String)> = kb
        .entities()
        .map(|e| (e.id.clone(), e.name.clone()))
        .collect();
    let text_of = |pmid: Pmid| kb.article(pmid).unwrap().text();

    for round in 0..80 {
        let f = random_filter(&mut rng, &kb);
        let limit = f.effective_limit();
        let text = f
            .text_description
            .as_deref()
            .map(str::trim)
            .filter(|t| !t.is_empty());

        // -- entities
        if text.is_some() || f.head_entities.is_some() || f.tail_entities.is_some() {
            let protos: Vec<&EntityRef> = f
                .head_entities
                .iter()
                .flatten()
                .chain(f.tail_entities.iter().flatten())
                .collect();
            let mut expect: Vec<(String, f64)> = kb
                .entities()
                .filter(|e| protos.is_empty() || protos.iter().any(|p| matches_ref(p, e)))
                .filter_map(|e| match text {
                    Some(q) => {
                        let s = oracle_score(q, &e.name, &name_docs);
                        (s > 0.0).then_some((e.id.clone(), s))
                    }
                    None => Some((e.id.clone(), 0.0)),
                })
                .collect();
            expect.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            expect.truncate(limit);
            let got: Vec<(String, f64)> = engine
                .get_entities(&f)
                .unwrap()
                .into_iter()
                .map(|s| (s.item.id, s.score))
                .collect();
            assert_eq!(got, expect, "entities mismatch on round {round}: {f:?}");
        }

        // -- relations
        if f.head_entities.is_some() || f.tail_entities.is_some() {
            let mut counts: std::collections::BTreeMap<RelationType, u64> = Default::default();
            for r in kb.records().filter(|r| record_matches(&f, r)) {
                *counts.entry(r.triplet.relation).or_insert(0) += 1;
            }
            let mut expect: Vec<(RelationType, u64)> = counts.into_iter().collect();
            expect.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.as_str().cmp(b.0.as_str())));
            expect.truncate(limit);
            let got: Vec<(RelationType, u64)> = engine
                .get_relations(&f)
                .unwrap()
                .into_iter()
                .map(|rc| (rc.relation, rc.frequency))
                .collect();
            assert_eq!(got, expect, "relations mismatch on round {round}: {f:?}");
        }

        let effectively_empty = f.head_entities.is_none()
            && f.tail_entities.is_none()
            && f.relations.is_none()
            && f.pmids.is_none()
            && text.is_none();
        if effectively_empty {
            assert!(engine.get_triplets(&f).is_err());
            continue;
        }

        // -- triplets
        let mut expect: Vec<(lbd_kb::TripletKey, f64)> = kb
            .records()
            .filter(|r| record_matches(&f, r))
            .map(|r| {
                let score = match text {
                    Some(q) => r
                        .pmids
                        .iter()
                        .map(|p| oracle_score(q, &text_of(*p), &article_docs))
                        .fold(0.0f64, f64::max),
                    None => r.pmids.len() as f64,
                };
                (r.key(), score)
            })
            .collect();
        expect.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        expect.truncate(limit);
        let got: Vec<(lbd_kb::TripletKey, f64)> = engine
            .get_triplets(&f)
            .unwrap()
            .into_iter()
            .map(|s| (s.item.key(), s.score))
            .collect();
        assert_eq!(got, expect, "triplets mismatch on round {round}: {f:?}");

        // -- articles
        let entity_constrained =
            f.head_entities.is_some() || f.tail_entities.is_some() || f.relations.is_some();
        let mut pool: Vec<Pmid> = if entity_constrained {
            let mut set = BTreeSet::new();
            for r in kb.records().filter(|r| record_matches(&f, r)) {
                set.extend(r.pmids.iter().copied());
            }
            set.into_iter().collect()
        } else {
            kb.articles().map(|a| a.pmid).collect()
        };
        if let Some(ps) = &f.pmids {
            pool.retain(|p| ps.contains(p));
        }
        let mut expect: Vec<(Pmid, f64)> = pool
            .into_iter()
            .map(|p| {
                let score = match text {
                    Some(q) => oracle_score(q, &text_of(p), &article_docs),
                    None => 0.0,
                };
                (p, score)
            })
            .collect();
        expect.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        expect.truncate(limit);
        let got: Vec<(Pmid, f64)> = engine
            .get_articles(&f)
            .unwrap()
            .into_iter()
            .map(|s| (s.item, s.score))
            .collect();
        assert_eq!(got, expect, "articles mismatch on round {round}: {f:?}");

        // -- browse (request order + misses)
        if let Some(ps) = &f.pmids {
            let known: Vec<Pmid> = ps.iter().copied().filter(|p| kb.article(*p).is_some()).collect();
            match engine.browse_articles(ps) {
                Ok(out) => {
                    assert_eq!(
                        out.articles.iter().map(|a| a.pmid).collect::<Vec<_>>(),
                        known
                    );
                    assert_eq!(
                        out.missing,
                        ps.iter().copied().filter(|p| kb.article(*p).is_none()).collect::<Vec<_>>()
                    );
                }
                Err(_) => assert!(known.is_empty()),
            }
        }
    }
}

#[test]
fn queries_are_deterministic_across_engines() {
    let mut rng = StdRng::seed_from_u64(99);
    let corpus = random_corpus(&mut rng, 80, 25);
    let kb = Arc::new(corpus.kb);
    let e1 = QueryEngine::new(kb.clone());
    let e2 = QueryEngine::new(kb.clone());
    for _ in 0..40 {
        let f = random_filter(&mut rng, &kb);
        if f.head_entities.is_some() || f.tail_entities.is_some() || f.text_description.is_some() {
            let a = e1.get_entities(&f).map(|v| format!("{v:?}"));
            let b = e2.get_entities(&f).map(|v| format!("{v:?}"));
            assert_eq!(a.ok(), b.ok());
        }
        let a = e1.get_triplets(&f).map(|v| format!("{v:?}"));
        let b = e2.get_triplets(&f).map(|v| format!("{v:?}"));
        assert_eq!(a.ok(), b.ok());
    }
}

#[test]
fn engine_serves_concurrent_readers_identically() {
    let mut rng = StdRng::seed_from_u64(7777);
    let corpus = random_corpus(&mut rng, 60, 20);
    let kb = Arc::new(corpus.kb);
    let engine = Arc::new(QueryEngine::new(kb.clone()));
    let filters: Vec<QueryFilter> = (0..20).map(|_| random_filter(&mut rng, &kb)).collect();
    let reference: Vec<String> = filters
        .iter()
        .map(|f| format!("{:?}", engine.get_triplets(f).map_err(|e| e.to_string())))
        .collect();
    std::thread::scope(|scope| {
        for _ in 0..8 {
            let engine = Arc::clone(&engine);
            let filters = &filters;
            let reference = &reference;
            scope.spawn(move || {
                for (f, expected) in filters.iter().zip(reference) {
                    let got = format!("{:?}", engine.get_triplets(f).map_err(|e| e.to_string()));
                    assert_eq!(&got, expected);
                }
            });
        }
    });
}
