//! Plain-text rendering of query results for agent observations.
//!
//! Layout is stable: one item per line, `rank. payload (score=...)` for the
//! ranked retrieval operations. Agents see these strings verbatim, so any
//! change here changes recorded traces.

use crate::graph::EntityPath;
use crate::query::{BrowseResult, RelationCount, Scored};
use crate::types::{Article, Entity, HypothesisRecord, Pmid};

const EMPTY: &str = "(no results)";
const PMID_DISPLAY_CAP: usize = 8;

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fmt_score(score: f64) -> String {
    format!("(score={score:.4})")
}

fn fmt_pmids(pmids: &std::collections::BTreeSet<Pmid>) -> String {
    let shown: Vec<String> = pmids
        .iter()
        .take(PMID_DISPLAY_CAP)
        .map(|p| p.to_string())
        .collect();
    let extra = pmids.len().saturating_sub(PMID_DISPLAY_CAP);
    if extra > 0 {
        format!("[{} +{extra} more]", shown.join(","))
    } else {
        format!("[{}]", shown.join(","))
    }
}

pub fn render_entities(items: &[Scored<Entity>]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            format!(
                "{}. {} [{}] \"{}\" {}",
                i + 1,
                s.item.id,
                s.item.entity_type,
                s.item.name,
                fmt_score(s.score)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_relations(items: &[RelationCount]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, rc)| {
            format!(
                "{}. {} frequency={} {}",
                i + 1,
                rc.relation,
                rc.frequency,
                fmt_score(rc.frequency as f64)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_triplets(items: &[Scored<HypothesisRecord>]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let t = &s.item.triplet;
            format!(
                "{}. ({}|{}) -[{}]-> ({}|{}) pmids={} discovered={} {}",
                i + 1,
                t.subject.name,
                t.subject.id,
                t.relation,
                t.object.name,
                t.object.id,
                fmt_pmids(&s.item.pmids),
                s.item.discovery_date.format("%Y-%m-%d"),
                fmt_score(s.score)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_article_ids(items: &[Scored<Pmid>]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. PMID {} {}", i + 1, s.item, fmt_score(s.score)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_browse(result: &BrowseResult) -> String {
    let mut lines: Vec<String> = result
        .articles
        .iter()
        .enumerate()
        .map(|(i, a)| render_article_line(i + 1, a))
        .collect();
    if !result.missing.is_empty() {
        lines.push(format!(
            "missing pmids: {}",
            result
                .missing
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
    }
    lines.join("\n")
}

fn render_article_line(rank: usize, a: &Article) -> String {
    format!(
        "{}. PMID {} [{}] {} :: {}",
        rank,
        a.pmid,
        a.pub_date.format("%Y-%m-%d"),
        one_line(&a.title),
        one_line(&a.abstract_text)
    )
}

pub fn render_paths(items: &[EntityPath]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let mut s = format!("{}. ", i + 1);
            for (j, step) in path.steps.iter().enumerate() {
                if j > 0 {
                    let rel = step
                        .relation
                        .map(|r| r.as_str())
                        .unwrap_or("?");
                    s.push_str(&format!(" -[{rel}]- "));
                }
                s.push_str(&step.entity_id);
            }
            s.push_str(&format!(" (hops={})", path.hops()));
            s
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_mesh_ids(items: &[String]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, id)| format!("{}. {}", i + 1, id))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PathStep;
    use crate::types::{EntityType, RelationType};

    #[test]
    fn entity_lines_are_stable() {
        let items = vec![Scored {
            item: Entity::new("c1", "Glucorin", EntityType::Chemical),
            score: 2.0f64.ln(),
        }];
        assert_eq!(
            render_entities(&items),
            "1. c1 [chemical] \"Glucorin\" (score=0.6931)"
        );
        assert_eq!(render_entities(&[]), "(no results)");
    }

    #[test]
    fn relation_lines_show_frequency() {
        let items = vec![RelationCount {
            relation: RelationType::Treat,
            frequency: 2,
        }];
        assert_eq!(
            render_relations(&items),
            "1. treat frequency=2 (score=2.0000)"
        );
    }

    #[test]
    fn path_lines_are_stable() {
        let path = EntityPath {
            steps: vec![
                PathStep { entity_id: "a".into(), relation: None },
                PathStep { entity_id: "b".into(), relation: Some(RelationType::Interact) },
            ],
        };
        assert_eq!(render_paths(&[path]), "1. a -[interact]- b (hops=1)");
    }

    #[test]
    fn pmid_cap_reports_overflow() {
        let pmids: std::collections::BTreeSet<Pmid> = (1..=10).collect();
        assert_eq!(fmt_pmids(&pmids), "[1,2,3,4,5,6,7,8 +2 more]");
    }
}
