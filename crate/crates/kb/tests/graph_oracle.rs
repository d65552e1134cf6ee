//! Shortest-path search checked against a brute-force BFS oracle on random
//! graphs, plus MeSH hierarchy symmetry properties.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Cursor;

use lbd_kb::graph::build_graph;
use lbd_kb::ingest::ingest;
use lbd_kb::mesh::MeshTree;
use lbd_kb::types::parse_flexible_date;
use lbd_kb::KnowledgeBase;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const RELATIONS: [&str; 3] = ["interact", "negative_correlate", "positive_correlate"];

fn random_kb(rng: &mut StdRng, n_nodes: usize, n_edges: usize) -> (KnowledgeBase, Vec<(String, String)>) {
    let node = |i: usize| format!("g{i:03}");
    let mut lines = String::new();
    let mut pairs = Vec::new();
    for _ in 0..n_edges {
        let s = node(rng.gen_range(0..n_nodes));
        let mut o = node(rng.gen_range(0..n_nodes));
        while o == s {
            o = node(rng.gen_range(0..n_nodes));
        }
        let r = RELATIONS[rng.gen_range(0..RELATIONS.len())];
        lines.push_str(&format!(
            r#"{{"subject_id":"{s}","subject_name":"{s}","subject_type":"gene","relation":"{r}","object_id":"{o}","object_name":"{o}","object_type":"gene","pmids":[1]}}"#
        ));
        lines.push('\n');
        pairs.push((s, o));
    }
    let articles = r#"{"pmid":1,"title":"t","abstract":"a","pub_date":"2000-01-01","journal":"J"}"#;
    let (kb, report) = ingest(
        Cursor::new(lines),
        Cursor::new(articles),
        parse_flexible_date("2024-01-01").unwrap(),
    )
    .unwrap();
    assert_eq!(report.invalid_pair, 0);
    (kb, pairs)
}

/// Oracle: undirected BFS distances from `src` over the raw edge list.
fn oracle_distances(pairs: &[(String, String)], src: &str) -> BTreeMap<String, usize> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (s, o) in pairs {
        adj.entry(s).or_default().insert(o);
        adj.entry(o).or_default().insert(s);
    }
    let mut dist = BTreeMap::new();
    dist.insert(src.to_string(), 0usize);
    let mut queue = VecDeque::from([src.to_string()]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if let Some(neigh) = adj.get(u.as_str()) {
            for v in neigh {
                if !dist.contains_key(*v) {
                    dist.insert(v.to_string(), du + 1);
                    queue.push_back(v.to_string());
                }
            }
        }
    }
    dist
}

#[test]
fn path_lengths_match_bfs_oracle_on_random_graphs() {
    let mut rng = StdRng::seed_from_u64(42);
    for round in 0..30 {
        let n_nodes = rng.gen_range(5..60);
        let n_edges = rng.gen_range(4..200);
        let (kb, pairs) = random_kb(&mut rng, n_nodes, n_edges);
        let g = build_graph(&kb);
        let nodes: Vec<String> = kb.entities().map(|e| e.id.clone()).collect();
        if nodes.is_empty() {
            continue;
        }
        // sample source nodes; compare every destination
        for _ in 0..3 {
            let src = &nodes[rng.gen_range(0..nodes.len())];
            let dist = oracle_distances(&pairs, src);
            for dst in &nodes {
                let paths = g.shortest_entity_paths(src, dst, 4, usize::MAX).unwrap();
                match dist.get(dst) {
                    None => assert!(paths.is_empty(), "round {round}: {src}->{dst} should be unreachable"),
                    Some(&d) => {
                        assert!(!paths.is_empty(), "round {round}: {src}->{dst} should be reachable");
                        for p in &paths {
                            assert_eq!(p.hops(), d, "round {round}: wrong hop count {src}->{dst}");
                            // validity: consecutive nodes adjacent, no repeats
                            let ids = p.node_ids();
                            assert_eq!(ids.len(), ids.iter().collect::<BTreeSet<_>>().len());
                            for w in ids.windows(2) {
                                let adjacent = pairs.iter().any(|(s, o)| {
                                    (s == w[0] && o == w[1]) || (s == w[1] && o == w[0])
                                });
                                assert!(adjacent, "round {round}: non-edge in path");
                            }
                        }
                        // lexicographic, unique ordering
                        let seqs: Vec<Vec<&str>> = paths.iter().map(|p| p.node_ids()).collect();
                        let mut sorted = seqs.clone();
                        sorted.sort();
                        sorted.dedup();
                        assert_eq!(seqs, sorted, "round {round}: paths out of order");
                    }
                }
            }
        }
    }
}

#[test]
fn hop_counts_are_symmetric() {
    let mut rng = StdRng::seed_from_u64(7);
    let (kb, _) = random_kb(&mut rng, 30, 80);
    let g = build_graph(&kb);
    let nodes: Vec<String> = kb.entities().map(|e| e.id.clone()).collect();
    for a in nodes.iter().take(8) {
        for b in nodes.iter().take(8) {
            let fwd = g.shortest_entity_paths(a, b, 1, usize::MAX).unwrap();
            let bwd = g.shortest_entity_paths(b, a, 1, usize::MAX).unwrap();
            assert_eq!(
                fwd.first().map(|p| p.hops()),
                bwd.first().map(|p| p.hops()),
                "asymmetry between {a} and {b}"
            );
        }
    }
}

fn fixture_tree(n: usize) -> MeshTree {
    // a deterministic 3-ary tree with n entities, entity i owning number(i)
    fn number(i: usize) -> String {
        if i == 0 {
            "R00".to_string()
        } else {
            format!("{}.{:02}", number((i - 1) / 3), (i - 1) % 3)
        }
    }
    let mut t = MeshTree::default();
    for i in 0..n {
        t.insert(&format!("e{i:02}"), &number(i)).unwrap();
    }
    t
}

#[test]
fn mesh_symmetry_properties_hold_on_fixture_tree() {
    let t = fixture_tree(50);
    for i in 0..50 {
        let e = format!("e{i:02}");
        for child in t.children(&e).unwrap() {
            assert!(t.parents(&child).unwrap().contains(&e));
        }
        for parent in t.parents(&e).unwrap() {
            assert!(t.children(&parent).unwrap().contains(&e));
        }
        let sibs = t.siblings(&e).unwrap();
        assert!(!sibs.contains(&e), "sibling relation must be irreflexive");
        for s in sibs {
            assert!(t.siblings(&s).unwrap().contains(&e), "sibling relation must be symmetric");
        }
    }
}
