//! Directed labeled knowledge graph over entities, with undirected
//! shortest-path search.
//!
//! Storage keeps every record as one directed edge; pathfinding treats edges
//! as undirected and reports the stored relation regardless of traversal
//! direction. Node ids are interned to integer indices so path search does
//! no string work; ids are interned in sorted order, which makes index
//! order coincide with lexicographic id order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{KbError, Result};
use crate::types::{EntityId, KnowledgeBase, Pmid, RelationType};

/// One stored edge: subject -> object with its relation and support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub object_id: EntityId,
    pub relation: RelationType,
    pub pmids: BTreeSet<Pmid>,
}

/// Tunables for path search. `max_hops` bounds the search radius; paths
/// longer than that count as unreachable.
#[derive(Debug, Clone, Copy)]
pub struct GraphConfig {
    pub max_hops: usize,
    pub default_max_paths: usize,
}

impl Default for GraphConfig {
    fn default() -> GraphConfig {
        GraphConfig {
            max_hops: 4,
            default_max_paths: 5,
        }
    }
}

/// One step of an entity path: the node arrived at and the stored relation
/// of the edge used to get there (`None` on the first step).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub entity_id: EntityId,
    pub relation: Option<RelationType>,
}

/// An undirected shortest path through the graph; no node repeats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityPath {
    pub steps: Vec<PathStep>,
}

impl EntityPath {
    pub fn node_ids(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.entity_id.as_str()).collect()
    }

    pub fn hops(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }
}

const UNSEEN: u32 = u32::MAX;

/// Directed labeled multigraph: one edge per knowledge-base record, with
/// (s -> o) and (o -> s) stored independently.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    ids: Vec<EntityId>,
    index: BTreeMap<EntityId, u32>,
    out_edges: BTreeMap<EntityId, Vec<Edge>>,
    // undirected adjacency by node index, sorted (== lexicographic id order)
    neighbors: Vec<Vec<u32>>,
    // smallest stored relation per directed (subject, object) index pair
    min_relation: BTreeMap<(u32, u32), RelationType>,
    edge_count: usize,
}

/// Build the graph from a knowledge base: a bijection between records and
/// directed edges.
pub fn build_graph(kb: &KnowledgeBase) -> KnowledgeGraph {
    let mut ids: BTreeSet<EntityId> = BTreeSet::new();
    for record in kb.records() {
        ids.insert(record.triplet.subject.id.clone());
        ids.insert(record.triplet.object.id.clone());
    }
    let ids: Vec<EntityId> = ids.into_iter().collect();
    let index: BTreeMap<EntityId, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as u32))
        .collect();

    let mut g = KnowledgeGraph {
        neighbors: vec![Vec::new(); ids.len()],
        ids,
        index,
        out_edges: BTreeMap::new(),
        min_relation: BTreeMap::new(),
        edge_count: 0,
    };
    for record in kb.records() {
        let s = record.triplet.subject.id.clone();
        let o = record.triplet.object.id.clone();
        let si = g.index[&s];
        let oi = g.index[&o];
        g.out_edges.entry(s).or_default().push(Edge {
            object_id: o,
            relation: record.triplet.relation,
            pmids: record.pmids.clone(),
        });
        g.edge_count += 1;
        g.neighbors[si as usize].push(oi);
        g.neighbors[oi as usize].push(si);
        g.min_relation
            .entry((si, oi))
            .and_modify(|r| *r = (*r).min(record.triplet.relation))
            .or_insert(record.triplet.relation);
    }
    for adj in g.neighbors.iter_mut() {
        adj.sort_unstable();
        adj.dedup();
    }
    for edges in g.out_edges.values_mut() {
        edges.sort_by(|a, b| (&a.object_id, a.relation).cmp(&(&b.object_id, b.relation)));
    }
    g
}

impl KnowledgeGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn edges_from(&self, id: &str) -> &[Edge] {
        self.out_edges.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The relation reported for an undirected hop u - v: the smallest
    /// relation among stored u->v edges, falling back to stored v->u edges.
    fn hop_relation(&self, u: u32, v: u32) -> Option<RelationType> {
        self.min_relation
            .get(&(u, v))
            .or_else(|| self.min_relation.get(&(v, u)))
            .copied()
    }

    /// All minimal-hop undirected paths from `src` to `dst`, at most
    /// `max_paths`, ordered lexicographically by node-id sequence. Paths
    /// longer than `max_hops` are treated as unreachable (empty result).
    pub fn shortest_entity_paths(
        &self,
        src: &str,
        dst: &str,
        max_paths: usize,
        max_hops: usize,
    ) -> Result<Vec<EntityPath>> {
        if max_paths == 0 {
            return Err(KbError::InvalidFilter("max_paths must be >= 1".into()));
        }
        let (Some(&si), Some(&di)) = (self.index.get(src), self.index.get(dst)) else {
            let missing = if self.index.contains_key(src) { dst } else { src };
            return Err(KbError::NotFound(format!("entity {missing} not in graph")));
        };
        if si == di {
            return Ok(vec![EntityPath {
                steps: vec![PathStep {
                    entity_id: src.to_string(),
                    relation: None,
                }],
            }]);
        }

        // BFS distances from src, bounded by max_hops.
        let mut dist = vec![UNSEEN; self.ids.len()];
        dist[si as usize] = 0;
        let mut queue = VecDeque::from([si]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            if du as usize >= max_hops {
                continue;
            }
            for &v in &self.neighbors[u as usize] {
                if dist[v as usize] == UNSEEN {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        if dist[di as usize] == UNSEEN {
            return Ok(Vec::new());
        }
        let target_dist = dist[di as usize];

        // Enumerate minimal paths over the BFS DAG; sorted adjacency makes
        // the output lexicographic by node-id sequence.
        let mut paths: Vec<Vec<u32>> = Vec::new();
        let mut stack = vec![si];
        self.enumerate_paths(di, target_dist, &dist, &mut stack, &mut paths, max_paths);

        Ok(paths
            .into_iter()
            .map(|nodes| {
                let mut steps = Vec::with_capacity(nodes.len());
                for (i, &ix) in nodes.iter().enumerate() {
                    let relation = if i == 0 {
                        None
                    } else {
                        self.hop_relation(nodes[i - 1], ix)
                    };
                    steps.push(PathStep {
                        entity_id: self.ids[ix as usize].clone(),
                        relation,
                    });
                }
                EntityPath { steps }
            })
            .collect())
    }

    fn enumerate_paths(
        &self,
        dst: u32,
        target_dist: u32,
        dist: &[u32],
        stack: &mut Vec<u32>,
        paths: &mut Vec<Vec<u32>>,
        max_paths: usize,
    ) {
        if paths.len() >= max_paths {
            return;
        }
        let u = *stack.last().expect("stack never empty");
        let depth = (stack.len() - 1) as u32;
        if u == dst {
            if depth == target_dist {
                paths.push(stack.clone());
            }
            return;
        }
        if depth >= target_dist {
            return;
        }
        for &v in &self.neighbors[u as usize] {
            if dist[v as usize] == depth + 1 {
                stack.push(v);
                self.enumerate_paths(dst, target_dist, dist, stack, paths, max_paths);
                stack.pop();
                if paths.len() >= max_paths {
                    return;
                }
            }
        }
    }
}
