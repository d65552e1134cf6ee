//! Knowledge base for literature-based biomedical hypothesis discovery.
//!
//! The crate ingests triplet/article corpora (JSONL) into an immutable
//! [`KnowledgeBase`], builds a directed labeled [`graph::KnowledgeGraph`]
//! plus a MeSH tree-number hierarchy over it, and exposes the filterable
//! retrieval surface ([`query::QueryEngine`]) that agent tooling calls.
//!
//! Ingestion is a single-writer batch phase; everything produced by it is
//! immutable and safe to share across threads.

pub mod error;
pub mod graph;
pub mod index;
pub mod ingest;
pub mod mesh;
pub mod query;
pub mod render;
pub mod snapshot;
pub mod types;

pub use error::{KbError, Result};
pub use graph::{EntityPath, GraphConfig, KnowledgeGraph};
pub use index::TextIndex;
pub use ingest::{ingest, IngestReport};
pub use mesh::MeshTree;
pub use query::{EntityRef, QueryEngine, QueryFilter, RelationCount};
pub use types::{
    validate_pair, Article, Entity, EntityId, EntityType, HypothesisRecord, KnowledgeBase, Pmid,
    RelationType, Triplet, TripletKey, Umbrella,
};
