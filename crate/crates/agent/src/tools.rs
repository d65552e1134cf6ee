//! Tool dispatch: validated requests out of parsed API calls, a transport
//! abstraction (in-process or remote), rendering of results into
//! observations, and repeat detection.
//!
//! Nothing here panics on bad agent input: every failure becomes an error
//! observation string.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ApiCall;
use crate::backend::ModuleTag;
use crate::callparse::ArgValue;
use crate::memory::{MemoryEntry, StepKind};
use lbd_kb::graph::{EntityPath, GraphConfig, KnowledgeGraph};
use lbd_kb::query::{BrowseResult, EntityRef, QueryEngine, QueryFilter, RelationCount, Scored};
use lbd_kb::render;
use lbd_kb::{Entity, HypothesisRecord, KbError, MeshTree, Pmid, RelationType};

/// A validated, typed tool invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ToolRequest {
    GetEntities { filter: QueryFilter },
    GetRelations { filter: QueryFilter },
    GetTriplets { filter: QueryFilter },
    GetArticles { filter: QueryFilter },
    BrowseArticles { pmids: Vec<Pmid> },
    ShortestPaths { src: EntityRef, dst: EntityRef, max_paths: usize },
    MeshParents { entity: EntityRef },
    MeshChildren { entity: EntityRef },
    MeshSiblings { entity: EntityRef },
    RelationDescription { relation: RelationType },
    EntityDescription { entity: EntityRef },
}

/// Typed result of a tool invocation; rendering is shared by every
/// transport so observations are transport-independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ToolOutcome {
    Entities(Vec<Scored<Entity>>),
    Relations(Vec<RelationCount>),
    Triplets(Vec<Scored<HypothesisRecord>>),
    ArticleIds(Vec<Scored<Pmid>>),
    Browse(BrowseResult),
    Paths(Vec<EntityPath>),
    MeshIds(Vec<String>),
    Text(String),
}

impl ToolOutcome {
    pub fn render(&self) -> String {
        match self {
            ToolOutcome::Entities(items) => render::render_entities(items),
            ToolOutcome::Relations(items) => render::render_relations(items),
            ToolOutcome::Triplets(items) => render::render_triplets(items),
            ToolOutcome::ArticleIds(items) => render::render_article_ids(items),
            ToolOutcome::Browse(result) => render::render_browse(result),
            ToolOutcome::Paths(items) => render::render_paths(items),
            ToolOutcome::MeshIds(items) => render::render_mesh_ids(items),
            ToolOutcome::Text(text) => text.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("{0}")]
    BadArgument(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("transport: {0}")]
    Transport(String),
}

/// Executes validated requests against some backing store.
pub trait ToolTransport: Send + Sync {
    fn invoke(&self, request: &ToolRequest) -> Result<ToolOutcome, ToolError>;
}

/// In-process transport over the knowledge base, graph, and MeSH tree.
pub struct LocalTools {
    engine: QueryEngine,
    graph: Arc<KnowledgeGraph>,
    mesh: Option<Arc<MeshTree>>,
    graph_config: GraphConfig,
}

impl LocalTools {
    pub fn new(
        engine: QueryEngine,
        graph: Arc<KnowledgeGraph>,
        mesh: Option<Arc<MeshTree>>,
        graph_config: GraphConfig,
    ) -> LocalTools {
        LocalTools {
            engine,
            graph,
            mesh,
            graph_config,
        }
    }

    pub fn engine(&self) -> &QueryEngine {
        &self.engine
    }

    fn mesh(&self) -> Result<&MeshTree, ToolError> {
        self.mesh
            .as_deref()
            .ok_or_else(|| ToolError::Kb(KbError::NotFound("no MeSH data loaded".into())))
    }

    fn resolve(&self, proto: &EntityRef) -> Result<Entity, ToolError> {
        Ok(self.engine.resolve_entity(proto)?)
    }
}

impl ToolTransport for LocalTools {
    fn invoke(&self, request: &ToolRequest) -> Result<ToolOutcome, ToolError> {
        match request {
            ToolRequest::GetEntities { filter } => {
                Ok(ToolOutcome::Entities(self.engine.get_entities(filter)?))
            }
            ToolRequest::GetRelations { filter } => {
                Ok(ToolOutcome::Relations(self.engine.get_relations(filter)?))
            }
            ToolRequest::GetTriplets { filter } => {
                Ok(ToolOutcome::Triplets(self.engine.get_triplets(filter)?))
            }
            ToolRequest::GetArticles { filter } => {
                Ok(ToolOutcome::ArticleIds(self.engine.get_articles(filter)?))
            }
            ToolRequest::BrowseArticles { pmids } => {
                Ok(ToolOutcome::Browse(self.engine.browse_articles(pmids)?))
            }
            ToolRequest::ShortestPaths {
                src,
                dst,
                max_paths,
            } => {
                let src = self.resolve(src)?;
                let dst = self.resolve(dst)?;
                Ok(ToolOutcome::Paths(self.graph.shortest_entity_paths(
                    &src.id,
                    &dst.id,
                    *max_paths,
                    self.graph_config.max_hops,
                )?))
            }
            ToolRequest::MeshParents { entity } => {
                let e = self.resolve(entity)?;
                Ok(ToolOutcome::MeshIds(self.mesh()?.parents(&e.id)?))
            }
            ToolRequest::MeshChildren { entity } => {
                let e = self.resolve(entity)?;
                Ok(ToolOutcome::MeshIds(self.mesh()?.children(&e.id)?))
            }
            ToolRequest::MeshSiblings { entity } => {
                let e = self.resolve(entity)?;
                Ok(ToolOutcome::MeshIds(self.mesh()?.siblings(&e.id)?))
            }
            ToolRequest::RelationDescription { relation } => {
                Ok(ToolOutcome::Text(relation.description().to_string()))
            }
            ToolRequest::EntityDescription { entity } => {
                Ok(ToolOutcome::Text(self.engine.entity_description(entity)?))
            }
        }
    }
}

// ---- argument validation ---------------------------------------------------

fn entity_ref_from(value: &ArgValue, param: &str) -> Result<EntityRef, ToolError> {
    match value {
        ArgValue::Entity(r) => Ok(r.clone()),
        ArgValue::Str(s) => Ok(EntityRef::by_name(s.clone())),
        other => Err(ToolError::BadArgument(format!(
            "parameter {param:?} expects an Entity or name string, got {}",
            other.canonical()
        ))),
    }
}

fn entity_list_from(value: &ArgValue, param: &str) -> Result<Vec<EntityRef>, ToolError> {
    match value {
        ArgValue::List(items) => items.iter().map(|v| entity_ref_from(v, param)).collect(),
        single => Ok(vec![entity_ref_from(single, param)?]),
    }
}

fn relation_from(value: &ArgValue, param: &str) -> Result<RelationType, ToolError> {
    match value {
        ArgValue::Relation(r) => Ok(*r),
        ArgValue::Str(s) => RelationType::parse(s).map_err(|_| {
            ToolError::BadArgument(format!("parameter {param:?}: unknown relation {s:?}"))
        }),
        other => Err(ToolError::BadArgument(format!(
            "parameter {param:?} expects a relation, got {}",
            other.canonical()
        ))),
    }
}

fn relation_list_from(value: &ArgValue, param: &str) -> Result<Vec<RelationType>, ToolError> {
    match value {
        ArgValue::List(items) => items.iter().map(|v| relation_from(v, param)).collect(),
        single => Ok(vec![relation_from(single, param)?]),
    }
}

fn pmid_from(value: &ArgValue, param: &str) -> Result<Pmid, ToolError> {
    match value {
        ArgValue::Int(i) if *i > 0 => Ok(*i as Pmid),
        ArgValue::Str(s) => s.parse::<Pmid>().map_err(|_| {
            ToolError::BadArgument(format!("parameter {param:?}: bad pmid {s:?}"))
        }),
        other => Err(ToolError::BadArgument(format!(
            "parameter {param:?} expects a positive pmid, got {}",
            other.canonical()
        ))),
    }
}

fn pmid_list_from(value: &ArgValue, param: &str) -> Result<Vec<Pmid>, ToolError> {
    match value {
        ArgValue::List(items) => items.iter().map(|v| pmid_from(v, param)).collect(),
        single => Ok(vec![pmid_from(single, param)?]),
    }
}

fn string_from(value: &ArgValue, param: &str) -> Result<String, ToolError> {
    match value {
        ArgValue::Str(s) => Ok(s.clone()),
        other => Err(ToolError::BadArgument(format!(
            "parameter {param:?} expects a string, got {}",
            other.canonical()
        ))),
    }
}

fn usize_from(value: &ArgValue, param: &str) -> Result<usize, ToolError> {
    match value {
        ArgValue::Int(i) if *i >= 1 => Ok(*i as usize),
        other => Err(ToolError::BadArgument(format!(
            "parameter {param:?} expects a positive integer, got {}",
            other.canonical()
        ))),
    }
}

fn filter_from(call: &ApiCall) -> Result<QueryFilter, ToolError> {
    let mut filter = QueryFilter::default();
    for (key, value) in &call.args {
        if matches!(value, ArgValue::None) {
            continue;
        }
        match key.as_str() {
            "head_entities" => filter.head_entities = Some(entity_list_from(value, key)?),
            "tail_entities" => filter.tail_entities = Some(entity_list_from(value, key)?),
            "relations" => filter.relations = Some(relation_list_from(value, key)?),
            "pmids" | "PMIDs" => filter.pmids = Some(pmid_list_from(value, key)?),
            "text_description" => filter.text_description = Some(string_from(value, key)?),
            "limit" => filter.limit = Some(usize_from(value, key)?),
            other => {
                return Err(ToolError::BadArgument(format!(
                    "unknown parameter {other:?} for {}",
                    call.function
                )))
            }
        }
    }
    Ok(filter)
}

fn single_entity_arg(call: &ApiCall) -> Result<EntityRef, ToolError> {
    let mut found = None;
    for (key, value) in &call.args {
        match key.as_str() {
            "entity" | "entities" | "head_entity" => {
                found = Some(entity_ref_from(value, key)?);
            }
            "entity_id" => {
                found = Some(EntityRef::by_id(string_from(value, key)?));
            }
            other => {
                return Err(ToolError::BadArgument(format!(
                    "unknown parameter {other:?} for {}",
                    call.function
                )))
            }
        }
    }
    found.ok_or_else(|| {
        ToolError::BadArgument(format!("{} requires an 'entity' argument", call.function))
    })
}

/// Validate a parsed call into a typed request.
pub fn build_request(call: &ApiCall, graph_config: &GraphConfig) -> Result<ToolRequest, ToolError> {
    match call.function.as_str() {
        "get_entities" => Ok(ToolRequest::GetEntities {
            filter: filter_from(call)?,
        }),
        "get_relations" => Ok(ToolRequest::GetRelations {
            filter: filter_from(call)?,
        }),
        "get_triplets" => Ok(ToolRequest::GetTriplets {
            filter: filter_from(call)?,
        }),
        "get_articles" => Ok(ToolRequest::GetArticles {
            filter: filter_from(call)?,
        }),
        "browse_articles" => {
            let mut pmids = None;
            for (key, value) in &call.args {
                match key.as_str() {
                    "pmids" | "PMIDs" => pmids = Some(pmid_list_from(value, key)?),
                    other => {
                        return Err(ToolError::BadArgument(format!(
                            "unknown parameter {other:?} for browse_articles"
                        )))
                    }
                }
            }
            let pmids = pmids.ok_or_else(|| {
                ToolError::BadArgument("browse_articles requires 'pmids'".into())
            })?;
            Ok(ToolRequest::BrowseArticles { pmids })
        }
        "get_shortest_entity_paths" => {
            let mut src = None;
            let mut dst = None;
            let mut max_paths = graph_config.default_max_paths;
            for (key, value) in &call.args {
                match key.as_str() {
                    "src" | "source" | "head_entity" | "entity1" => {
                        src = Some(entity_ref_from(value, key)?)
                    }
                    "dst" | "target" | "tail_entity" | "entity2" => {
                        dst = Some(entity_ref_from(value, key)?)
                    }
                    "max_paths" => max_paths = usize_from(value, key)?,
                    other => {
                        return Err(ToolError::BadArgument(format!(
                            "unknown parameter {other:?} for get_shortest_entity_paths"
                        )))
                    }
                }
            }
            match (src, dst) {
                (Some(src), Some(dst)) => Ok(ToolRequest::ShortestPaths {
                    src,
                    dst,
                    max_paths,
                }),
                _ => Err(ToolError::BadArgument(
                    "get_shortest_entity_paths requires 'src' and 'dst'".into(),
                )),
            }
        }
        "get_mesh_parents" => Ok(ToolRequest::MeshParents {
            entity: single_entity_arg(call)?,
        }),
        "get_mesh_children" => Ok(ToolRequest::MeshChildren {
            entity: single_entity_arg(call)?,
        }),
        "get_mesh_siblings" => Ok(ToolRequest::MeshSiblings {
            entity: single_entity_arg(call)?,
        }),
        "get_relation_description" => {
            let mut relation = None;
            for (key, value) in &call.args {
                match key.as_str() {
                    "relation" | "relations" => relation = Some(relation_from(value, key)?),
                    other => {
                        return Err(ToolError::BadArgument(format!(
                            "unknown parameter {other:?} for get_relation_description"
                        )))
                    }
                }
            }
            let relation = relation.ok_or_else(|| {
                ToolError::BadArgument("get_relation_description requires 'relation'".into())
            })?;
            Ok(ToolRequest::RelationDescription { relation })
        }
        "get_entity_description" => Ok(ToolRequest::EntityDescription {
            entity: single_entity_arg(call)?,
        }),
        other => Err(ToolError::UnknownFunction(other.to_string())),
    }
}

/// The tool surface exposed to the agent: validation, dispatch, rendering.
pub struct ToolRegistry {
    transport: Arc<dyn ToolTransport>,
    graph_config: GraphConfig,
}

impl ToolRegistry {
    pub fn new(transport: Arc<dyn ToolTransport>) -> ToolRegistry {
        ToolRegistry {
            transport,
            graph_config: GraphConfig::default(),
        }
    }

    pub fn with_graph_config(mut self, graph_config: GraphConfig) -> ToolRegistry {
        self.graph_config = graph_config;
        self
    }

    /// Execute a parsed call; every failure becomes an error observation.
    pub fn execute(&self, call: &ApiCall) -> String {
        match build_request(call, &self.graph_config) {
            Err(e) => format!("error: {e}"),
            Ok(request) => match self.transport.invoke(&request) {
                Ok(outcome) => outcome.render(),
                Err(e) => format!("error: {e}"),
            },
        }
    }

    /// The `{api_description}` block embedded in system prompts.
    pub fn api_description() -> &'static str {
        API_DESCRIPTION
    }
}

const API_DESCRIPTION: &str = r#"get_entities(head_entities=None, tail_entities=None, relations=None, pmids=None, text_description=None, limit=20)
    """Retrieves a list of entities matching specified filters."""

get_relations(head_entities=None, tail_entities=None, relations=None, pmids=None, text_description=None, limit=20)
    """Retrieves a list of relations matching specified filters."""

get_triplets(head_entities=None, tail_entities=None, relations=None, pmids=None, text_description=None, limit=20)
    """Retrieves a list of triplets matching specified filters."""

get_articles(head_entities=None, tail_entities=None, relations=None, pmids=None, text_description=None, limit=20)
    """Retrieves a list of PMIDs matching specified filters."""

browse_articles(pmids)
    """Returns metadata (title, abstract) for given PubMed IDs."""

get_shortest_entity_paths(src, dst, max_paths=5)
    """Finds shortest paths between two entities in the knowledge graph."""

get_mesh_parents(entity)
    """Returns parent entities in MeSH for a disease or chemical."""

get_mesh_children(entity)
    """Returns child entities in MeSH for a disease or chemical."""

get_mesh_siblings(entity)
    """Returns sibling entities in MeSH for a disease or chemical."""

get_relation_description(relation)
    """Returns the definition of one relation type."""

get_entity_description(entity)
    """Returns catalog metadata for one entity."""

# Entities are written as Entity(name="...", entity_type=Entity_Type.CHEMICAL)
# or Entity(id="..."). Relations are written as Relation.treat or "treat"."#;

/// Number of earlier module-visible API calls with the same canonical form.
pub fn detect_repeat(entries: &[MemoryEntry], module: ModuleTag, call: &ApiCall) -> usize {
    let canonical = call.canonical();
    entries
        .iter()
        .filter(|e| {
            e.module == module && e.step_kind == StepKind::Action && e.text == canonical
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::callparse::parse_call;
    use lbd_kb::graph::build_graph;
    use lbd_kb::ingest::ingest;
    use lbd_kb::types::parse_flexible_date;
    use std::io::Cursor;

    fn local() -> ToolRegistry {
        let triplets = r#"{"subject_id":"c1","subject_name":"Glucorin","subject_type":"chemical","relation":"treat","object_id":"d1","object_name":"Sugar Wasting","object_type":"disease","pmids":[10]}
{"subject_id":"c1","subject_name":"Glucorin","subject_type":"chemical","relation":"cause","object_id":"d2","object_name":"Liver Spots","object_type":"disease","pmids":[11]}"#;
        let articles = r#"{"pmid":10,"title":"Glucorin lowers glucose","abstract":"trial","pub_date":"2001-01-01","journal":"J1"}
{"pmid":11,"title":"Liver spots","abstract":"case","pub_date":"2003-01-01","journal":"J1"}"#;
        let (kb, _) = ingest(
            Cursor::new(triplets),
            Cursor::new(articles),
            parse_flexible_date("2024-01-01").unwrap(),
        )
        .unwrap();
        let kb = Arc::new(kb);
        let graph = Arc::new(build_graph(&kb));
        let engine = QueryEngine::new(kb);
        let mut mesh = MeshTree::default();
        mesh.insert("d1", "C19.246").unwrap();
        mesh.insert("d2", "C19.300").unwrap();
        mesh.insert("dx", "C19").unwrap();
        ToolRegistry::new(Arc::new(LocalTools::new(
            engine,
            graph,
            Some(Arc::new(mesh)),
            GraphConfig::default(),
        )))
    }

    #[test]
    fn valid_call_renders_results() {
        let reg = local();
        let call = parse_call(
            r#"get_relations(head_entities=[Entity(name="Glucorin", entity_type=Entity_Type.CHEMICAL)])"#,
        )
        .unwrap();
        let obs = reg.execute(&call);
        assert_eq!(
            obs,
            "1. cause frequency=1 (score=1.0000)\n2. treat frequency=1 (score=1.0000)"
        );
    }

    #[test]
    fn unknown_function_becomes_error_observation() {
        let reg = local();
        let call = parse_call("frobnicate(x=1)").unwrap();
        assert_eq!(reg.execute(&call), "error: unknown function \"frobnicate\"");
    }

    #[test]
    fn malformed_argument_names_the_parameter() {
        let reg = local();
        let call = parse_call("get_triplets(limit=\"ten\")").unwrap();
        let obs = reg.execute(&call);
        assert!(obs.starts_with("error:"), "{obs}");
        assert!(obs.contains("limit"), "{obs}");
        let call = parse_call("get_triplets(flavor=3)").unwrap();
        assert!(reg.execute(&call).contains("unknown parameter \"flavor\""));
    }

    #[test]
    fn shortest_paths_resolves_names() {
        let reg = local();
        let call = parse_call(
            r#"get_shortest_entity_paths(src=Entity(name="Sugar Wasting"), dst=Entity(name="Liver Spots"))"#,
        )
        .unwrap();
        let obs = reg.execute(&call);
        assert_eq!(obs, "1. d1 -[treat]- c1 -[cause]- d2 (hops=2)");
    }

    #[test]
    fn mesh_ops_resolve_entities() {
        let reg = local();
        let call = parse_call(r#"get_mesh_siblings(entity=Entity(id="d1"))"#).unwrap();
        assert_eq!(reg.execute(&call), "1. d2");
        let call = parse_call(r#"get_mesh_parents(entity_id="d1")"#).unwrap();
        assert_eq!(reg.execute(&call), "1. dx");
    }

    #[test]
    fn descriptions_are_served() {
        let reg = local();
        let call = parse_call("get_relation_description(relation=Relation.treat)").unwrap();
        assert_eq!(reg.execute(&call), "Treatment of a disease using a chemical or drug");
        let call = parse_call(r#"get_entity_description(entity=Entity(name="glucorin"))"#).unwrap();
        assert_eq!(
            reg.execute(&call),
            "Entity(id=c1, name=\"Glucorin\", entity_type=chemical)"
        );
    }

    #[test]
    fn repeats_count_canonical_forms_per_module() {
        let call_a = parse_call(r#"get_triplets(head_entities=[Entity(name="X")], limit=5)"#).unwrap();
        let call_b = parse_call(r#"get_triplets(limit=5, head_entities=[Entity(name='X')])"#).unwrap();
        let call_c = parse_call(r#"get_triplets(limit=6, head_entities=[Entity(name="X")])"#).unwrap();
        let entries = vec![
            MemoryEntry {
                step_kind: StepKind::Action,
                module: ModuleTag::Generation,
                outer_index: 1,
                inner_index: 1,
                text: call_a.canonical(),
                handoff: false,
            },
            MemoryEntry {
                step_kind: StepKind::Action,
                module: ModuleTag::Evaluation,
                outer_index: 1,
                inner_index: 1,
                text: call_a.canonical(),
                handoff: false,
            },
        ];
        assert_eq!(detect_repeat(&entries, ModuleTag::Generation, &call_b), 1);
        assert_eq!(detect_repeat(&entries, ModuleTag::Generation, &call_c), 0);
        assert_eq!(detect_repeat(&entries, ModuleTag::Evaluation, &call_b), 1);
    }
}
