//! Service-backed tool transport: the same typed requests, executed over
//! HTTP against a running service. Observations render from the same typed
//! results, so they match the in-process transport byte for byte.

use serde::Deserialize;

use lbd_agent::{ToolError, ToolOutcome, ToolRequest, ToolTransport};
use lbd_kb::query::{describe_entity, BrowseResult, EntityRef, Scored};
use lbd_kb::{Article, Entity, KbError, Pmid};

pub struct HttpTools {
    base: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct Items<T> {
    items: Vec<T>,
}

#[derive(Deserialize)]
struct BrowseItems {
    items: Vec<Article>,
    #[serde(default)]
    missing: Vec<Pmid>,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: ErrorDetail,
}

#[derive(Deserialize)]
struct ErrorDetail {
    code: String,
    message: String,
}

impl HttpTools {
    pub fn new(base: impl Into<String>) -> HttpTools {
        HttpTools {
            base: base.into().trim_end_matches('/').to_string(),
            client: reqwest::blocking::Client::new(),
        }
    }

    fn check(&self, resp: reqwest::blocking::Response) -> Result<reqwest::blocking::Response, ToolError> {
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        let body: Result<ErrorBody, _> = resp.json();
        match body {
            Ok(b) => Err(match b.error.code.as_str() {
                "invalid_filter" => ToolError::Kb(KbError::InvalidFilter(b.error.message)),
                "not_found" => ToolError::Kb(KbError::NotFound(b.error.message)),
                "invalid_input" => ToolError::Kb(KbError::InvalidInput(b.error.message)),
                "bad_argument" => ToolError::BadArgument(b.error.message),
                "unknown_function" => ToolError::UnknownFunction(b.error.message),
                _ => ToolError::Transport(format!("{status}: {}", b.error.message)),
            }),
            Err(_) => Err(ToolError::Transport(format!("service returned {status}"))),
        }
    }

    fn post<T: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &impl serde::Serialize,
    ) -> Result<T, ToolError> {
        let resp = self
            .client
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .map_err(|e| ToolError::Transport(e.to_string()))?;
        self.check(resp)?
            .json()
            .map_err(|e| ToolError::Transport(format!("bad service payload: {e}")))
    }

    fn get<T: for<'de> Deserialize<'de>>(&self, path: &str) -> Result<T, ToolError> {
        let resp = self
            .client
            .get(format!("{}{path}", self.base))
            .send()
            .map_err(|e| ToolError::Transport(e.to_string()))?;
        self.check(resp)?
            .json()
            .map_err(|e| ToolError::Transport(format!("bad service payload: {e}")))
    }

    /// Resolve a prototype to one catalog entity via the entities endpoint,
    /// reproducing the in-process resolution (smallest matching id).
    fn resolve(&self, proto: &EntityRef) -> Result<Entity, ToolError> {
        if proto.is_empty() {
            return Err(ToolError::Kb(KbError::InvalidFilter(
                "empty entity reference".into(),
            )));
        }
        let filter = lbd_kb::query::QueryFilter {
            head_entities: Some(vec![proto.clone()]),
            limit: Some(1),
            ..Default::default()
        };
        let found: Items<Scored<Entity>> = self.post("/v1/entities", &filter)?;
        found
            .items
            .into_iter()
            .next()
            .map(|s| s.item)
            .ok_or_else(|| ToolError::Kb(KbError::NotFound(format!("no entity matches {proto:?}"))))
    }

    fn mesh(&self, kind: &str, entity: &EntityRef) -> Result<ToolOutcome, ToolError> {
        let e = self.resolve(entity)?;
        let found: Items<String> = self.get(&format!("/v1/mesh/{kind}?entity_id={}", e.id))?;
        Ok(ToolOutcome::MeshIds(found.items))
    }
}

impl ToolTransport for HttpTools {
    fn invoke(&self, request: &ToolRequest) -> Result<ToolOutcome, ToolError> {
        match request {
            ToolRequest::GetEntities { filter } => {
                let found: Items<Scored<Entity>> = self.post("/v1/entities", filter)?;
                Ok(ToolOutcome::Entities(found.items))
            }
            ToolRequest::GetRelations { filter } => {
                let found: Items<lbd_kb::query::RelationCount> =
                    self.post("/v1/relations", filter)?;
                Ok(ToolOutcome::Relations(found.items))
            }
            ToolRequest::GetTriplets { filter } => {
                let found: Items<Scored<lbd_kb::HypothesisRecord>> =
                    self.post("/v1/triplets", filter)?;
                Ok(ToolOutcome::Triplets(found.items))
            }
            ToolRequest::GetArticles { filter } => {
                let found: Items<Scored<Pmid>> = self.post("/v1/articles", filter)?;
                Ok(ToolOutcome::ArticleIds(found.items))
            }
            ToolRequest::BrowseArticles { pmids } => {
                let found: BrowseItems = self.post(
                    "/v1/articles/browse",
                    &serde_json::json!({ "pmids": pmids }),
                )?;
                Ok(ToolOutcome::Browse(BrowseResult {
                    articles: found.items,
                    missing: found.missing,
                }))
            }
            ToolRequest::ShortestPaths {
                src,
                dst,
                max_paths,
            } => {
                let found: Items<lbd_kb::graph::EntityPath> = self.post(
                    "/v1/graph/shortest_paths",
                    &serde_json::json!({"src": src, "dst": dst, "max_paths": max_paths}),
                )?;
                Ok(ToolOutcome::Paths(found.items))
            }
            ToolRequest::MeshParents { entity } => self.mesh("parents", entity),
            ToolRequest::MeshChildren { entity } => self.mesh("children", entity),
            ToolRequest::MeshSiblings { entity } => self.mesh("siblings", entity),
            ToolRequest::RelationDescription { relation } => {
                Ok(ToolOutcome::Text(relation.description().to_string()))
            }
            ToolRequest::EntityDescription { entity } => {
                Ok(ToolOutcome::Text(describe_entity(&self.resolve(entity)?)))
            }
        }
    }
}
