//! HTTP/JSON service exposing the query APIs over an immutable snapshot.
//!
//! Every endpoint routes through the same [`LocalTools`] dispatch the
//! in-process registry uses, so service responses equal library results.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use lbd_agent::{LocalTools, ToolError, ToolOutcome, ToolRequest, ToolTransport};
use lbd_kb::graph::GraphConfig;
use lbd_kb::query::{EntityRef, QueryEngine, QueryFilter};
use lbd_kb::snapshot::load_snapshot;
use lbd_kb::{KbError, Pmid};

pub struct ServiceState {
    tools: LocalTools,
}

impl ServiceState {
    pub fn new(tools: LocalTools) -> ServiceState {
        ServiceState { tools }
    }

    pub fn from_snapshot(dir: &std::path::Path) -> anyhow::Result<ServiceState> {
        let (kb, mesh) = load_snapshot(dir)?;
        let kb = Arc::new(kb);
        let graph = Arc::new(lbd_kb::graph::build_graph(&kb));
        let engine = QueryEngine::new(kb);
        Ok(ServiceState::new(LocalTools::new(
            engine,
            graph,
            mesh.map(Arc::new),
            GraphConfig::default(),
        )))
    }
}

struct ServiceError(ToolError);

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code, message) = match &self.0 {
            ToolError::Kb(KbError::InvalidFilter(m)) => {
                (StatusCode::BAD_REQUEST, "invalid_filter", m.clone())
            }
            ToolError::Kb(KbError::NotFound(m)) => (StatusCode::NOT_FOUND, "not_found", m.clone()),
            ToolError::Kb(KbError::InvalidInput(m)) => {
                (StatusCode::BAD_REQUEST, "invalid_input", m.clone())
            }
            ToolError::BadArgument(m) => (StatusCode::BAD_REQUEST, "bad_argument", m.clone()),
            ToolError::UnknownFunction(m) => (StatusCode::NOT_FOUND, "unknown_function", m.clone()),
            other => (StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        };
        let body = json!({"error": {"code": code, "message": message}});
        (status, Json(body)).into_response()
    }
}

fn respond(outcome: ToolOutcome) -> Response {
    fn envelope<T: Serialize>(items: &[T]) -> Response {
        Json(json!({"items": items, "count": items.len()})).into_response()
    }
    match outcome {
        ToolOutcome::Entities(items) => envelope(&items),
        ToolOutcome::Relations(items) => envelope(&items),
        ToolOutcome::Triplets(items) => envelope(&items),
        ToolOutcome::ArticleIds(items) => envelope(&items),
        ToolOutcome::Paths(items) => envelope(&items),
        ToolOutcome::MeshIds(items) => envelope(&items),
        ToolOutcome::Browse(result) => Json(json!({
            "items": result.articles,
            "count": result.articles.len(),
            "missing": result.missing,
        }))
        .into_response(),
        ToolOutcome::Text(text) => Json(json!({"items": [text], "count": 1})).into_response(),
    }
}

type ServiceResult = Result<Response, ServiceError>;

fn invoke(state: &ServiceState, request: ToolRequest) -> ServiceResult {
    state.tools.invoke(&request).map(respond).map_err(ServiceError)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn entities(
    State(state): State<Arc<ServiceState>>,
    Json(filter): Json<QueryFilter>,
) -> ServiceResult {
    invoke(&state, ToolRequest::GetEntities { filter })
}

async fn relations(
    State(state): State<Arc<ServiceState>>,
    Json(filter): Json<QueryFilter>,
) -> ServiceResult {
    invoke(&state, ToolRequest::GetRelations { filter })
}

async fn triplets(
    State(state): State<Arc<ServiceState>>,
    Json(filter): Json<QueryFilter>,
) -> ServiceResult {
    invoke(&state, ToolRequest::GetTriplets { filter })
}

async fn articles(
    State(state): State<Arc<ServiceState>>,
    Json(filter): Json<QueryFilter>,
) -> ServiceResult {
    invoke(&state, ToolRequest::GetArticles { filter })
}

#[derive(Deserialize)]
struct BrowseBody {
    pmids: Vec<Pmid>,
}

async fn browse(
    State(state): State<Arc<ServiceState>>,
    Json(body): Json<BrowseBody>,
) -> ServiceResult {
    invoke(&state, ToolRequest::BrowseArticles { pmids: body.pmids })
}

/// `src`/`dst` accept either a bare entity-id string or an entity prototype.
#[derive(Deserialize)]
#[serde(untagged)]
enum EntitySpec {
    Id(String),
    Ref(EntityRef),
}

impl EntitySpec {
    fn into_ref(self) -> EntityRef {
        match self {
            EntitySpec::Id(id) => EntityRef::by_id(id),
            EntitySpec::Ref(r) => r,
        }
    }
}

#[derive(Deserialize)]
struct PathsBody {
    src: EntitySpec,
    dst: EntitySpec,
    max_paths: Option<usize>,
}

async fn shortest_paths(
    State(state): State<Arc<ServiceState>>,
    Json(body): Json<PathsBody>,
) -> ServiceResult {
    invoke(
        &state,
        ToolRequest::ShortestPaths {
            src: body.src.into_ref(),
            dst: body.dst.into_ref(),
            max_paths: body.max_paths.unwrap_or(GraphConfig::default().default_max_paths),
        },
    )
}

#[derive(Deserialize)]
struct MeshQuery {
    entity_id: String,
}

async fn mesh_parents(
    State(state): State<Arc<ServiceState>>,
    Query(q): Query<MeshQuery>,
) -> ServiceResult {
    invoke(
        &state,
        ToolRequest::MeshParents {
            entity: EntityRef::by_id(q.entity_id),
        },
    )
}

async fn mesh_children(
    State(state): State<Arc<ServiceState>>,
    Query(q): Query<MeshQuery>,
) -> ServiceResult {
    invoke(
        &state,
        ToolRequest::MeshChildren {
            entity: EntityRef::by_id(q.entity_id),
        },
    )
}

async fn mesh_siblings(
    State(state): State<Arc<ServiceState>>,
    Query(q): Query<MeshQuery>,
) -> ServiceResult {
    invoke(
        &state,
        ToolRequest::MeshSiblings {
            entity: EntityRef::by_id(q.entity_id),
        },
    )
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/entities", post(entities))
        .route("/v1/relations", post(relations))
        .route("/v1/triplets", post(triplets))
        .route("/v1/articles", post(articles))
        .route("/v1/articles/browse", post(browse))
        .route("/v1/graph/shortest_paths", post(shortest_paths))
        .route("/v1/mesh/parents", get(mesh_parents))
        .route("/v1/mesh/children", get(mesh_children))
        .route("/v1/mesh/siblings", get(mesh_siblings))
        .with_state(state)
}

/// Handle for a service running on a background thread.
pub struct ServiceHandle {
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

/// Start the service on an OS-assigned port on a background thread.
pub fn spawn_service(state: Arc<ServiceState>) -> anyhow::Result<(std::net::SocketAddr, ServiceHandle)> {
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("tokio runtime");
        runtime.block_on(async move {
            let listener = match tokio::net::TcpListener::bind(("127.0.0.1", 0)).await {
                Ok(l) => l,
                Err(e) => {
                    let _ = addr_tx.send(Err(anyhow::anyhow!("bind failed: {e}")));
                    return;
                }
            };
            let addr = listener.local_addr().expect("local addr");
            let _ = addr_tx.send(Ok(addr));
            let server = axum::serve(listener, router(state)).with_graceful_shutdown(async {
                let _ = shutdown_rx.await;
            });
            if let Err(e) = server.await {
                eprintln!("service error: {e}");
            }
        });
    });
    let addr = addr_rx
        .recv()
        .map_err(|_| anyhow::anyhow!("service thread died before binding"))??;
    Ok((
        addr,
        ServiceHandle {
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        },
    ))
}

/// Run the service in the foreground on a fixed port.
pub fn serve_blocking(state: Arc<ServiceState>, port: u16) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| anyhow::anyhow!("cannot bind port {port}: {e}"))?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}
