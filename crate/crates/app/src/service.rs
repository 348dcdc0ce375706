//! HTTP service over one precomputed session.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::Result;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use gegraph::explore::{expand_community, related_nodes, ExploreError};
use gegraph::graph::GraphDocument;
use gegraph::pipeline::{load_dataset, Session};
use gegraph::render::LayoutDocument;
use gegraph::walk::Proximity;
use serde_json::json;

use crate::config::RunConfig;
use crate::layout_document;

const INDEX_HTML: &str = include_str!("../assets/index.html");
const DEFAULT_K: usize = 10;

/// Everything computed at startup; read-only afterwards.
pub struct AppState {
    pub config: RunConfig,
    pub session: Session,
    pub graph: GraphDocument,
    pub layout: LayoutDocument,
}

impl AppState {
    pub fn build(config: RunConfig) -> Result<Self> {
        let g = load_dataset(&config.dataset)?;
        let session = Session::build(&g, &config.pipeline)?;
        let layout = layout_document(&session.run, &config.dataset);
        Ok(Self {
            graph: g.to_document(),
            session,
            layout,
            config,
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<ExploreError> for ApiError {
    fn from(e: ExploreError) -> Self {
        Self::bad_request(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/graph", get(graph))
        .route("/api/layout", get(layout))
        .route("/api/aggregation", get(aggregation))
        .route("/api/expand/{community}", get(expand))
        .route("/api/related", get(related))
        .route("/api/metrics", get(metrics))
        .fallback(not_found)
        .with_state(state)
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(json!({ "error": "not found" }))).into_response()
}

async fn graph(State(s): State<Shared>) -> Json<GraphDocument> {
    Json(s.graph.clone())
}

async fn layout(State(s): State<Shared>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], s.layout.to_json()).into_response()
}

async fn aggregation(State(s): State<Shared>) -> Response {
    Json(&s.session.aggregation).into_response()
}

async fn expand(State(s): State<Shared>, Path(community): Path<String>) -> Result<Response, ApiError> {
    let id: usize = community
        .parse()
        .map_err(|_| ApiError::bad_request(format!("unknown community {community:?}")))?;
    let run = &s.session.run;
    let geometry = expand_community(
        &s.session.aggregation,
        &run.layout.positions,
        run.graph().edges(),
        run.communities(),
        run.graph().ids(),
        id,
    )?;
    Ok(Json(geometry).into_response())
}

async fn related(State(s): State<Shared>, Query(params): Query<BTreeMap<String, String>>) -> Result<Response, ApiError> {
    let node = params.get("node").ok_or_else(|| ApiError::bad_request("missing node parameter"))?;
    let query = s
        .session
        .graph()
        .index_of(node)
        .ok_or_else(|| ApiError::bad_request(format!("unknown node {node:?}")))?;
    let strategy: Proximity = match params.get("strategy") {
        None => Proximity::Local,
        Some(name) => name
            .parse()
            .map_err(|_| ApiError::bad_request(format!("unknown strategy {name:?}")))?,
    };
    let k = match params.get("k") {
        None => DEFAULT_K,
        Some(k) => k
            .parse()
            .map_err(|_| ApiError::bad_request(format!("k must be a positive integer, got {k:?}")))?,
    };
    let result = related_nodes(query, strategy, k, &s.session.spaces, s.session.graph().ids())?;
    Ok(Json(result).into_response())
}

async fn metrics(State(s): State<Shared>) -> Response {
    Json(&s.session.metrics).into_response()
}

/// Binds and serves until interrupted.
pub async fn serve(state: AppState, host: &str, port: u16) -> Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("serving {} on http://{}", state.config.dataset, listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
