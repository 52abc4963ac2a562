//! HTTP service: `GET /health`, `POST /rerank`, `POST /explain`.
//!
//! Handlers parse bodies themselves so malformed JSON maps to 400, then run
//! the blocking pipeline code on the blocking pool.

use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::Result;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rerank_core::attribution::attribute;
use rerank_core::explain::{
    ExplainError, ExplainJob, ExplanationRecord, Explainer, PromptTemplate, Variant,
};
use rerank_core::attribution::top_k_tokens;
use rerank_core::rerank::RerankError;
use serde::{Deserialize, Serialize};

use crate::pipeline::{
    attribution_file, record_line, rerank_query, resolve_query, AttributionFile, Context,
    LoadedScorer, ScorerName, UnknownItem, UnknownQuery,
};

pub struct AppState {
    pub ctx: Context,
    pub scorer_name: ScorerName,
    pub scorer: LoadedScorer,
    pub explainer: Explainer,
    pub templates: Vec<PromptTemplate>,
}

impl AppState {
    pub fn new(ctx: Context, scorer_name: ScorerName, offline: bool) -> Result<Self> {
        let scorer = ctx.load_scorer(scorer_name)?;
        let explainer = ctx.explainer(offline)?;
        let templates = Variant::BOTH
            .iter()
            .map(|&v| PromptTemplate::default_for(v))
            .collect();
        let mut st = Self {
            ctx,
            scorer_name,
            scorer,
            explainer,
            templates,
        };
        // Configured template files replace the defaults.
        for t in st.ctx.templates()? {
            if let Some(slot) = st.templates.iter_mut().find(|s| s.variant == t.variant) {
                *slot = t;
            }
        }
        Ok(st)
    }

    fn template(&self, v: Variant) -> &PromptTemplate {
        self.templates
            .iter()
            .find(|t| t.variant == v)
            .expect("both variants present")
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerankRequest {
    pub query_id: Option<String>,
    pub query: Option<String>,
    pub candidate_ids: Option<Vec<String>>,
    pub m_r: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    pub query_id: Option<String>,
    pub query: Option<String>,
    pub item_id: String,
    #[serde(default = "default_variant")]
    pub variant: Variant,
}

fn default_variant() -> Variant {
    Variant::WithAttribution
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExplainResponse {
    pub attribution: AttributionFile,
    pub explanation: ExplanationRecord<f64>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl std::fmt::Display) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        let status = if e.is::<UnknownItem>() || e.is::<UnknownQuery>() {
            StatusCode::NOT_FOUND
        } else if let Some(ExplainError::Backend(_)) = e.downcast_ref::<ExplainError>() {
            StatusCode::BAD_GATEWAY
        } else if e.is::<RerankError>() || e.is::<rerank_core::corpus::CorpusError>() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        Self::new(status, format!("{e:#}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(serde_json::json!({ "error": self.message })),
        )
            .into_response()
    }
}

/// The same line `rerank` writes for this query.
pub fn handle_rerank(st: &AppState, req: &RerankRequest) -> Result<String, ApiError> {
    let query = resolve_query(&st.ctx, req.query_id.as_deref(), req.query.as_deref())?;
    let list = match (&req.candidate_ids, st.ctx.ranking(&query.id)) {
        (None, Some(r)) if r.query == query => {
            rerank_core::rerank::rerank(&query, &r.items(), &st.ctx.bind(&st.scorer), req.m_r)
                .map_err(anyhow::Error::from)?
        }
        (ids, _) => rerank_query(&st.ctx, &st.scorer, &query, ids.as_deref(), req.m_r)?,
    };
    Ok(record_line(&list)?)
}

pub fn handle_explain(st: &AppState, req: &ExplainRequest) -> Result<ExplainResponse, ApiError> {
    let query = resolve_query(&st.ctx, req.query_id.as_deref(), req.query.as_deref())?;
    let item = st
        .ctx
        .index
        .item(&req.item_id)
        .ok_or_else(|| anyhow::Error::from(UnknownItem(req.item_id.clone())))?;
    let bound = st.ctx.bind(&st.scorer);
    let result = attribute(&query, item, &bound, &st.ctx.cfg.attribution)
        .map_err(anyhow::Error::from)?;
    let job = ExplainJob {
        query: &query,
        item,
        topk: top_k_tokens(&result, st.ctx.cfg.attribution.top_k),
        template: st.template(req.variant),
    };
    let explanation = st
        .explainer
        .generate_explanation(&job)
        .map_err(anyhow::Error::from)?;
    Ok(ExplainResponse {
        attribution: attribution_file(result),
        explanation,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?
}

async fn health(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "scorer": st.scorer_name.as_str(),
        "items": st.ctx.index.len(),
    }))
}

async fn rerank_route(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: RerankRequest = parse(&body)?;
    let line = blocking(move || handle_rerank(&st, &req)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], line).into_response())
}

async fn explain_route(
    State(st): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<ExplainResponse>, ApiError> {
    let req: ExplainRequest = parse(&body)?;
    Ok(Json(blocking(move || handle_explain(&st, &req)).await?))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/rerank", post(rerank_route))
        .route("/explain", post(explain_route))
        .with_state(state)
}

/// Serves on `listener` until the process ends. Blocks the calling thread,
/// which must not be inside an async runtime.
pub fn serve(state: Arc<AppState>, listener: std::net::TcpListener) -> Result<()> {
    listener.set_nonblocking(true)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        axum::serve(listener, router(state)).await
    })?;
    Ok(())
}

/// Binds `addr` and serves on a background thread; returns the bound address.
pub fn spawn(state: Arc<AppState>, addr: SocketAddr) -> Result<SocketAddr> {
    let listener = std::net::TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    std::thread::spawn(move || {
        if let Err(e) = serve(state, listener) {
            log::error!("server stopped: {e:#}");
        }
    });
    Ok(local)
}
