//! JSON API: catalog search, fold-in recommendations and model metadata.

use std::net::SocketAddr;
use std::sync::Arc;

use als_core::ingest::IndexMap;
use als_core::model_io::SavedModel;
use als_core::recommend::{recommend, FoldInRequest, DEFAULT_MIN_RATINGS};
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use crate::catalog::{Catalog, CatalogEntry};
use crate::fixed;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_SEARCH_LIMIT: usize = 20;

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: SavedModel,
    pub index: IndexMap,
}

impl LoadedModel {
    pub fn new(model: SavedModel) -> als_core::Result<Self> {
        let index = model.index()?;
        Ok(LoadedModel { model, index })
    }
}

/// Shared read-only state behind every handler.
#[derive(Debug, Default)]
pub struct AppState {
    pub model: Option<LoadedModel>,
    pub catalog: Catalog,
}

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{message}{}", unknown_suffix(unknown_movie_ids))]
    Unprocessable { message: String, unknown_movie_ids: Vec<u32> },
    #[error("no model loaded")]
    NoModel,
}

fn unknown_suffix(ids: &[u32]) -> String {
    if ids.is_empty() {
        return String::new();
    }
    let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
    format!(": {}", ids.join(", "))
}

impl ApiError {
    fn unprocessable(message: impl Into<String>) -> Self {
        ApiError::Unprocessable {
            message: message.into(),
            unknown_movie_ids: Vec::new(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::NoModel => StatusCode::SERVICE_UNAVAILABLE,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(rename = "unknownMovieIds", skip_serializing_if = "<[u32]>::is_empty")]
    unknown_movie_ids: &'a [u32],
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let (error, ids): (&str, &[u32]) = match &self {
            ApiError::BadRequest(m) => (m, &[]),
            ApiError::Unprocessable { message, unknown_movie_ids } => (message, unknown_movie_ids),
            ApiError::NoModel => ("no model loaded", &[]),
        };
        (status, Json(ErrorBody { error, unknown_movie_ids: ids })).into_response()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub model_loaded: bool,
}

#[derive(Debug, Deserialize)]
pub struct MoviesQuery {
    pub q: Option<String>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatedMovie {
    #[serde(rename = "movieId")]
    pub movie_id: u32,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecommendBody {
    pub ratings: Vec<RatedMovie>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_min_count")]
    pub min_count: u32,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

fn default_min_count() -> u32 {
    DEFAULT_MIN_RATINGS
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecommendedItem {
    pub movie_id: u32,
    pub title: String,
    #[serde(serialize_with = "fixed::six")]
    pub score: f64,
    #[serde(serialize_with = "fixed::six")]
    pub popularity_part: f64,
    #[serde(serialize_with = "fixed::six")]
    pub affinity_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendResponse {
    pub items: Vec<RecommendedItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInfo {
    pub k: usize,
    #[serde(serialize_with = "fixed::six")]
    pub lambda: f64,
    #[serde(serialize_with = "fixed::six")]
    pub tau: f64,
    pub epochs: usize,
    pub n_users: usize,
    pub n_items: usize,
    #[serde(serialize_with = "fixed::six")]
    pub global_mean: f64,
}

pub fn model_info(loaded: &LoadedModel) -> ModelInfo {
    let h = &loaded.model.meta.hyperparams;
    let p = &loaded.model.params;
    ModelInfo {
        k: h.k,
        lambda: h.lambda,
        tau: h.tau,
        epochs: h.epochs,
        n_users: p.n_users(),
        n_items: p.n_items(),
        global_mean: p.mu,
    }
}

/// Maps raw movie ids to dense ids, folds the user in and scores the catalog.
pub fn recommend_raw(loaded: &LoadedModel, catalog: &Catalog, body: &RecommendBody) -> Result<RecommendResponse, ApiError> {
    if body.ratings.is_empty() && body.alpha == 0.0 {
        return Err(ApiError::unprocessable("no ratings and alpha = 0 leaves every score equal"));
    }
    let unknown: Vec<u32> = body
        .ratings
        .iter()
        .filter(|r| loaded.index.item(r.movie_id).is_none())
        .map(|r| r.movie_id)
        .collect();
    if !unknown.is_empty() {
        return Err(ApiError::Unprocessable {
            message: "unknown movie ids".into(),
            unknown_movie_ids: unknown,
        });
    }
    let req = FoldInRequest {
        ratings: body
            .ratings
            .iter()
            .map(|r| (loaded.index.item(r.movie_id).expect("checked above"), r.rating))
            .collect(),
        alpha: body.alpha,
        top_k: body.top_k,
        min_ratings: body.min_count,
    };
    let model = &loaded.model;
    let scored = recommend(&model.params, &model.meta.hyperparams, &req, &model.meta.item_counts)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let items = scored
        .into_iter()
        .map(|s| {
            let movie_id = loaded.index.item_raw(s.item);
            RecommendedItem {
                movie_id,
                title: catalog.title(movie_id).unwrap_or_default().to_owned(),
                score: s.score,
                popularity_part: s.popularity_part,
                affinity_part: s.affinity_part,
            }
        })
        .collect();
    Ok(RecommendResponse { items })
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok",
        model_loaded: state.model.is_some(),
    })
}

async fn movies(
    State(state): State<Arc<AppState>>,
    query: Result<Query<MoviesQuery>, QueryRejection>,
) -> Result<Json<Vec<CatalogEntry>>, ApiError> {
    let Query(query) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let q = query.q.ok_or_else(|| ApiError::BadRequest("missing query parameter q".into()))?;
    let limit = query.limit.unwrap_or(DEFAULT_SEARCH_LIMIT);
    if limit == 0 {
        return Err(ApiError::BadRequest("limit must be at least 1".into()));
    }
    Ok(Json(state.catalog.search(&q, limit).into_iter().cloned().collect()))
}

async fn recommend_handler(
    State(state): State<Arc<AppState>>,
    body: Result<Json<RecommendBody>, JsonRejection>,
) -> Result<Json<RecommendResponse>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let loaded = state.model.as_ref().ok_or(ApiError::NoModel)?;
    recommend_raw(loaded, &state.catalog, &body).map(Json)
}

async fn info(State(state): State<Arc<AppState>>) -> Result<Json<ModelInfo>, ApiError> {
    state.model.as_ref().map(|m| Json(model_info(m))).ok_or(ApiError::NoModel)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/movies", get(movies))
        .route("/api/recommend", post(recommend_handler))
        .route("/api/model/info", get(info))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state))).await
}
