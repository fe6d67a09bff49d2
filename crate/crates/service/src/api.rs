//! HTTP routes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use ecobee_adapters::{ChatTurn, VisionRequest};
use ecobee_core::intake::{canonicalise_quiz, merge_items, normalise_barcode, LabelledItem};
use ecobee_core::item::validate_pseudonym;
use ecobee_core::leaderboard::{LeaderboardEntry, LeaderboardSummary, TopEntry, DEFAULT_TOP_N};
use ecobee_core::recommend::rank::{DEFAULT_K_BOUNDARIES, DEFAULT_N_RECS};
use ecobee_core::recommend::{fallback_rank, rank_recommendations, RankError, RankRequest, Recommendation};
use ecobee_core::scoring::Contribution;
use ecobee_core::{score, BoundaryScores, TransientImage};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::state::AppState;

pub const MAX_TOP_N: usize = 100;
pub const MAX_RECS: usize = 50;
/// Room for the JSON wrapper around a base64 image.
const VISION_BODY_SLACK: usize = 64 * 1024;

/// `Json` with rejections mapped to [`ApiError`].
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct ApiQuery<T>(pub T);

pub fn router(state: Arc<AppState>) -> Router {
    let vision_limit = state.settings.max_image_bytes.div_ceil(3) * 4 + VISION_BODY_SLACK;
    Router::new()
        .route("/api/score", post(score_handler))
        .route("/api/submit-score", post(submit_handler))
        .route("/api/leaderboard", get(leaderboard_handler))
        .route("/api/recommendations", post(recommendations_handler))
        .route("/api/chat", post(chat_handler))
        .route(
            "/api/vision",
            post(vision_handler).layer(DefaultBodyLimit::max(vision_limit)),
        )
        .route("/api/health", get(health_handler))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

/// One line per request: method, path, status, latency. Never bodies.
async fn log_request(request: Request, next: Next) -> Response {
    let method = request.method().clone();
    let path = request.uri().path().to_string();
    let started = Instant::now();
    let response = next.run(request).await;
    tracing::info!(
        %method,
        %path,
        status = response.status().as_u16(),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "request"
    );
    response
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorePayload {
    pub quiz: BTreeMap<String, String>,
    #[serde(default)]
    pub labelled_items: Vec<LabelledItem>,
    #[serde(default)]
    pub barcodes: Vec<String>,
    #[serde(default)]
    pub pseudonym: Option<String>,
    #[serde(default)]
    pub campus: Option<String>,
    #[serde(default)]
    pub cohort: Option<String>,
    #[serde(default)]
    pub faculty: Option<String>,
    #[serde(default)]
    pub career_interest: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ScoreResponse {
    pub boundaries: BoundaryScores,
    pub composite: f64,
    pub explanations: Vec<Contribution>,
}

async fn score_handler(
    State(state): State<Arc<AppState>>,
    ApiJson(payload): ApiJson<ScorePayload>,
) -> Result<Json<ScoreResponse>, ApiError> {
    if let Some(p) = &payload.pseudonym {
        validate_pseudonym(p)?;
    }
    let table = state.factors();
    let mut items = canonicalise_quiz(&payload.quiz, &table)?;
    for code in &payload.barcodes {
        items.push(normalise_barcode(code, &state.barcodes)?);
    }
    for label in &payload.labelled_items {
        if !label.is_valid() {
            return Err(ApiError::bad_request("invalid_label", "labelled item is malformed"));
        }
    }
    let merged = merge_items(items, &payload.labelled_items, state.settings.min_confidence);
    let result = score(&merged.items, &table, &state.settings.weights, state.settings.explain_top_k)?;
    Ok(Json(ScoreResponse {
        boundaries: result.boundary_scores,
        composite: result.composite,
        explanations: result.explanations,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitPayload {
    pub pseudonym: String,
    pub campus: String,
    pub boundaries: BoundaryScores,
    pub composite: f64,
    #[serde(default)]
    pub feedback: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct OkResponse {
    pub ok: bool,
}

fn now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

async fn submit_handler(
    State(state): State<Arc<AppState>>,
    ApiJson(payload): ApiJson<SubmitPayload>,
) -> Result<Json<OkResponse>, ApiError> {
    let submitted_at = now();
    let entry = LeaderboardEntry {
        pseudonym: payload.pseudonym,
        campus: payload.campus,
        composite: payload.composite,
        boundary_scores: payload.boundaries,
        submitted_at,
    };
    let pseudonym = entry.pseudonym.clone();
    state.leaderboard.submit_score(entry)?;
    if let Some(body) = payload.feedback.filter(|b| !b.trim().is_empty()) {
        state.leaderboard.submit_feedback(&pseudonym, &body, submitted_at)?;
    }
    Ok(Json(OkResponse { ok: true }))
}

#[derive(Debug, Deserialize)]
pub struct LeaderboardQuery {
    pub campus: Option<String>,
    pub n: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct LeaderboardResponse {
    pub summary: LeaderboardSummary,
    pub top: Vec<TopEntry>,
}

async fn leaderboard_handler(
    State(state): State<Arc<AppState>>,
    ApiQuery(query): ApiQuery<LeaderboardQuery>,
) -> Result<Json<LeaderboardResponse>, ApiError> {
    let n = query.n.unwrap_or(DEFAULT_TOP_N);
    if !(1..=MAX_TOP_N).contains(&n) {
        return Err(ApiError::bad_request("invalid_query", format!("n must be between 1 and {MAX_TOP_N}")));
    }
    let campus = query.campus.as_deref().filter(|c| !c.is_empty());
    Ok(Json(LeaderboardResponse {
        summary: state.leaderboard.summary(campus, state.settings.k_min),
        top: state.leaderboard.top_n(n, campus),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendationPayload {
    pub scores: BoundaryScores,
    #[serde(default)]
    pub campus: Option<String>,
    #[serde(default)]
    pub current_options: Vec<String>,
    #[serde(default)]
    pub n: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ServedBy {
    Embedding,
    Fallback,
}

#[derive(Debug, Serialize)]
pub struct RecommendationResponse {
    pub served_by: ServedBy,
    pub recommendations: Vec<Recommendation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

async fn recommendations_handler(
    State(state): State<Arc<AppState>>,
    ApiJson(payload): ApiJson<RecommendationPayload>,
) -> Result<Json<RecommendationResponse>, ApiError> {
    let n_recs = payload.n.unwrap_or(DEFAULT_N_RECS);
    if !(1..=MAX_RECS).contains(&n_recs) {
        return Err(ApiError::bad_request("invalid_request", format!("n must be between 1 and {MAX_RECS}")));
    }
    let context: BTreeSet<String> = payload.campus.into_iter().filter(|c| !c.is_empty()).collect();
    let current: BTreeSet<String> = payload.current_options.into_iter().collect();
    let request = RankRequest {
        scores: &payload.scores,
        feasibility_context: &context,
        current_options: &current,
        k_boundaries: DEFAULT_K_BOUNDARIES,
        n_recs,
    };
    let recommender = state.recommender();
    let (served_by, ranked) = match &recommender.model {
        Some(model) => (ServedBy::Embedding, rank_recommendations(&request, &recommender.graph, model)),
        None => (ServedBy::Fallback, fallback_rank(&request, recommender.graph.catalog())),
    };
    match ranked {
        Ok(recommendations) => Ok(Json(RecommendationResponse {
            served_by,
            recommendations,
            note: None,
        })),
        Err(RankError::NoFeasibleActions) => Ok(Json(RecommendationResponse {
            served_by,
            recommendations: Vec::new(),
            note: Some("no_feasible_actions"),
        })),
        Err(RankError::InvalidRequest) => Err(ApiError::bad_request("invalid_request", "invalid ranking request")),
        Err(RankError::ModelGraphMismatch) => {
            tracing::error!("embedding model does not match the action graph");
            Err(ApiError::internal())
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatPayload {
    pub history: Vec<ChatTurn>,
    pub scores: BoundaryScores,
    #[serde(default)]
    pub career_interest: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ChatResponse {
    pub reply: ChatTurn,
}

async fn chat_handler(
    State(state): State<Arc<AppState>>,
    ApiJson(payload): ApiJson<ChatPayload>,
) -> Result<Json<ChatResponse>, ApiError> {
    let reply = state
        .adapter
        .chat(
            &payload.history,
            &payload.scores,
            &state.opportunities,
            payload.career_interest.as_deref(),
        )
        .await?;
    Ok(Json(ChatResponse { reply }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisionPayload {
    pub image_base64: String,
    #[serde(default)]
    pub domain_hint: Option<String>,
}

impl std::fmt::Debug for VisionPayload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VisionPayload")
            .field("image_base64", &format_args!("<{} chars>", self.image_base64.len()))
            .field("domain_hint", &self.domain_hint)
            .finish()
    }
}

#[derive(Debug, Serialize)]
pub struct VisionResponse {
    pub labelled_items: Vec<LabelledItem>,
}

async fn vision_handler(
    State(state): State<Arc<AppState>>,
    ApiJson(payload): ApiJson<VisionPayload>,
) -> Result<Json<VisionResponse>, ApiError> {
    let VisionPayload {
        image_base64,
        domain_hint,
    } = payload;
    let cap = state.settings.max_image_bytes;
    // decoded size is at most 3/4 of the encoded length
    if image_base64.len() / 4 * 3 > cap + 2 {
        let approx = image_base64.len() / 4 * 3;
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "image_too_large",
            format!("image is about {approx} bytes, over the {cap}-byte cap"),
        ));
    }
    let bytes = STANDARD
        .decode(image_base64.trim())
        .map_err(|_| ApiError::bad_request("invalid_image", "image_base64 is not valid base64"))?;
    drop(image_base64);
    let request = VisionRequest {
        image: TransientImage::new(bytes),
        domain_hint,
    };
    let labelled_items = state.adapter.classify_image(request).await?;
    Ok(Json(VisionResponse { labelled_items }))
}

#[derive(Debug, Serialize)]
pub struct HealthResponse {
    pub ok: bool,
    pub factor_table_version: String,
    pub model_version: Option<String>,
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        ok: true,
        factor_table_version: state.factors().version().to_string(),
        model_version: state.recommender().model_version(),
    })
}
