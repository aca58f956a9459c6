//! JSON-over-HTTP study service.
//!
//! Every session response is an envelope `{schema_version, session_id,
//! step, ...}`; errors carry `error` plus the session's current step when
//! there is one. Training after the rating step runs on the blocking pool
//! while the session reports step `recommend` with `status: "training"`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use semauto_core::profile::ScoredItem;
use semauto_core::study::{Arm, QuestionnaireForm, SessionId, StarRating, Step, Study, StudyError, StudySession};
use semauto_core::ItemId;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone)]
pub struct AppState {
    study: Arc<Study>,
    /// Sessions whose training failed, with the reason.
    failed: Arc<Mutex<HashMap<SessionId, String>>>,
}

impl AppState {
    pub fn new(study: Arc<Study>) -> Self {
        AppState { study, failed: Arc::default() }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/selection", post(selection))
        .route("/sessions/{id}/ratings", post(ratings))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/pre-ratings", post(pre_ratings))
        .route("/sessions/{id}/post-explanation", post(post_explanation))
        .route("/sessions/{id}/post-trailer", post(post_trailer))
        .route("/sessions/{id}/questionnaire", post(questionnaire))
        .route("/report", get(report))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "schema_version": SCHEMA_VERSION, "error": message.into() }) }
    }

    fn from_study(state: &AppState, id: Option<SessionId>, e: StudyError) -> Self {
        let status = match &e {
            StudyError::UnknownSession(_) => StatusCode::NOT_FOUND,
            StudyError::WrongStep { .. } => StatusCode::CONFLICT,
            StudyError::Rejected(_) | StudyError::Config(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StudyError::Training(_) => StatusCode::ACCEPTED,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "request failed");
        }
        let mut err = ApiError::new(status, e.to_string());
        if let Some(s) = id.and_then(|id| state.study.session(id).ok()) {
            err.body["session_id"] = json!(s.id);
            err.body["step"] = json!(s.step);
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn envelope(s: &StudySession, extra: Value) -> Json<Value> {
    let mut body = json!({ "schema_version": SCHEMA_VERSION, "session_id": s.id, "step": s.step });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    Json(body)
}

#[derive(Serialize)]
struct Movie {
    item: ItemId,
    title: String,
    trailer_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

fn movie(state: &AppState, item: ItemId, score: Option<f64>) -> Movie {
    let it = state.study.engine().catalog().get(item);
    Movie {
        item,
        title: it.map(|i| i.title.clone()).unwrap_or_default(),
        trailer_url: it.and_then(|i| i.trailer_url.clone()),
        score,
    }
}

fn movies(state: &AppState, items: &[ScoredItem]) -> Vec<Movie> {
    items.iter().map(|s| movie(state, s.item, Some(s.score))).collect()
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "schema_version": SCHEMA_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "catalog_size": state.study.engine().catalog().len(),
        "sessions": state.study.store().len(),
    }))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    /// `style/mode`; overrides the configured policy.
    arm: Option<String>,
}

async fn create_session(State(state): State<AppState>, body: Option<Json<CreateBody>>) -> ApiResult {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let forced = match body.arm {
        None => None,
        Some(label) => Some(label.parse::<Arm>().map_err(|e| ApiError::from_study(&state, None, e))?),
    };
    let s = state.study.create_session(forced).map_err(|e| ApiError::from_study(&state, None, e))?;
    let candidates: Vec<Movie> = s.candidates.iter().map(|&i| movie(&state, i, None)).collect();
    Ok(envelope(&s, json!({ "arm": s.arm.label(), "candidates": candidates })))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult {
    let id = SessionId(id);
    let s = state.study.session(id).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    Ok(envelope(&s, json!({ "session": s })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionBody {
    items: Vec<ItemId>,
}

async fn selection(State(state): State<AppState>, Path(id): Path<u64>, Json(b): Json<SelectionBody>) -> ApiResult {
    let id = SessionId(id);
    let s = state.study.submit_selection(id, b.items).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    Ok(envelope(&s, json!({ "selected": s.selected })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingsBody {
    ratings: Vec<StarRating>,
}

/// Stores the ratings and starts training; the response comes back before
/// training finishes.
async fn ratings(State(state): State<AppState>, Path(id): Path<u64>, Json(b): Json<RatingsBody>) -> ApiResult {
    let id = SessionId(id);
    let s = state.study.submit_ratings(id, b.ratings).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        if let Err(e) = worker.study.run_training(id) {
            tracing::error!(session = %id, error = %e, "training failed");
            worker.failed.lock().expect("failure map").insert(id, e.to_string());
        }
    });
    Ok(envelope(&s, json!({ "status": "training" })))
}

async fn recommendations(State(state): State<AppState>, Path(id): Path<u64>) -> Result<Response, ApiError> {
    let id = SessionId(id);
    match state.study.recommendations(id) {
        Ok(items) => {
            let s = state.study.session(id).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
            Ok(envelope(&s, json!({ "status": "ready", "items": movies(&state, &items) })).into_response())
        }
        Err(StudyError::Training(_)) => {
            let s = state.study.session(id).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
            if let Some(reason) = state.failed.lock().expect("failure map").get(&id) {
                let mut err = ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("training failed: {reason}"));
                err.body["session_id"] = json!(id);
                err.body["step"] = json!(s.step);
                return Err(err);
            }
            Ok((StatusCode::ACCEPTED, envelope(&s, json!({ "status": "training" }))).into_response())
        }
        Err(e) => Err(ApiError::from_study(&state, Some(id), e)),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StarsBody {
    stars: Vec<u8>,
}

async fn pre_ratings(State(state): State<AppState>, Path(id): Path<u64>, Json(b): Json<StarsBody>) -> ApiResult {
    let id = SessionId(id);
    let study = Arc::clone(&state.study);
    // Explaining may retrain a profile that is no longer cached.
    let result = tokio::task::spawn_blocking(move || study.submit_pre_ratings(id, b.stars))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let s = result.map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    let explained: Vec<Movie> = s
        .explained_positions()
        .into_iter()
        .flatten()
        .map(|p| {
            let r = &s.recommendations[p];
            movie(&state, r.item, Some(r.score))
        })
        .collect();
    Ok(envelope(&s, json!({ "explanation": s.explanation, "explained": explained })))
}

async fn post_explanation(State(state): State<AppState>, Path(id): Path<u64>, Json(b): Json<StarsBody>) -> ApiResult {
    let id = SessionId(id);
    let s = state.study.submit_post_explanation(id, b.stars).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    Ok(envelope(&s, json!({})))
}

async fn post_trailer(State(state): State<AppState>, Path(id): Path<u64>, Json(b): Json<StarsBody>) -> ApiResult {
    let id = SessionId(id);
    let s = state.study.submit_post_trailer(id, b.stars).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    Ok(envelope(&s, json!({})))
}

async fn questionnaire(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(b): Json<QuestionnaireForm>,
) -> ApiResult {
    let id = SessionId(id);
    let s = state.study.submit_questionnaire(id, b).map_err(|e| ApiError::from_study(&state, Some(id), e))?;
    debug_assert_eq!(s.step, Step::Done);
    Ok(envelope(&s, json!({})))
}

async fn report(State(state): State<AppState>) -> ApiResult {
    let r = state.study.report().map_err(|e| ApiError::from_study(&state, None, e))?;
    Ok(Json(serde_json::to_value(r).expect("report serializes")))
}
