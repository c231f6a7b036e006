//! HTTP API over the EcoEcho engine.
//!
//! Engine calls are blocking (the live provider uses a blocking HTTP
//! client), so every handler hops onto the blocking pool and takes the
//! session's own lock there. Events are appended to the store before the
//! in-memory session accepts them.

pub mod api;
pub mod config;
pub mod error;
pub mod state;

use std::fs;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tower_http::cors::{Any, CorsLayer};
use tower_http::trace::TraceLayer;

use ecoecho_core::analysis::{analyze, load_sessions, AnalysisOptions, AnalysisReport};
use ecoecho_core::assessment::{parse_survey_csv, voting_heatmap, SurveyRow, VotingHeatmap};
use ecoecho_core::engine::LiveSession;
use ecoecho_core::game::Ending;
use ecoecho_core::{NpcId, SessionId};

use crate::api::*;
use crate::error::ApiError;
pub use crate::state::{AppState, StartupError};

/// JSON body whose rejections use the API error shape.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(e) => Err(ApiError::bad_request(e.body_text())),
        }
    }
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

/// Runs `op` against the session under its lock.
async fn with_session<T, F>(state: AppState, id: String, op: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &mut LiveSession) -> Result<T, ApiError> + Send + 'static,
{
    blocking(move || {
        let id = SessionId::new(id);
        if !id.is_file_safe() {
            return Err(ApiError::not_found(format!("session {id}")));
        }
        let slot = state.session(&id)?;
        let mut live = slot.lock().unwrap_or_else(|e| e.into_inner());
        op(&state, &mut live)
    })
    .await
}

pub fn router(state: AppState, cors_origin: &str) -> Router {
    let cors = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    let cors = match cors_origin {
        "*" => cors.allow_origin(Any),
        origin => match HeaderValue::from_str(origin) {
            Ok(v) => cors.allow_origin(v),
            Err(_) => cors,
        },
    };
    Router::new()
        .route("/healthz", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/npcs/{npc}/message", post(message))
        .route("/sessions/{id}/vote", post(vote))
        .route("/sessions/{id}/final-decision", post(final_decision))
        .route("/sessions/{id}/state", get(session_state))
        .route("/analytics/heatmap", get(heatmap))
        .route("/analytics/prepost", get(prepost_stored).post(prepost_upload))
        .layer(TraceLayer::new_for_http())
        .layer(cors)
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok".into(), scenarios: state.scenario_ids() })
}

async fn create_session(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(axum::http::StatusCode, Json<SessionSummary>), ApiError> {
    // An empty body selects the default scenario.
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    let summary = blocking(move || {
        let engine = state.engine(req.scenario_id.as_deref())?;
        let (live, events) = engine.new_session(SessionId::random(), Utc::now());
        state.store().append_events(&events)?;
        let summary = summary(engine.scenario(), &live.state);
        state.insert(live);
        Ok(summary)
    })
    .await?;
    Ok((axum::http::StatusCode::CREATED, Json(summary)))
}

async fn message(
    State(state): State<AppState>,
    Path((id, npc)): Path<(String, String)>,
    ApiJson(req): ApiJson<MessageRequest>,
) -> Result<Json<TurnView>, ApiError> {
    with_session(state, id, move |state, live| {
        let engine = state.engine(Some(&live.state.scenario_id))?;
        let before = live.state.stage;
        let step = engine.message(live, &NpcId::from(npc.as_str()), &req.text, Utc::now())?;
        state.store().append_events(&step.events)?;
        let outcome = live.accept(step);
        let s = engine.scenario();
        let after = live.state.stage;
        let changed = before != after;
        Ok(Json(TurnView {
            npc: outcome.npc,
            utterance: outcome.npc_utterance,
            strategy: outcome.strategy,
            intent: outcome.intent.intent,
            layer: outcome.intent.layer,
            granted_items: outcome.granted_items.iter().map(|i| item_view(s, i)).collect(),
            highlights: outcome.highlights,
            stage_change: changed.then_some(StageChange { from: before, to: after }),
            stage: after,
            narration: changed.then(|| narration(s, after)),
            world_scene: live.state.world_scene(),
            pending_vote: live.state.pending_vote(),
            vote_prompt: vote_prompt(s, &live.state),
            final_decision_prompt: final_prompt(s, &live.state),
        }))
    })
    .await
}

async fn vote(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<VoteRequest>,
) -> Result<Json<VoteView>, ApiError> {
    with_session(state, id, move |state, live| {
        let engine = state.engine(Some(&live.state.scenario_id))?;
        let step = engine.vote(live, req.round, req.votes, Utc::now())?;
        state.store().append_events(&step.events)?;
        let record = live.accept(step);
        let s = engine.scenario();
        Ok(Json(VoteView {
            round: record.round,
            votes: record.votes,
            stage: live.state.stage,
            narration: narration(s, live.state.stage),
            pending_vote: live.state.pending_vote(),
            vote_prompt: vote_prompt(s, &live.state),
            world_scene: live.state.world_scene(),
            final_decision_prompt: final_prompt(s, &live.state),
        }))
    })
    .await
}

async fn final_decision(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<DecisionRequest>,
) -> Result<Json<DecisionView>, ApiError> {
    with_session(state, id, move |state, live| {
        let engine = state.engine(Some(&live.state.scenario_id))?;
        let step = engine.decide(live, req.support, Utc::now())?;
        state.store().append_events(&step.events)?;
        let ending = live.accept(step);
        let s = engine.scenario();
        let def = match ending {
            Ending::Bad => s.endings.bad.as_ref(),
            Ending::Alternate => s.endings.alternate.as_ref(),
        };
        Ok(Json(DecisionView {
            ending,
            ending_text: def.map(|d| d.text.clone()).unwrap_or_default(),
            ending_asset: def.map(|d| d.asset.clone()).unwrap_or_default(),
            world_scene: live.state.world_scene(),
            stage: live.state.stage,
            pending_vote: live.state.pending_vote(),
            vote_prompt: vote_prompt(s, &live.state),
        }))
    })
    .await
}

async fn session_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    with_session(state, id, |state, live| {
        let engine = state.engine(Some(&live.state.scenario_id))?;
        Ok(Json(state_view(engine.scenario(), &live.state)))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
struct HeatmapQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn heatmap(State(state): State<AppState>, Query(q): Query<HeatmapQuery>) -> Result<Response, ApiError> {
    let csv = match q.format.as_deref() {
        None | Some("json") => false,
        Some("csv") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown format `{other}`"))),
    };
    let map: VotingHeatmap = blocking(move || {
        let sessions = load_sessions(state.store())?;
        Ok(voting_heatmap(&sessions))
    })
    .await?;
    Ok(if csv {
        ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], map.to_csv()).into_response()
    } else {
        Json(map).into_response()
    })
}

fn prepost(state: &AppState, rows: Vec<SurveyRow>) -> Result<AnalysisReport, ApiError> {
    let sessions = load_sessions(state.store())?;
    Ok(analyze(&sessions, &rows, &AnalysisOptions::default())?)
}

/// Pre/post analysis over every `*.csv` under the data directory's
/// `surveys/` folder.
async fn prepost_stored(State(state): State<AppState>) -> Result<Json<AnalysisReport>, ApiError> {
    blocking(move || {
        let dir = state.store().surveys_dir();
        let mut paths: Vec<_> = match fs::read_dir(&dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(ApiError::internal(format!("{}: {e}", dir.display()))),
        };
        paths.sort();
        let mut rows = Vec::new();
        for path in paths {
            let file = fs::File::open(&path).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
            rows.extend(parse_survey_csv(file)?);
        }
        prepost(&state, rows).map(Json)
    })
    .await
}

/// Pre/post analysis over a CSV request body.
async fn prepost_upload(State(state): State<AppState>, body: Bytes) -> Result<Json<AnalysisReport>, ApiError> {
    blocking(move || {
        let rows = parse_survey_csv(body.as_ref())?;
        prepost(&state, rows).map(Json)
    })
    .await
}
