//! HTTP surface over one shared session.
//!
//! Every response is an envelope: `{"status":"ok","payload":...}` or
//! `{"status":"error","error":{"code":...,"message":...}}`. Mutations take the
//! write lock, so steps and resolutions never interleave; reads share it.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mindstream::collocation::parse_field;
use mindstream::{Category, PriorityFunction, Resolution, Session, SessionError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::RwLock;

use crate::errors::classify;

#[derive(Clone)]
pub struct AppState {
    session: Arc<RwLock<Session>>,
    persist: Option<PathBuf>,
}

impl AppState {
    /// With `persist`, the session file is rewritten after every mutation.
    pub fn new(session: Session, persist: Option<PathBuf>) -> Self {
        AppState { session: Arc::new(RwLock::new(session)), persist }
    }
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ApiEnvelope {
    Ok { payload: Value },
    Error { error: ApiError },
}

#[derive(Serialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

struct Failure {
    status: StatusCode,
    code: String,
    message: String,
}

impl Failure {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Failure { status, code: code.into(), message: message.into() }
    }

    fn malformed(message: impl Into<String>) -> Self {
        Failure::new(StatusCode::UNPROCESSABLE_ENTITY, "MALFORMED_BODY", message)
    }
}

impl From<SessionError> for Failure {
    fn from(err: SessionError) -> Self {
        let class = classify(&err);
        let status =
            StatusCode::from_u16(class.http).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        Failure::new(status, class.code, err.to_string())
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let body = ApiEnvelope::Error { error: ApiError { code: self.code, message: self.message } };
        (self.status, Json(body)).into_response()
    }
}

type Reply = Result<Json<ApiEnvelope>, Failure>;

fn ok(payload: impl Serialize) -> Reply {
    let payload = serde_json::to_value(payload)
        .map_err(|e| Failure::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?;
    Ok(Json(ApiEnvelope::Ok { payload }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/actors", get(actors))
        .route("/actors/{name}/snapshot", get(snapshot))
        .route("/stream/step", post(step))
        .route("/resolutions", get(resolutions))
        .route("/resolutions/{id}", post(resolve))
        .route("/session", get(export))
        .route("/dropped", get(dropped))
        .fallback(|| async {
            Failure::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint")
        })
        .with_state(state)
}

fn parse_param<T: std::str::FromStr>(
    params: &HashMap<String, String>,
    name: &str,
) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    params
        .get(name)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| Failure::malformed(format!("{name}: {e}"))))
        .transpose()
}

type Params = Query<HashMap<String, String>>;

async fn actors(State(state): State<AppState>, Query(params): Params) -> Reply {
    let session = state.session.read().await;
    match parse_param::<u64>(&params, "c")? {
        Some(c) => ok(session.store().actors_as_of(c)),
        None => ok(session.actors()),
    }
}

async fn snapshot(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Query(params): Params,
) -> Reply {
    let function = parse_param::<PriorityFunction>(&params, "fn")?.unwrap_or(PriorityFunction::F1);
    let c = parse_param::<u64>(&params, "c")?;
    let delta = parse_param::<f64>(&params, "delta")?;
    let session = state.session.read().await;
    ok(session.snapshot(&name, function, c, delta)?)
}

#[derive(Deserialize)]
struct StepBody {
    text: String,
}

async fn step(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Reply {
    let is_json = headers
        .get(axum::http::header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let text = if is_json {
        serde_json::from_slice::<StepBody>(&body).map_err(|e| Failure::malformed(e.to_string()))?.text
    } else {
        String::from_utf8(body.to_vec()).map_err(|_| Failure::malformed("body is not UTF-8"))?
    };
    let mut session = state.session.write().await;
    let delta = session.step(&text)?;
    persist(&state, &session)?;
    ok(delta)
}

async fn resolutions(State(state): State<AppState>) -> Reply {
    ok(state.session.read().await.pending())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolveBody {
    actor: Option<String>,
    object: Option<String>,
    #[serde(default)]
    confirm_new: bool,
    #[serde(default)]
    discard: bool,
}

/// Turns the body of a resolution request into an engine resolution.
pub fn resolution_from(
    actor: Option<String>,
    object: Option<&str>,
    confirm_new: bool,
    discard: bool,
) -> Result<Resolution, String> {
    match (discard, actor) {
        (true, None) => Ok(Resolution::Discard),
        (true, Some(_)) => Err("give either an actor or discard, not both".into()),
        (false, None) => Err("an actor or discard is required".into()),
        (false, Some(actor)) => {
            let object = object
                .map(|o| parse_field(o, Category::Noun))
                .transpose()
                .map_err(|e| e.to_string())?;
            Ok(Resolution::Bind { actor, object, confirm_new })
        }
    }
}

async fn resolve(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Reply {
    let body: ResolveBody =
        serde_json::from_slice(&body).map_err(|e| Failure::malformed(e.to_string()))?;
    let resolution =
        resolution_from(body.actor, body.object.as_deref(), body.confirm_new, body.discard)
            .map_err(Failure::malformed)?;
    let mut session = state.session.write().await;
    let delta = session.resolve(&id, resolution)?;
    persist(&state, &session)?;
    ok(delta)
}

async fn export(State(state): State<AppState>) -> Reply {
    let json = state.session.read().await.to_json()?;
    let value: Value = serde_json::from_str(&json)
        .map_err(|e| Failure::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?;
    ok(value)
}

async fn dropped(State(state): State<AppState>) -> Reply {
    ok(state.session.read().await.dropped())
}

fn persist(state: &AppState, session: &Session) -> Result<(), Failure> {
    if let Some(path) = &state.persist {
        session.save(path)?;
    }
    Ok(())
}

pub async fn serve(state: AppState, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
