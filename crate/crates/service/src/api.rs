//! JSON over HTTP.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateSession`] | [`SessionView`], 201 |
//! | POST | `/sessions/{id}/overs` | [`OverEntry`] | [`OverResponse`] |
//! | POST | `/sessions/{id}/what-if` | [`OverEntry`] | [`OverResponse`], session unchanged |
//! | GET | `/sessions/{id}` | | [`SessionView`] |
//! | GET | `/healthz` | | [`Health`] |
//! | GET | `/models` | | [`ModelsView`] |
//! | POST | `/models/reload` | | [`ModelsView`] |
//! | GET | `/zones` | | [`ZonesView`] |
//!
//! Errors reply with [`ApiError`] and a status matching its code.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chasepi_core::interval::Interval;
use chasepi_core::models::ModelSummary;
use chasepi_core::phase::Phase;
use chasepi_core::strategy::{VenueClass, ZoneRow};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::engine::{Engine, EngineConfig};
use crate::journal::{Journal, JournalEvent};
use crate::session::{CreateSession, LiveSession, OverEntry, OverResponse, SessionError, SessionView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    Conflict,
    ModelMissing,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::ModelMissing => StatusCode::SERVICE_UNAVAILABLE,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(ErrorCode::NotFound, format!("no session '{id}'"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::BadRequest(_) => ErrorCode::BadRequest,
            SessionError::Conflict(_) => ErrorCode::Conflict,
            SessionError::Internal(_) => ErrorCode::Internal,
        };
        Self::new(code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self {
            code: ErrorCode::BadRequest,
            message: "malformed request body".into(),
            detail: Some(e.body_text()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

type Session = Arc<Mutex<LiveSession>>;

/// Shared service state: the active engine and the live sessions.
#[derive(Debug, Default)]
pub struct AppState {
    engine: RwLock<Option<Arc<Engine>>>,
    config: Option<EngineConfig>,
    sessions: RwLock<HashMap<String, Session>>,
    journal: Option<Journal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub models_loaded: bool,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackView {
    pub phase: Phase,
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelsView {
    pub order: usize,
    pub confidence: f64,
    pub models: Vec<ModelSummary>,
    pub fallback: Vec<FallbackView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandView {
    pub phase: Phase,
    pub venue_class: VenueClass,
    pub band: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonesView {
    pub rows: Vec<ZoneRow>,
    pub target_bands: Vec<BandView>,
}

impl AppState {
    pub fn new(engine: Option<Engine>, config: Option<EngineConfig>, journal: Option<Journal>) -> Self {
        Self {
            engine: RwLock::new(engine.map(Arc::new)),
            config,
            sessions: RwLock::new(HashMap::new()),
            journal,
        }
    }

    pub fn engine(&self) -> Option<Arc<Engine>> {
        self.engine.read().expect("engine lock").clone()
    }

    /// Replaces the engine in one step; sessions keep the engine they began with.
    pub fn swap_engine(&self, engine: Engine) {
        *self.engine.write().expect("engine lock") = Some(Arc::new(engine));
    }

    fn session(&self, id: &str) -> Result<Session, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn journal(&self, ev: &JournalEvent) -> Result<(), ApiError> {
        if let Some(j) = &self.journal {
            j.record(ev).map_err(|e| ApiError::new(ErrorCode::Internal, format!("journal: {e}")))?;
        }
        Ok(())
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionView, ApiError> {
        let engine = self
            .engine()
            .ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no models loaded"))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = Utc::now();
        let s = LiveSession::new(id.clone(), &req, engine, created_at)?;
        self.journal(&JournalEvent::Create {
            session_id: id.clone(),
            created_at,
            request: req,
        })?;
        let view = s.view();
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(s)));
        Ok(view)
    }

    pub async fn append_over(&self, id: &str, entry: OverEntry) -> Result<OverResponse, ApiError> {
        let s = self.session(id)?;
        let mut s = s.lock().await;
        let resp = s.append(&entry)?;
        if let Err(e) = self.journal(&JournalEvent::Over {
            session_id: id.to_string(),
            entry,
        }) {
            tracing::error!(session = id, "over accepted but not journaled: {}", e.message);
        }
        Ok(resp)
    }

    pub async fn what_if(&self, id: &str, entry: OverEntry) -> Result<OverResponse, ApiError> {
        let s = self.session(id)?;
        let s = s.lock().await;
        Ok(s.what_if(&entry)?)
    }

    pub async fn view(&self, id: &str) -> Result<SessionView, ApiError> {
        let s = self.session(id)?;
        let s = s.lock().await;
        Ok(s.view())
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".into(),
            models_loaded: self.engine().is_some(),
            sessions: self.sessions.read().expect("session map lock").len(),
        }
    }

    pub fn models_view(&self) -> Result<ModelsView, ApiError> {
        let e = self
            .engine()
            .ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no models loaded"))?;
        Ok(ModelsView {
            order: e.models.order(),
            confidence: e.confidence,
            models: e.models.summaries(),
            fallback: Phase::ALL
                .iter()
                .filter_map(|&p| {
                    e.models.fits().gamma(p).map(|g| FallbackView {
                        phase: p,
                        shape: g.shape,
                        rate: g.rate,
                    })
                })
                .collect(),
        })
    }

    pub fn reload(&self) -> Result<ModelsView, ApiError> {
        let cfg = self
            .config
            .as_ref()
            .ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no model directory configured"))?;
        let engine = Engine::load(cfg).map_err(|e| ApiError {
            code: ErrorCode::ModelMissing,
            message: "reload failed; previous models kept".into(),
            detail: Some(format!("{e:#}")),
        })?;
        self.swap_engine(engine);
        self.models_view()
    }

    pub fn zones_view(&self) -> Result<ZonesView, ApiError> {
        let e = self
            .engine()
            .ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no models loaded"))?;
        let mut bands = Vec::new();
        for p in Phase::ALL {
            for v in VenueClass::ALL {
                bands.push(BandView {
                    phase: p,
                    venue_class: v,
                    band: e.zones.target_band(p, v),
                });
            }
        }
        Ok(ZonesView {
            rows: e.zones.rows().to_vec(),
            target_bands: bands,
        })
    }

    /// Rebuilds sessions from journal events with the current engine.
    pub fn recover(&self, events: Vec<JournalEvent>) -> Result<usize, ApiError> {
        let engine = self
            .engine()
            .ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no models loaded"))?;
        let mut map = self.sessions.write().expect("session map lock");
        let mut replayed = 0;
        for ev in events {
            match ev {
                JournalEvent::Create {
                    session_id,
                    created_at,
                    request,
                } => {
                    let s = LiveSession::new(session_id.clone(), &request, engine.clone(), created_at)?;
                    map.insert(session_id, Arc::new(Mutex::new(s)));
                }
                JournalEvent::Over { session_id, entry } => {
                    let s = map.get(&session_id).ok_or_else(|| ApiError::not_found(&session_id))?;
                    s.try_lock()
                        .map_err(|_| ApiError::new(ErrorCode::Internal, "session busy during recovery"))?
                        .append(&entry)?;
                }
            }
            replayed += 1;
        }
        Ok(replayed)
    }
}

pub type SharedState = Arc<AppState>;

async fn create(
    State(st): State<SharedState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(st.create_session(req)?)))
}

async fn append(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    body: Result<Json<OverEntry>, JsonRejection>,
) -> Result<Json<OverResponse>, ApiError> {
    let Json(entry) = body?;
    Ok(Json(st.append_over(&id, entry).await?))
}

async fn what_if(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    body: Result<Json<OverEntry>, JsonRejection>,
) -> Result<Json<OverResponse>, ApiError> {
    let Json(entry) = body?;
    Ok(Json(st.what_if(&id, entry).await?))
}

async fn get_session(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(st.view(&id).await?))
}

async fn healthz(State(st): State<SharedState>) -> Json<Health> {
    Json(st.health())
}

async fn models(State(st): State<SharedState>) -> Result<Json<ModelsView>, ApiError> {
    Ok(Json(st.models_view()?))
}

async fn reload(State(st): State<SharedState>) -> Result<Json<ModelsView>, ApiError> {
    let st2 = st.clone();
    let view = tokio::task::spawn_blocking(move || st2.reload())
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??;
    Ok(Json(view))
}

async fn zones(State(st): State<SharedState>) -> Result<Json<ZonesView>, ApiError> {
    Ok(Json(st.zones_view()?))
}

async fn fallback() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such route")
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/overs", post(append))
        .route("/sessions/{id}/what-if", post(what_if))
        .route("/healthz", get(healthz))
        .route("/models", get(models))
        .route("/models/reload", post(reload))
        .route("/zones", get(zones))
        .fallback(fallback)
        .with_state(state)
}
