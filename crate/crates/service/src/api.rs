//! HTTP handlers. Every JSON body carries `schema_version`.

use std::io::Cursor;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::multipart::MultipartError;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use polyloop_core::mesh::{load_obj, MeshError, TriangleMesh};
use polyloop_core::preference::{KernelConfig, Rating};
use polyloop_core::render::QualityReference;
use polyloop_core::sequence::{IterationRecord, SessionState};
use polyloop_core::session::{variant_id, LoopSession, SessionConfig, SessionError, TerminationReason};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::events::Event;
use crate::store::{now_ms, Original, SessionEntry, Store};

/// Version of the request and response bodies.
pub const API_SCHEMA_VERSION: u32 = 1;

/// Seconds a client should wait before polling an iteration again.
pub const RETRY_AFTER_SECS: u64 = 1;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    Unprocessable(String),
    TooLarge(String),
    NotReady,
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, detail) = match self {
            ApiError::BadRequest(d) => (StatusCode::BAD_REQUEST, "bad_request", d),
            ApiError::NotFound(d) => (StatusCode::NOT_FOUND, "not_found", d),
            ApiError::Conflict(d) => (StatusCode::CONFLICT, "conflict", d),
            ApiError::Unprocessable(d) => (StatusCode::UNPROCESSABLE_ENTITY, "unprocessable", d),
            ApiError::TooLarge(d) => (StatusCode::PAYLOAD_TOO_LARGE, "too_large", d),
            ApiError::NotReady => (
                StatusCode::SERVICE_UNAVAILABLE,
                "computing",
                "iteration is being computed".to_string(),
            ),
            ApiError::Internal(d) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", d),
        };
        let body = Json(json!({ "schema_version": API_SCHEMA_VERSION, "error": code, "detail": detail }));
        let mut response = (status, body).into_response();
        if status == StatusCode::SERVICE_UNAVAILABLE {
            response
                .headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(RETRY_AFTER_SECS));
        }
        response
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::WrongState { .. } | SessionError::Terminated(_) => ApiError::Conflict(e.to_string()),
            SessionError::Arity { .. } | SessionError::Preference(_) => ApiError::Unprocessable(e.to_string()),
            SessionError::Mesh(_) | SessionError::Render(_) => ApiError::Internal(e.to_string()),
        }
    }
}

fn multipart_error(e: MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::TooLarge(e.body_text())
    } else {
        ApiError::BadRequest(e.body_text())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionView {
    pub schema_version: u32,
    pub id: String,
    pub mesh: String,
    pub state: SessionState,
    /// Latest iteration, or the one being computed.
    pub iteration: usize,
    pub iterations_computed: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub pair_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SessionView {
    fn of(entry: &SessionEntry) -> Self {
        let s = &entry.session;
        Self {
            schema_version: API_SCHEMA_VERSION,
            id: s.id().to_string(),
            mesh: s.mesh().to_string(),
            state: s.state(),
            iteration: s.current_index(),
            iterations_computed: s.iterations().len(),
            max_iterations: s.config().max_iterations,
            seed: s.config().seed,
            kernel: s.config().kernel,
            pair_count: s.pairs().len(),
            error: entry.job_error.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshPayload {
    pub face_count: usize,
    pub vertex_count: usize,
    pub obj: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VariantPayload {
    pub slot: usize,
    /// Index of this variant in the session's preference pairs.
    pub variant_id: usize,
    pub mesh: MeshPayload,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IterationView {
    pub schema_version: u32,
    pub session_id: String,
    pub state: SessionState,
    pub record: IterationRecord,
    pub original: MeshPayload,
    pub variants: Vec<VariantPayload>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingsRequest {
    /// Iteration being rated. Resubmitting identical ratings for an already
    /// rated iteration succeeds without effect.
    #[serde(default)]
    pub iteration: Option<usize>,
    pub ratings: Vec<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminateRequest {
    pub reason: TerminationReason,
}

#[derive(Debug, Default, Deserialize)]
pub struct ExportFilter {
    pub state: Option<SessionState>,
    /// Only sessions in a terminal state.
    #[serde(default)]
    pub terminal: bool,
}

type AppState = Arc<Store>;

pub fn router(store: Arc<Store>) -> Router {
    let limit = store.config.max_upload_bytes;
    Router::new()
        .route(
            "/health",
            get(|| async { Json(json!({ "schema_version": API_SCHEMA_VERSION, "status": "ok" })) }),
        )
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/iterations/{k}", get(get_iteration))
        .route("/sessions/{id}/ratings", post(submit_ratings))
        .route("/sessions/{id}/terminate", post(terminate))
        .route("/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(store)
}

async fn entry(store: &Store, id: &str) -> Result<Arc<tokio::sync::Mutex<SessionEntry>>, ApiError> {
    store
        .get(id)
        .await
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))
}

fn parse_field<T: std::str::FromStr>(name: &str, bytes: &Bytes) -> Result<T, ApiError> {
    std::str::from_utf8(bytes)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| ApiError::BadRequest(format!("field {name} is not valid")))
}

/// `POST /sessions`: multipart with a `mesh` OBJ file and optional `name`,
/// `max_iterations` and `seed` fields.
async fn create_session(State(store): State<AppState>, mut form: Multipart) -> Result<Response, ApiError> {
    let mut mesh_bytes = None;
    let mut name = None;
    let mut max_iterations = store.config.max_iterations;
    let mut seed = None;
    while let Some(field) = form.next_field().await.map_err(multipart_error)? {
        let field_name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let data = field.bytes().await.map_err(multipart_error)?;
        match field_name.as_str() {
            "mesh" => {
                if name.is_none() {
                    name = file_name.map(|f| f.rsplit_once('.').map_or(f.clone(), |(stem, _)| stem.to_string()));
                }
                mesh_bytes = Some(data);
            }
            "name" => name = Some(String::from_utf8_lossy(&data).trim().to_string()),
            "max_iterations" => max_iterations = parse_field("max_iterations", &data)?,
            "seed" => seed = Some(parse_field("seed", &data)?),
            other => return Err(ApiError::BadRequest(format!("unexpected field {other}"))),
        }
    }
    let bytes = mesh_bytes.ok_or_else(|| ApiError::BadRequest("missing mesh field".into()))?;
    if max_iterations == 0 {
        return Err(ApiError::BadRequest("max_iterations must be at least 1".into()));
    }

    let size = store.config.quality_resolution;
    let original = tokio::task::spawn_blocking(move || -> Result<Original, ApiError> {
        let invalid = |e: &dyn std::fmt::Display| ApiError::Unprocessable(format!("invalid mesh: {e}"));
        let mesh: TriangleMesh = load_obj(Cursor::new(&bytes[..])).map_err(|e| invalid(&e))?;
        mesh.check_finite().map_err(|e| invalid(&e))?;
        if mesh.face_count() < 4 {
            return Err(invalid(&MeshError::TooFewFaces {
                faces: mesh.face_count(),
            }));
        }
        if mesh.bbox_diagonal().is_nan() || mesh.bbox_diagonal() <= 0.0 {
            return Err(invalid(&MeshError::DegenerateBounds));
        }
        let reference = QualityReference::with_size(&mesh, size).map_err(|e| invalid(&e))?;
        Ok(Original { mesh, reference })
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;

    let id = uuid::Uuid::new_v4().simple().to_string();
    let seed = seed.unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
    let config = SessionConfig {
        max_iterations,
        seed,
        ..Default::default()
    };
    let session = LoopSession::new(
        id,
        name.filter(|n| !n.is_empty()).unwrap_or_else(|| "upload".into()),
        config,
    );
    let entry = store
        .create(session, original)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let view = SessionView::of(&*entry.lock().await);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_sessions(State(store): State<AppState>) -> Json<serde_json::Value> {
    let mut views = Vec::new();
    for e in store.all().await {
        views.push(SessionView::of(&*e.lock().await));
    }
    Json(json!({ "schema_version": API_SCHEMA_VERSION, "sessions": views }))
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let e = entry(&store, &id).await?;
    let view = SessionView::of(&*e.lock().await);
    Ok(Json(view))
}

async fn read_mesh(path: std::path::PathBuf) -> Result<MeshPayload, ApiError> {
    let obj = tokio::fs::read_to_string(&path)
        .await
        .map_err(|e| ApiError::Internal(format!("{}: {e}", path.display())))?;
    let (mut vertex_count, mut face_count) = (0, 0);
    for line in obj.lines() {
        if line.starts_with("v ") {
            vertex_count += 1;
        } else if line.starts_with("f ") {
            face_count += 1;
        }
    }
    Ok(MeshPayload {
        face_count,
        vertex_count,
        obj,
    })
}

/// `GET /sessions/{id}/iterations/{k}`: 503 with `Retry-After` while the
/// iteration is being computed.
async fn get_iteration(
    State(store): State<AppState>,
    Path((id, k)): Path<(String, usize)>,
) -> Result<Json<IterationView>, ApiError> {
    let e = entry(&store, &id).await?;
    let (record, state) = {
        let e = e.lock().await;
        let s = &e.session;
        match s.iterations().get(k.wrapping_sub(1)) {
            Some(r) => (r.clone(), s.state()),
            None if k == s.current_index() && s.state() == SessionState::Computing => {
                return Err(match &e.job_error {
                    Some(msg) => ApiError::Internal(msg.clone()),
                    None => ApiError::NotReady,
                });
            }
            None => return Err(ApiError::NotFound(format!("session {id} has no iteration {k}"))),
        }
    };
    let original = read_mesh(store.original_path(&id)).await?;
    let mut variants = Vec::with_capacity(record.variants.len());
    for slot in 0..record.variants.len() {
        variants.push(VariantPayload {
            slot,
            variant_id: variant_id(k, slot),
            mesh: read_mesh(store.variant_path(&id, k, slot)).await?,
        });
    }
    Ok(Json(IterationView {
        schema_version: API_SCHEMA_VERSION,
        session_id: id,
        state,
        record,
        original,
        variants,
    }))
}

async fn submit_ratings(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RatingsRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let ratings = req
        .ratings
        .iter()
        .map(|&r| Rating::new(r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    let e = entry(&store, &id).await?;
    let mut e = e.lock().await;
    let s = &e.session;
    let index = req.iteration.unwrap_or_else(|| s.current_index());
    if let Some(previous) = s.iterations().get(index.wrapping_sub(1)).and_then(|it| it.ratings()) {
        return if previous == ratings {
            Ok(Json(SessionView::of(&e)))
        } else {
            Err(ApiError::Conflict(format!(
                "iteration {index} was already rated differently"
            )))
        };
    }
    if index != s.current_index() {
        return Err(ApiError::Conflict(format!(
            "iteration {index} cannot be rated; session is at {}",
            s.current_index()
        )));
    }
    let mut next = e.session.clone();
    next.submit_ratings(&ratings)?;
    let event = Event::Rated {
        session_id: id.clone(),
        index,
        ratings,
        timestamp_ms: now_ms(),
    };
    store.append(&event).map_err(|e| ApiError::Internal(e.to_string()))?;
    e.session = next;
    if e.session.state() == SessionState::Computing {
        store.spawn_iteration(id);
    }
    Ok(Json(SessionView::of(&e)))
}

async fn terminate(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<TerminateRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let e = entry(&store, &id).await?;
    let mut e = e.lock().await;
    let mut next = e.session.clone();
    next.terminate(req.reason)?;
    store
        .append(&Event::Terminated {
            session_id: id,
            reason: req.reason,
            timestamp_ms: now_ms(),
        })
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    e.session = next;
    Ok(Json(SessionView::of(&e)))
}

/// `GET /export`: one evaluation sequence per line, in creation order.
async fn export(State(store): State<AppState>, Query(filter): Query<ExportFilter>) -> Response {
    let mut body = Vec::new();
    for e in store.all().await {
        let seq = e.lock().await.session.to_sequence();
        if filter.terminal && !seq.state.is_terminal() {
            continue;
        }
        if filter.state.is_some_and(|s| s != seq.state) {
            continue;
        }
        seq.write_jsonl(&mut body).expect("writing to memory");
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}
