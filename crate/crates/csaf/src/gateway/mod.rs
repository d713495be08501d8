//! HTTP gateway for the setup panel.
//!
//! Handlers never touch state directly. Each request is turned into a
//! command for the actor in [`actor`] and awaits its reply, so mutations are
//! serialized and reads see whole commands only. Telemetry goes out over a
//! broadcast channel and is exposed as a server-sent event stream.

mod actor;

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::{Path, Query as QueryParams, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use csaf_core::math::{Quat, Vec3};
use csaf_core::registry::{Attachment, EntityId, Registry, SceneEntity, Value};
use csaf_core::runtime::{EventRecord, PendingFms, PhaseKind, SessionSummary};
use csaf_core::vision::EffectFrame;
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};

use actor::Actor;
pub use actor::{Command, Query, StartRequest};

use crate::bundled::load_scene;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Internal(String),
}

impl GatewayError {
    pub fn status(&self) -> StatusCode {
        match self {
            GatewayError::NotFound(_) => StatusCode::NOT_FOUND,
            GatewayError::Conflict(_) => StatusCode::CONFLICT,
            GatewayError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            GatewayError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

/// One telemetry message. `t` never decreases within a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub seq: u64,
    pub session: u32,
    pub t: f64,
    pub position: Vec3,
    pub orientation: Quat,
    pub effects: EffectFrame,
    pub phase: Option<PhaseKind>,
    pub pending_fms: Option<PendingFms>,
    /// Events logged since the previous frame.
    pub events: Vec<EventRecord>,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub id: EntityId,
    pub display_name: String,
    pub attachments: Vec<Attachment>,
    pub available_extensions: Vec<String>,
}

impl EntityView {
    fn new(registry: &Registry, e: &SceneEntity) -> Self {
        EntityView {
            id: e.id,
            display_name: e.display_name.clone(),
            attachments: e.attachments.clone(),
            available_extensions: registry
                .available_extensions(e)
                .into_iter()
                .map(|t| t.identifier.clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub name: String,
    pub theme: String,
    pub categories: Vec<String>,
    pub entities: Vec<EntityView>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionView {
    /// `idle`, `running` or `finished`.
    pub status: String,
    pub id: Option<u32>,
    pub plan_name: String,
    pub clock: f64,
    pub end_time: f64,
    pub phase: Option<PhaseKind>,
    pub pending_fms: Option<PendingFms>,
    pub fms_ratings: Vec<i64>,
    pub events: Vec<EventRecord>,
    pub summary: Option<SessionSummary>,
    pub artifacts_dir: Option<String>,
    pub set_node: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FmsSource {
    Participant,
    Experimenter,
}

impl FmsSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FmsSource::Participant => "participant",
            FmsSource::Experimenter => "experimenter",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    /// Bundled scene name or scene file.
    pub scene: String,
    /// Root for presets and session artifacts.
    pub data_dir: PathBuf,
    pub telemetry_hz: f64,
    /// Session seconds per wall-clock second.
    pub time_scale: f64,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            scene: "forest-simple".into(),
            data_dir: PathBuf::from("csaf-data"),
            telemetry_hz: 20.0,
            time_scale: 1.0,
        }
    }
}

#[derive(Clone)]
struct Gateway {
    commands: mpsc::Sender<Command>,
    telemetry: broadcast::Sender<TelemetryFrame>,
}

impl Gateway {
    async fn ask<T>(
        &self,
        make: impl FnOnce(oneshot::Sender<Result<T, GatewayError>>) -> Command,
    ) -> Result<T, GatewayError> {
        let (tx, rx) = oneshot::channel();
        let gone = || GatewayError::Internal("command queue is closed".into());
        self.commands.send(make(tx)).await.map_err(|_| gone())?;
        rx.await.map_err(|_| gone())?
    }
}

type Reply<T> = Result<Json<T>, GatewayError>;

/// Builds the router and starts the actor. The actor stops once the router
/// and every clone of it are dropped.
pub fn router(cfg: ServeConfig) -> Result<Router, GatewayError> {
    let registry = csaf_core::registry::builtin_registry();
    let scene = load_scene(&cfg.scene, Some(&cfg.data_dir), &registry)
        .map_err(|e| GatewayError::Invalid(e.to_string()))?;
    if !(cfg.telemetry_hz > 0.0 && cfg.time_scale > 0.0) {
        return Err(GatewayError::Invalid(
            "telemetry rate and time scale must be positive".into(),
        ));
    }
    let (telemetry, _) = broadcast::channel(256);
    let actor = Actor::new(
        registry,
        scene,
        cfg.data_dir.clone(),
        telemetry.clone(),
        cfg.time_scale,
    )?;
    let (commands, rx) = mpsc::channel(64);
    tokio::spawn(actor.run(rx, Duration::from_secs_f64(1.0 / cfg.telemetry_hz)));
    let state = Gateway {
        commands,
        telemetry,
    };
    Ok(Router::new()
        .route("/scene", get(get_scene).put(put_scene))
        .route("/scene/entities/{id}/toggle", post(toggle))
        .route("/scene/entities/{id}/apply", post(apply))
        .route("/types", get(get_types))
        .route("/presets", get(list_presets))
        .route(
            "/presets/{type_id}/{name}",
            get(get_preset).put(put_preset).delete(delete_preset),
        )
        .route("/session", get(get_session))
        .route("/session/start", post(start_session))
        .route("/session/stop", post(stop_session))
        .route("/fms", post(submit_fms))
        .route("/hit", post(submit_hit))
        .route("/set/advance", post(advance_set))
        .route("/events", get(events))
        .with_state(state))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    cfg: ServeConfig,
    listener: TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let app = router(cfg)?;
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

async fn get_scene(State(g): State<Gateway>) -> Reply<SceneView> {
    g.ask(|r| Command::Query(Query::Scene(r))).await.map(Json)
}

#[derive(Debug, Deserialize)]
struct SceneBody {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    scene: Option<Box<csaf_core::environment::SceneDescription>>,
}

async fn put_scene(State(g): State<Gateway>, Json(body): Json<SceneBody>) -> Reply<SceneView> {
    g.ask(|reply| Command::LoadScene {
        reference: body.name,
        scene: body.scene,
        reply,
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
struct ToggleBody {
    type_id: String,
    enabled: bool,
}

async fn toggle(
    State(g): State<Gateway>,
    Path(id): Path<u64>,
    Json(body): Json<ToggleBody>,
) -> Reply<EntityView> {
    g.ask(|reply| Command::TogglePreset {
        entity: id,
        type_id: body.type_id,
        enabled: body.enabled,
        reply,
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
struct ApplyBody {
    type_id: String,
    preset_name: String,
}

async fn apply(
    State(g): State<Gateway>,
    Path(id): Path<u64>,
    Json(body): Json<ApplyBody>,
) -> Reply<EntityView> {
    g.ask(|reply| Command::ApplyPreset {
        entity: id,
        type_id: body.type_id,
        preset_name: body.preset_name,
        reply,
    })
    .await
    .map(Json)
}

async fn get_types(State(g): State<Gateway>) -> Reply<serde_json::Value> {
    g.ask(|r| Command::Query(Query::Types(r))).await.map(Json)
}

#[derive(Debug, Deserialize)]
struct PresetFilter {
    #[serde(default, rename = "type")]
    type_id: Option<String>,
}

async fn list_presets(
    State(g): State<Gateway>,
    QueryParams(f): QueryParams<PresetFilter>,
) -> Reply<serde_json::Value> {
    g.ask(|reply| {
        Command::Query(Query::Presets {
            type_id: f.type_id,
            reply,
        })
    })
    .await
    .map(Json)
}

async fn get_preset(
    State(g): State<Gateway>,
    Path((type_id, name)): Path<(String, String)>,
) -> Reply<serde_json::Value> {
    g.ask(|reply| {
        Command::Query(Query::Preset {
            type_id,
            name,
            reply,
        })
    })
    .await
    .map(Json)
}

/// Either explicit values (missing fields take defaults) or a capture of an
/// entity's current attachment.
#[derive(Debug, Default, Deserialize)]
struct PresetBody {
    #[serde(default)]
    values: BTreeMap<String, Value>,
    #[serde(default)]
    from_entity: Option<u64>,
}

async fn put_preset(
    State(g): State<Gateway>,
    Path((type_id, name)): Path<(String, String)>,
    Json(body): Json<PresetBody>,
) -> Reply<serde_json::Value> {
    g.ask(|reply| Command::SavePreset {
        type_id,
        name,
        values: body.values,
        from_entity: body.from_entity,
        reply,
    })
    .await
    .map(Json)
}

async fn delete_preset(
    State(g): State<Gateway>,
    Path((type_id, name)): Path<(String, String)>,
) -> Result<StatusCode, GatewayError> {
    g.ask(|reply| Command::DeletePreset {
        type_id,
        name,
        reply,
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_session(State(g): State<Gateway>) -> Reply<SessionView> {
    g.ask(|r| Command::Query(Query::Session(r))).await.map(Json)
}

async fn start_session(
    State(g): State<Gateway>,
    body: Option<Json<StartRequest>>,
) -> Reply<SessionView> {
    let request = Box::new(body.map(|Json(b)| b).unwrap_or_default());
    g.ask(|reply| Command::StartSession { request, reply })
        .await
        .map(Json)
}

async fn stop_session(State(g): State<Gateway>) -> Reply<SessionView> {
    g.ask(|reply| Command::StopSession { reply })
        .await
        .map(Json)
}

#[derive(Debug, Deserialize)]
struct FmsBody {
    rating: i64,
    source: FmsSource,
}

async fn submit_fms(State(g): State<Gateway>, Json(body): Json<FmsBody>) -> Reply<SessionView> {
    g.ask(|reply| Command::SubmitFms {
        rating: body.rating,
        source: body.source.as_str().to_string(),
        reply,
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
struct HitBody {
    target: String,
}

async fn submit_hit(State(g): State<Gateway>, Json(body): Json<HitBody>) -> Reply<SessionView> {
    g.ask(|reply| Command::SubmitHit {
        target: body.target,
        reply,
    })
    .await
    .map(Json)
}

async fn advance_set(State(g): State<Gateway>) -> Reply<SessionView> {
    g.ask(|reply| Command::AdvanceSet { reply }).await.map(Json)
}

/// Telemetry as server-sent events, one JSON frame per `telemetry` event.
/// A slow client that falls behind skips the frames it missed.
async fn events(State(g): State<Gateway>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = g.telemetry.subscribe();
    let stream = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(frame) => {
                    let event = Event::default()
                        .event("telemetry")
                        .json_data(&frame)
                        .unwrap_or_else(|_| Event::default().event("error"));
                    return Some((Ok(event), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}
