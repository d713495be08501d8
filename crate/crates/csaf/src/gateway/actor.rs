//! The command queue. One task owns the scene, presets and live session;
//! every request becomes a [`Command`] applied in arrival order, between
//! simulation ticks.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use csaf_core::environment::SceneDescription;
use csaf_core::locomotion::ControllerInputs;
use csaf_core::registry::{EntityId, PresetLibrary, Registry, SceneEntity, Value};
use csaf_core::runtime::{
    next_node, EventRecord, ExperimentSet, NodeResults, RuntimeError, Session, SessionPlan,
    SessionSummary,
};
use serde::Serialize;
use tokio::sync::{broadcast, mpsc, oneshot};

use super::{EntityView, GatewayError, SceneView, SessionView, TelemetryFrame};
use crate::artifacts;
use crate::bundled::{load_plan, load_scene};
use crate::experiment::apply_preset_refs;
use crate::store::PresetStore;

type Reply<T> = oneshot::Sender<Result<T, GatewayError>>;

/// Session start request: an explicit plan, a bundled or on-disk plan
/// reference, an experiment set, or nothing (plan derived from the scene).
#[derive(Debug, Default, serde::Deserialize)]
pub struct StartRequest {
    #[serde(default)]
    pub plan: Option<SessionPlan>,
    #[serde(default)]
    pub plan_ref: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub presets: Vec<String>,
    #[serde(default)]
    pub set: Option<ExperimentSet>,
}

#[derive(Debug)]
pub enum Command {
    LoadScene {
        reference: Option<String>,
        scene: Option<Box<SceneDescription>>,
        reply: Reply<SceneView>,
    },
    TogglePreset {
        entity: u64,
        type_id: String,
        enabled: bool,
        reply: Reply<EntityView>,
    },
    ApplyPreset {
        entity: u64,
        type_id: String,
        preset_name: String,
        reply: Reply<EntityView>,
    },
    SavePreset {
        type_id: String,
        name: String,
        values: BTreeMap<String, Value>,
        from_entity: Option<u64>,
        reply: Reply<serde_json::Value>,
    },
    DeletePreset {
        type_id: String,
        name: String,
        reply: Reply<()>,
    },
    StartSession {
        request: Box<StartRequest>,
        reply: Reply<SessionView>,
    },
    StopSession {
        reply: Reply<SessionView>,
    },
    SubmitFms {
        rating: i64,
        source: String,
        reply: Reply<SessionView>,
    },
    SubmitHit {
        target: String,
        reply: Reply<SessionView>,
    },
    AdvanceSet {
        reply: Reply<SessionView>,
    },
    Query(Query),
}

/// Read-only requests. They travel through the same queue so a reader
/// never observes half of a command.
#[derive(Debug)]
pub enum Query {
    Scene(Reply<SceneView>),
    Types(Reply<serde_json::Value>),
    Presets {
        type_id: Option<String>,
        reply: Reply<serde_json::Value>,
    },
    Preset {
        type_id: String,
        name: String,
        reply: Reply<serde_json::Value>,
    },
    Session(Reply<SessionView>),
}

struct Live {
    id: u32,
    session: Session,
    /// Events already pushed to telemetry.
    sent: usize,
    backlog: f64,
}

struct Finished {
    id: u32,
    plan_name: String,
    summary: SessionSummary,
    events: Vec<EventRecord>,
    dir: Option<PathBuf>,
}

struct SetProgress {
    set: ExperimentSet,
    current: String,
    visits: BTreeMap<String, u32>,
    seed: u64,
}

pub struct Actor {
    registry: Registry,
    scene: SceneDescription,
    store: PresetStore,
    library: PresetLibrary,
    data_dir: PathBuf,
    live: Option<Live>,
    last: Option<Finished>,
    set: Option<SetProgress>,
    next_id: u32,
    seq: u64,
    telemetry: broadcast::Sender<TelemetryFrame>,
    time_scale: f64,
}

fn runtime_error(e: RuntimeError) -> GatewayError {
    match e {
        RuntimeError::NoPendingFms
        | RuntimeError::Finished
        | RuntimeError::TargetNotSpawned(_)
        | RuntimeError::TargetAlreadyHit(_) => GatewayError::Conflict(e.to_string()),
        RuntimeError::UnknownTarget(_) => GatewayError::NotFound(e.to_string()),
        other => GatewayError::Invalid(other.to_string()),
    }
}

fn json<T: Serialize>(v: &T) -> Result<serde_json::Value, GatewayError> {
    serde_json::to_value(v).map_err(|e| GatewayError::Internal(e.to_string()))
}

impl Actor {
    pub fn new(
        registry: Registry,
        scene: SceneDescription,
        data_dir: PathBuf,
        telemetry: broadcast::Sender<TelemetryFrame>,
        time_scale: f64,
    ) -> Result<Self, GatewayError> {
        let store = PresetStore::new(data_dir.join("presets"));
        let (library, _) = store
            .load(&registry)
            .map_err(|e| GatewayError::Invalid(e.to_string()))?;
        Ok(Actor {
            registry,
            scene,
            store,
            library,
            data_dir,
            live: None,
            last: None,
            set: None,
            next_id: 1,
            seq: 0,
            telemetry,
            time_scale,
        })
    }

    /// Serves commands until every sender is gone, advancing the live
    /// session on each telemetry period.
    pub async fn run(mut self, mut rx: mpsc::Receiver<Command>, period: Duration) {
        let mut ticker = tokio::time::interval(period);
        ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
        let mut last = Instant::now();
        loop {
            tokio::select! {
                cmd = rx.recv() => match cmd {
                    Some(cmd) => self.handle(cmd),
                    None => break,
                },
                _ = ticker.tick() => {
                    let now = Instant::now();
                    let wall = now.duration_since(last).as_secs_f64();
                    last = now;
                    self.advance(wall * self.time_scale);
                }
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        // A dropped receiver means the client went away; nothing to report.
        match cmd {
            Command::LoadScene {
                reference,
                scene,
                reply,
            } => {
                let _ = reply.send(self.load_scene(reference, scene.map(|s| *s)));
            }
            Command::TogglePreset {
                entity,
                type_id,
                enabled,
                reply,
            } => {
                let r = self.edit_entity(entity, |reg, e| {
                    reg.toggle_feature(e, &type_id, enabled)
                        .map_err(|err| GatewayError::Invalid(err.to_string()))
                });
                let _ = reply.send(r);
            }
            Command::ApplyPreset {
                entity,
                type_id,
                preset_name,
                reply,
            } => {
                let doc = self.library.get(&type_id, &preset_name).cloned();
                let r = match doc {
                    None => Err(GatewayError::NotFound(format!(
                        "preset {type_id}.{preset_name}"
                    ))),
                    Some(doc) => self.edit_entity(entity, |reg, e| {
                        reg.apply_preset(e, &doc)
                            .map(|a| a.entity)
                            .map_err(|err| GatewayError::Invalid(err.to_string()))
                    }),
                };
                let _ = reply.send(r);
            }
            Command::SavePreset {
                type_id,
                name,
                values,
                from_entity,
                reply,
            } => {
                let _ = reply.send(self.save_preset(&type_id, &name, values, from_entity));
            }
            Command::DeletePreset {
                type_id,
                name,
                reply,
            } => {
                let r = match self.library.remove(&type_id, &name) {
                    None => Err(GatewayError::NotFound(format!("preset {type_id}.{name}"))),
                    Some(_) => self
                        .store
                        .delete(&type_id, &name)
                        .map(|_| ())
                        .map_err(|e| GatewayError::Internal(e.to_string())),
                };
                let _ = reply.send(r);
            }
            Command::StartSession { request, reply } => {
                let _ = reply.send(self.start(*request));
            }
            Command::StopSession { reply } => {
                let r = match self.live.as_mut() {
                    None => Err(GatewayError::Conflict("no session is running".into())),
                    Some(live) => {
                        live.session.stop();
                        self.publish();
                        self.conclude();
                        Ok(self.session_view())
                    }
                };
                let _ = reply.send(r);
            }
            Command::SubmitFms {
                rating,
                source,
                reply,
            } => {
                let r = self.with_session(|s| s.submit_fms(rating, &source));
                let _ = reply.send(r);
            }
            Command::SubmitHit { target, reply } => {
                let r = self.with_session(|s| s.submit_hit(&target));
                let _ = reply.send(r);
            }
            Command::AdvanceSet { reply } => {
                let _ = reply.send(self.advance_set());
            }
            Command::Query(q) => self.query(q),
        }
    }

    fn query(&self, q: Query) {
        match q {
            Query::Scene(reply) => {
                let _ = reply.send(Ok(self.scene_view()));
            }
            Query::Types(reply) => {
                let _ = reply.send(json(&self.registry.types()));
            }
            Query::Presets { type_id, reply } => {
                let docs: Vec<_> = match &type_id {
                    Some(t) => self.library.list_presets_for(t).collect(),
                    None => self.library.iter().collect(),
                };
                let _ = reply.send(json(&docs));
            }
            Query::Preset {
                type_id,
                name,
                reply,
            } => {
                let r = match self.library.get(&type_id, &name) {
                    Some(doc) => json(doc),
                    None => Err(GatewayError::NotFound(format!("preset {type_id}.{name}"))),
                };
                let _ = reply.send(r);
            }
            Query::Session(reply) => {
                let _ = reply.send(Ok(self.session_view()));
            }
        }
    }

    fn idle(&self) -> Result<(), GatewayError> {
        match &self.live {
            Some(_) => Err(GatewayError::Conflict("a session is running".into())),
            None => Ok(()),
        }
    }

    fn load_scene(
        &mut self,
        reference: Option<String>,
        scene: Option<SceneDescription>,
    ) -> Result<SceneView, GatewayError> {
        self.idle()?;
        let scene = match (reference, scene) {
            (_, Some(s)) => {
                for e in &s.entities {
                    self.registry
                        .check_entity(e)
                        .map_err(|err| GatewayError::Invalid(format!("entity {}: {err}", e.id)))?;
                }
                s
            }
            (Some(r), None) => load_scene(&r, Some(&self.data_dir), &self.registry)
                .map_err(|e| GatewayError::Invalid(e.to_string()))?,
            (None, None) => {
                return Err(GatewayError::Invalid("give a scene name or a scene".into()))
            }
        };
        self.scene = scene;
        Ok(self.scene_view())
    }

    fn edit_entity(
        &mut self,
        id: u64,
        f: impl FnOnce(&Registry, &SceneEntity) -> Result<SceneEntity, GatewayError>,
    ) -> Result<EntityView, GatewayError> {
        self.idle()?;
        let idx = self
            .scene
            .entities
            .iter()
            .position(|e| e.id == EntityId(id))
            .ok_or_else(|| GatewayError::NotFound(format!("entity {id}")))?;
        let updated = f(&self.registry, &self.scene.entities[idx])?;
        self.scene.entities[idx] = updated;
        Ok(EntityView::new(&self.registry, &self.scene.entities[idx]))
    }

    fn save_preset(
        &mut self,
        type_id: &str,
        name: &str,
        values: BTreeMap<String, Value>,
        from_entity: Option<u64>,
    ) -> Result<serde_json::Value, GatewayError> {
        let invalid = |e: csaf_core::registry::RegistryError| GatewayError::Invalid(e.to_string());
        let doc = match from_entity {
            Some(id) => {
                let e = self
                    .scene
                    .entities
                    .iter()
                    .find(|e| e.id == EntityId(id))
                    .ok_or_else(|| GatewayError::NotFound(format!("entity {id}")))?;
                self.registry
                    .extract_preset(e, type_id, name)
                    .map_err(invalid)?
            }
            None => self
                .registry
                .create_preset(type_id, name, values)
                .map_err(invalid)?,
        };
        self.store
            .save(&doc)
            .map_err(|e| GatewayError::Internal(e.to_string()))?;
        let out = json(&doc)?;
        self.library.insert(doc);
        Ok(out)
    }

    fn start(&mut self, req: StartRequest) -> Result<SessionView, GatewayError> {
        self.idle()?;
        let invalid = |e: crate::LoadError| GatewayError::Invalid(e.to_string());
        if let Some(set) = req.set {
            set.validate().map_err(runtime_error)?;
            let start = set.start.clone();
            self.set = Some(SetProgress {
                set,
                current: start.clone(),
                visits: BTreeMap::new(),
                seed: req.seed.unwrap_or(0),
            });
            return self.start_node(&start);
        }
        self.set = None;
        let mut plan = match (req.plan, req.plan_ref) {
            (Some(p), _) => p,
            (None, Some(r)) => load_plan(&r).map_err(invalid)?.0,
            (None, None) => SessionPlan::from_scene(&self.scene),
        };
        if !req.presets.is_empty() {
            apply_preset_refs(&mut self.scene, &req.presets, &self.library, &self.registry)
                .map_err(invalid)?;
        }
        if let Some(seed) = req.seed {
            plan.seed = seed;
        }
        plan.scene = self.scene.name.clone();
        self.launch(plan)
    }

    fn start_node(&mut self, id: &str) -> Result<SessionView, GatewayError> {
        let invalid = |e: crate::LoadError| GatewayError::Invalid(e.to_string());
        let progress = self.set.as_mut().expect("set in progress");
        let node = progress
            .set
            .node(id)
            .cloned()
            .ok_or_else(|| GatewayError::NotFound(format!("node {id}")))?;
        progress.current = node.id.clone();
        *progress.visits.entry(node.id.clone()).or_default() += 1;
        let seed = progress.seed;
        let mut scene = if node.scene.is_empty() {
            self.scene.clone()
        } else {
            load_scene(&node.scene, Some(&self.data_dir), &self.registry).map_err(invalid)?
        };
        apply_preset_refs(&mut scene, &node.presets, &self.library, &self.registry)
            .map_err(invalid)?;
        let mut plan = if node.plan.is_empty() {
            SessionPlan::from_scene(&scene)
        } else {
            let reference = if crate::bundled::bundled_plan(&node.plan).is_some() {
                node.plan.clone()
            } else {
                self.data_dir
                    .join(&node.plan)
                    .to_string_lossy()
                    .into_owned()
            };
            load_plan(&reference).map_err(invalid)?.0
        };
        plan.seed = seed;
        plan.scene = scene.name.clone();
        self.scene = scene;
        self.launch(plan)
    }

    fn advance_set(&mut self) -> Result<SessionView, GatewayError> {
        self.idle()?;
        let progress = self
            .set
            .as_ref()
            .ok_or_else(|| GatewayError::Conflict("no experiment set is loaded".into()))?;
        let last = self
            .last
            .as_ref()
            .ok_or_else(|| GatewayError::Conflict("the current node has not run".into()))?;
        let results = NodeResults::from_summary(&last.summary);
        let next = next_node(&progress.set, &progress.current, &results, &progress.visits)
            .map_err(runtime_error)?
            .map(|n| n.id.clone());
        match next {
            Some(id) => self.start_node(&id),
            None => {
                self.set = None;
                Ok(self.session_view())
            }
        }
    }

    fn launch(&mut self, plan: SessionPlan) -> Result<SessionView, GatewayError> {
        let mut session = Session::start(plan, &self.scene).map_err(runtime_error)?;
        session.apply_fms_script().map_err(runtime_error)?;
        let id = self.next_id;
        self.next_id += 1;
        self.live = Some(Live {
            id,
            session,
            sent: 0,
            backlog: 0.0,
        });
        self.publish();
        Ok(self.session_view())
    }

    fn with_session(
        &mut self,
        f: impl FnOnce(&mut Session) -> Result<(), RuntimeError>,
    ) -> Result<SessionView, GatewayError> {
        let live = self
            .live
            .as_mut()
            .ok_or_else(|| GatewayError::Conflict("no session is running".into()))?;
        f(&mut live.session).map_err(runtime_error)?;
        self.publish();
        Ok(self.session_view())
    }

    /// Runs as many fixed ticks as `seconds` of session time covers.
    fn advance(&mut self, seconds: f64) {
        let Some(live) = self.live.as_mut() else {
            return;
        };
        let dt = live.session.plan().dt;
        live.backlog += seconds;
        let mut ticked = false;
        while live.backlog + 1e-12 >= dt && !live.session.is_finished() {
            live.backlog -= dt;
            ticked = true;
            if live.session.tick(&ControllerInputs::default()).is_err() {
                break;
            }
            if !live.session.is_finished() && live.session.apply_fms_script().is_err() {
                break;
            }
        }
        if ticked {
            self.publish();
        }
        if self.live.as_ref().is_some_and(|l| l.session.is_finished()) {
            self.conclude();
        }
    }

    fn publish(&mut self) {
        let Some(live) = self.live.as_mut() else {
            return;
        };
        let s = &live.session;
        let events = s.events()[live.sent..].to_vec();
        live.sent = s.events().len();
        self.seq += 1;
        let frame = TelemetryFrame {
            seq: self.seq,
            session: live.id,
            t: s.state().clock,
            position: s.state().rig.position,
            orientation: s.state().rig.heading,
            effects: *s.effect_frame(),
            phase: s.current_phase().map(|p| p.kind),
            pending_fms: s.state().pending_fms,
            events,
            finished: s.is_finished(),
        };
        // No subscribers is fine.
        let _ = self.telemetry.send(frame);
    }

    /// Finalizes the live session and writes its artifacts.
    fn conclude(&mut self) {
        let Some(live) = self.live.take() else { return };
        let run = live.session.finalize();
        let plan = live.session.plan();
        let name = if plan.name.is_empty() {
            "session"
        } else {
            plan.name.as_str()
        };
        let dir = self
            .data_dir
            .join("sessions")
            .join(format!("{:03}-{name}", live.id));
        let dir = artifacts::write_run(&dir, plan, &run).ok().map(|_| dir);
        self.last = Some(Finished {
            id: live.id,
            plan_name: plan.name.clone(),
            summary: run.summary,
            events: run.event_log,
            dir,
        });
    }

    fn scene_view(&self) -> SceneView {
        SceneView {
            name: self.scene.name.clone(),
            theme: self.scene.theme.clone(),
            categories: self
                .registry
                .list_categories()
                .into_iter()
                .map(|c| c.as_str().to_string())
                .collect(),
            entities: self
                .scene
                .entities
                .iter()
                .map(|e| EntityView::new(&self.registry, e))
                .collect(),
        }
    }

    fn session_view(&self) -> SessionView {
        let set_node = self.set.as_ref().map(|p| p.current.clone());
        if let Some(live) = &self.live {
            let s = &live.session;
            return SessionView {
                status: "running".into(),
                id: Some(live.id),
                plan_name: s.plan().name.clone(),
                clock: s.state().clock,
                end_time: s.end_time(),
                phase: s.current_phase().map(|p| p.kind),
                pending_fms: s.state().pending_fms,
                fms_ratings: s.fms_ratings().to_vec(),
                events: s.events().to_vec(),
                summary: None,
                artifacts_dir: None,
                set_node,
            };
        }
        match &self.last {
            Some(f) => SessionView {
                status: "finished".into(),
                id: Some(f.id),
                plan_name: f.plan_name.clone(),
                clock: f.summary.duration_s,
                end_time: f.summary.duration_s,
                phase: None,
                pending_fms: None,
                fms_ratings: f.summary.fms_ratings.clone(),
                events: f.events.clone(),
                summary: Some(f.summary.clone()),
                artifacts_dir: f.dir.as_ref().map(|d| d.to_string_lossy().into_owned()),
                set_node,
            },
            None => SessionView {
                status: "idle".into(),
                set_node,
                ..SessionView::default()
            },
        }
    }
}
