//! Session state machine: phases, FMS prompting, pose and event logging,
//! collectible pickup and experiment-set sequencing.
//!
//! Time advances in fixed ticks of `plan.dt`. Scheduled occurrences (phase
//! starts, FMS prompts, target spawns) are logged at their nominal times;
//! the pose log is resampled to exact multiples of `1 / log_rate`.

mod plan;
mod set;
mod summary;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use plan::{FmsCfg, FmsScript, Motion, Phase, PhaseKind, SessionPlan, TargetSpec};
pub use set::{
    next_node, parse_condition, CmpOp, Condition, ExperimentEdge, ExperimentNode, ExperimentSet,
    Metric, NodeResults,
};
pub use summary::{
    format_minutes, BreakdownThresholds, ControlType, MotionBreakdown, PhaseRecord, SessionSummary,
};

use crate::environment::{
    build_path, generate_terrain, place_collectibles, EnvError, PathTable, SceneDescription,
};
use crate::locomotion::{
    configure_handler, step, ControllerInputs, InputTrace, LocomotionContext, LocomotionError,
    LocomotionEvent, Provider, ProviderEntry, ProviderSet, RigState, Surface,
};
use crate::math::{Pose, PoseSample, Quat, Vec3};
use crate::registry::Value;
use crate::susceptibility::{
    build_sensitivity_schedule, schedule_pose, SegmentKind, StimulusSchedule, SusceptibilityError,
};
use crate::vision::{EffectEngine, EffectFrame, EffectsConfig, MotionSample};

/// Name of the scene path inside the locomotion context.
pub const MAIN_PATH: &str = "main";

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Locomotion(#[from] LocomotionError),
    #[error(transparent)]
    Susceptibility(#[from] SusceptibilityError),
    #[error("no FMS prompt is pending")]
    NoPendingFms,
    #[error("FMS rating {rating} outside [{min}, {max}]")]
    FmsOutOfRange { rating: i64, min: i64, max: i64 },
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("target `{0}` has not appeared yet")]
    TargetNotSpawned(String),
    #[error("target `{0}` was already hit")]
    TargetAlreadyHit(String),
    #[error("session has finished")]
    Finished,
    #[error("malformed condition `{0}`")]
    MalformedCondition(String),
    #[error("invalid experiment set: {0}")]
    InvalidSet(String),
}

pub type Result<T, E = RuntimeError> = core::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    PhaseStart,
    FmsPrompt,
    FmsResponse,
    CoinCollected,
    TargetHit,
    Teleport,
    Snap,
    IndicatorShown,
    /// Anything else; the `name` payload entry says what.
    Custom,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PhaseStart => "PhaseStart",
            EventKind::FmsPrompt => "FmsPrompt",
            EventKind::FmsResponse => "FmsResponse",
            EventKind::CoinCollected => "CoinCollected",
            EventKind::TargetHit => "TargetHit",
            EventKind::Teleport => "Teleport",
            EventKind::Snap => "Snap",
            EventKind::IndicatorShown => "IndicatorShown",
            EventKind::Custom => "Custom",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        Some(match s {
            "PhaseStart" => EventKind::PhaseStart,
            "FmsPrompt" => EventKind::FmsPrompt,
            "FmsResponse" => EventKind::FmsResponse,
            "CoinCollected" => EventKind::CoinCollected,
            "TargetHit" => EventKind::TargetHit,
            "Teleport" => EventKind::Teleport,
            "Snap" => EventKind::Snap,
            "IndicatorShown" => EventKind::IndicatorShown,
            "Custom" => EventKind::Custom,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub payload: BTreeMap<String, Value>,
}

impl EventRecord {
    pub fn new(t: f64, kind: EventKind) -> Self {
        EventRecord {
            t,
            kind,
            payload: BTreeMap::new(),
        }
    }

    pub fn custom(t: f64, name: &str) -> Self {
        EventRecord::new(t, EventKind::Custom).with("name", name)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.payload.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingFms {
    pub index: u32,
    pub t: f64,
}

/// Snapshot of a running session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub tick: u64,
    pub clock: f64,
    pub phase_index: usize,
    pub phase_start: f64,
    pub rig: RigState,
    pub pending_fms: Option<PendingFms>,
    pub collected: BTreeSet<usize>,
    pub finished: bool,
    pub stopped: bool,
}

impl SessionState {
    pub fn pending(&self) -> bool {
        self.pending_fms.is_some()
    }
}

/// Everything a finished session leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub summary: SessionSummary,
    pub pose_log: Vec<PoseSample>,
    pub event_log: Vec<EventRecord>,
    pub effect_log: Vec<EffectFrame>,
}

#[derive(Debug, Clone, PartialEq)]
struct TargetState {
    spec: TargetSpec,
    spawned: bool,
    hit: bool,
}

/// Scene geometry the session acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRuntime {
    pub context: LocomotionContext,
    pub path: Option<PathTable>,
}

impl SceneRuntime {
    pub fn build(scene: &SceneDescription) -> Result<Self> {
        let mut context = LocomotionContext::default();
        let path = match &scene.path {
            Some(spec) => Some(build_path(spec)?),
            None => None,
        };
        if let Some(table) = &path {
            context.paths.insert(MAIN_PATH.to_string(), table.clone());
        }
        match &scene.terrain {
            Some(spec) => context
                .surfaces
                .push(Surface::Terrain(generate_terrain(spec)?)),
            None => context.surfaces.push(Surface::floor(scene.floor_height)),
        }
        Ok(SceneRuntime { context, path })
    }
}

fn path_start_pose(table: &PathTable) -> Result<Pose> {
    let (p, tangent) = table.pose_at(0.0)?;
    let yaw = libm::atan2(tangent.x, tangent.z).to_degrees();
    Ok(Pose::new(p, Quat::from_yaw(yaw)))
}

fn horizontal_segment_distance(a: Vec3, b: Vec3, p: Vec3) -> f64 {
    let (a, b, p) = (a.horizontal(), b.horizontal(), p.horizontal());
    let ab = b - a;
    let len2 = ab.norm_squared();
    let u = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + ab * u)
}

/// One experiment session advancing on a fixed-timestep clock.
#[derive(Debug, Clone)]
pub struct Session {
    plan: SessionPlan,
    state: SessionState,
    /// Phase start times followed by the session end.
    boundaries: Vec<f64>,
    providers: ProviderSet,
    scene: SceneRuntime,
    schedule: Option<StimulusSchedule>,
    /// Rig pose when the current exposure began.
    exposure_origin: Pose,
    coins: Vec<Vec3>,
    targets: Vec<TargetState>,
    effects: EffectEngine,
    last_frame: EffectFrame,
    next_prompt: Option<(u32, f64)>,
    prompt_count: u32,
    ratings: Vec<i64>,
    script_cursor: usize,
    events: Vec<EventRecord>,
    pose_log: Vec<PoseSample>,
    effect_log: Vec<EffectFrame>,
    trace: Vec<PoseSample>,
    next_log: u64,
}

impl Session {
    /// Validates the plan, places collectibles and starts the first phase.
    pub fn start(plan: SessionPlan, scene: &SceneDescription) -> Result<Session> {
        plan.validate()?;
        let runtime = SceneRuntime::build(scene)?;

        let providers = match &plan.motion {
            Motion::Active { left, right } => configure_handler(left, right),
            Motion::PathFollow { speed } => {
                let entry: ProviderEntry = Provider::PathFollow {
                    path: MAIN_PATH.into(),
                    speed: *speed,
                }
                .into();
                configure_handler(&[entry], &[])
            }
            _ => configure_handler(&[], &[]),
        };
        for p in providers.set.providers() {
            if let Provider::PathFollow { path, .. } = p {
                if !runtime.context.paths.contains_key(path) {
                    return Err(RuntimeError::InvalidPlan(format!(
                        "scene has no path `{path}`"
                    )));
                }
            }
        }

        let schedule = match &plan.motion {
            Motion::Schedule(s) => Some(s.clone()),
            Motion::Sensitivity(cfg) => Some(build_sensitivity_schedule(cfg, plan.seed)?),
            _ => None,
        };

        let coins = if plan.coin_count > 0 {
            let table = runtime.path.as_ref().ok_or_else(|| {
                RuntimeError::InvalidPlan("collectibles need a scene path".into())
            })?;
            let jitter = scene.collectibles.as_ref().map_or(0.0, |c| c.jitter);
            place_collectibles(table, plan.coin_count as usize, plan.seed, jitter)?.positions
        } else {
            Vec::new()
        };

        let spawn = match (&plan.motion, &runtime.path) {
            (Motion::PathFollow { .. }, Some(table)) => path_start_pose(table)?,
            _ => scene.spawn,
        };

        let mut boundaries = Vec::with_capacity(plan.phases.len() + 1);
        let mut acc = 0.0;
        boundaries.push(acc);
        for p in &plan.phases {
            acc += p.duration;
            boundaries.push(acc);
        }

        let effects_cfg = plan
            .effects
            .clone()
            .unwrap_or_else(|| EffectsConfig::from_entities(&scene.entities));
        let effects = EffectEngine::new(effects_cfg, plan.native_fov);
        let first_frame = effects.idle_frame(0.0);

        let targets = plan
            .targets
            .iter()
            .map(|spec| TargetState {
                spec: spec.clone(),
                spawned: false,
                hit: false,
            })
            .collect();

        let rig = RigState::at(spawn);
        let mut session = Session {
            state: SessionState {
                tick: 0,
                clock: 0.0,
                phase_index: 0,
                phase_start: 0.0,
                rig,
                pending_fms: None,
                collected: BTreeSet::new(),
                finished: false,
                stopped: false,
            },
            boundaries,
            providers: providers.set,
            scene: runtime,
            schedule,
            exposure_origin: spawn,
            coins,
            targets,
            effects,
            last_frame: first_frame,
            next_prompt: None,
            prompt_count: 0,
            ratings: Vec::new(),
            script_cursor: 0,
            events: Vec::new(),
            pose_log: Vec::new(),
            effect_log: Vec::new(),
            trace: alloc::vec![PoseSample {
                t: 0.0,
                position: spawn.position,
                orientation: spawn.orientation,
            }],
            next_log: 0,
            plan,
        };

        let mut initial = Vec::new();
        for d in &providers.diagnostics {
            initial.push(
                EventRecord::custom(0.0, "provider_removed")
                    .with("side", d.side.as_str())
                    .with("index", d.index as i64)
                    .with("message", d.message.as_str()),
            );
        }
        session.begin_phase(0, &mut initial);
        session.spawn_targets(0.0, &mut initial);
        session.events.extend(initial);
        session.log_until(0.0, spawn, spawn);
        Ok(session)
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn pose_log(&self) -> &[PoseSample] {
        &self.pose_log
    }

    pub fn effect_log(&self) -> &[EffectFrame] {
        &self.effect_log
    }

    /// Latest effect parameters.
    pub fn effect_frame(&self) -> &EffectFrame {
        &self.last_frame
    }

    pub fn effects_config(&self) -> &EffectsConfig {
        &self.effects.config
    }

    pub fn providers(&self) -> &ProviderSet {
        &self.providers
    }

    /// Collectible positions, including ones already picked up.
    pub fn collectibles(&self) -> &[Vec3] {
        &self.coins
    }

    pub fn remaining_collectibles(&self) -> impl Iterator<Item = (usize, Vec3)> + '_ {
        self.coins
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| !self.state.collected.contains(i))
    }

    pub fn current_phase(&self) -> Option<Phase> {
        self.plan.phases.get(self.state.phase_index).copied()
    }

    pub fn end_time(&self) -> f64 {
        *self.boundaries.last().unwrap_or(&0.0)
    }

    pub fn is_finished(&self) -> bool {
        self.state.finished
    }

    pub fn fms_ratings(&self) -> &[i64] {
        &self.ratings
    }

    fn begin_phase(&mut self, index: usize, out: &mut Vec<EventRecord>) {
        let start = self.boundaries[index];
        let phase = self.plan.phases[index];
        self.state.phase_index = index;
        self.state.phase_start = start;
        out.push(
            EventRecord::new(start, EventKind::PhaseStart)
                .with("phase", phase.kind.as_str())
                .with("index", index as i64)
                .with("duration", phase.duration),
        );
        if phase.kind == PhaseKind::Exposure {
            self.exposure_origin = self.state.rig.pose();
            self.state.rig.modes.path_s = 0.0;
            let count = libm::floor(phase.duration / self.plan.fms.interval + EPS) as u32;
            self.next_prompt = (count > 0).then_some((0, start));
            self.fire_prompts(start, out);
        } else {
            self.next_prompt = None;
        }
    }

    /// Prompts sit at `exposure_start + k * interval` for
    /// `k = 0 .. floor(D / interval)`, so every prompt has a full interval
    /// to be answered before the exposure ends.
    fn fire_prompts(&mut self, until: f64, out: &mut Vec<EventRecord>) {
        let Some(phase) = self.current_phase() else {
            return;
        };
        let count = libm::floor(phase.duration / self.plan.fms.interval + EPS) as u32;
        while let Some((k, t)) = self.next_prompt {
            if t > until + EPS {
                break;
            }
            if let Some(old) = self.state.pending_fms.take() {
                out.push(EventRecord::custom(t, "fms_missed").with("prompt", i64::from(old.index)));
            }
            let index = self.prompt_count;
            self.prompt_count += 1;
            self.state.pending_fms = Some(PendingFms { index, t });
            out.push(EventRecord::new(t, EventKind::FmsPrompt).with("prompt", i64::from(index)));
            self.next_prompt = (k + 1 < count).then(|| {
                (
                    k + 1,
                    self.state.phase_start + f64::from(k + 1) * self.plan.fms.interval,
                )
            });
        }
    }

    fn spawn_targets(&mut self, until: f64, out: &mut Vec<EventRecord>) {
        for target in self.targets.iter_mut().filter(|t| !t.spawned) {
            if target.spec.spawn <= until + EPS {
                target.spawned = true;
                out.push(
                    EventRecord::custom(target.spec.spawn, "target_spawn")
                        .with("target", target.spec.id.as_str()),
                );
            }
        }
    }

    /// Appends pose and effect rows for every log instant up to `t1`,
    /// interpolating the pose within the tick that ended at `t1`.
    fn log_until(&mut self, t1: f64, from: Pose, to: Pose) {
        let t0 = t1 - self.plan.dt;
        let end = self.end_time();
        loop {
            let t = self.next_log as f64 / self.plan.log_rate;
            if t > t1 + EPS || t > end + EPS {
                break;
            }
            let alpha = if t1 > t0 {
                ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            self.pose_log.push(PoseSample {
                t,
                position: from.position.lerp(to.position, alpha),
                orientation: from.orientation.slerp(to.orientation, alpha),
            });
            self.effect_log.push(EffectFrame {
                t,
                ..self.last_frame
            });
            self.next_log += 1;
        }
    }

    fn motion_sample(&self) -> MotionSample {
        let n = self.trace.len();
        let dt = self.plan.dt;
        if n < 2 {
            return MotionSample::default();
        }
        let rate = |a: &PoseSample, b: &PoseSample| {
            (
                (b.position - a.position) / dt,
                (a.orientation.conjugate() * b.orientation).to_rotation_vector() / dt,
            )
        };
        let (v, w) = rate(&self.trace[n - 2], &self.trace[n - 1]);
        let (a, alpha) = if n >= 3 {
            let (v0, w0) = rate(&self.trace[n - 3], &self.trace[n - 2]);
            ((v - v0) / dt, (w - w0) / dt)
        } else {
            (Vec3::ZERO, Vec3::ZERO)
        };
        MotionSample::from_vectors(v, w, a, alpha)
    }

    /// Advances the session by one timestep.
    pub fn tick(&mut self, inputs: &ControllerInputs) -> Result<()> {
        if self.state.finished {
            return Err(RuntimeError::Finished);
        }
        let dt = self.plan.dt;
        let t0 = self.state.clock;
        let t1 = (self.state.tick + 1) as f64 * dt;
        let before = self.state.rig.pose();
        let mut tick_events = Vec::new();
        let mut teleported = false;

        let in_exposure = self
            .current_phase()
            .is_some_and(|p| p.kind == PhaseKind::Exposure);
        if in_exposure {
            let rel0 = t0 - self.state.phase_start;
            let rel1 = t1 - self.state.phase_start;
            match &self.plan.motion {
                Motion::Static => {}
                Motion::Active { .. } | Motion::PathFollow { .. } => {
                    let neutral = ControllerInputs::default();
                    let inputs = if self.plan.motion.is_active() {
                        inputs
                    } else {
                        &neutral
                    };
                    let out = step(
                        &self.state.rig,
                        &self.providers,
                        inputs,
                        dt,
                        &self.scene.context,
                    )?;
                    self.state.rig = out.rig;
                    for ev in out.events {
                        tick_events.push(match ev {
                            LocomotionEvent::Snap { side, degrees } => {
                                EventRecord::new(t1, EventKind::Snap)
                                    .with("side", side.as_str())
                                    .with("degrees", degrees)
                            }
                            LocomotionEvent::Teleport { side, from, to } => {
                                teleported = true;
                                EventRecord::new(t1, EventKind::Teleport)
                                    .with("side", side.as_str())
                                    .with("from", from)
                                    .with("to", to)
                            }
                        });
                    }
                }
                Motion::Rotator { axis, rate } => {
                    let turn = Quat::from_axis_angle(axis.vector(), rate * rel1);
                    self.state.rig.heading = (self.exposure_origin.orientation * turn).normalized();
                }
                Motion::Schedule(_) | Motion::Sensitivity(_) => {
                    let schedule = self
                        .schedule
                        .as_ref()
                        .expect("passive schedule built at start");
                    let rel = rel1.min(schedule.end());
                    let pose = schedule_pose(schedule, self.exposure_origin, rel)?;
                    self.state.rig.position = pose.position;
                    self.state.rig.heading = pose.orientation;
                    for seg in &schedule.segments {
                        let shown = seg.kind == SegmentKind::Indicator
                            && seg.start >= rel0 - EPS
                            && seg.start < rel1 - EPS;
                        if shown {
                            let mut ev = EventRecord::new(
                                self.state.phase_start + seg.start,
                                EventKind::IndicatorShown,
                            );
                            if let Some(axis) = seg.axis {
                                ev = ev.with("axis", axis.as_str());
                            }
                            tick_events.push(ev);
                        }
                    }
                }
            }
        }
        let after = self.state.rig.pose();

        if !self.coins.is_empty() {
            let radius = self.plan.pickup_radius;
            for (i, &coin) in self.coins.iter().enumerate() {
                if self.state.collected.contains(&i) {
                    continue;
                }
                let d = if teleported {
                    after.position.horizontal().distance(coin.horizontal())
                } else {
                    horizontal_segment_distance(before.position, after.position, coin)
                };
                if d <= radius {
                    self.state.collected.insert(i);
                    tick_events.push(
                        EventRecord::new(t1, EventKind::CoinCollected)
                            .with("coin", i as i64)
                            .with("position", coin),
                    );
                }
            }
        }

        self.state.tick += 1;
        self.state.clock = t1;
        self.trace.push(PoseSample {
            t: t1,
            position: after.position,
            orientation: after.orientation,
        });
        let motion = self.motion_sample();
        self.last_frame = self.effects.step(t1, motion, dt);
        self.log_until(t1, before, after);

        // Scheduled occurrences inside (t0, t1], in time order.
        loop {
            self.fire_prompts(t1, &mut tick_events);
            let next = self.state.phase_index + 1;
            let boundary = self.boundaries[next];
            if boundary > t1 + EPS {
                break;
            }
            if let Some(p) = self.state.pending_fms.take() {
                tick_events.push(
                    EventRecord::custom(boundary, "fms_missed").with("prompt", i64::from(p.index)),
                );
            }
            if next < self.plan.phases.len() {
                self.begin_phase(next, &mut tick_events);
            } else {
                self.state.finished = true;
                self.next_prompt = None;
                tick_events.push(EventRecord::custom(boundary, "session_end"));
                break;
            }
        }
        self.spawn_targets(t1, &mut tick_events);

        tick_events.sort_by(|a, b| a.t.total_cmp(&b.t));
        self.events.extend(tick_events);
        Ok(())
    }

    /// Records a rating for the pending prompt.
    pub fn submit_fms(&mut self, rating: i64, source: &str) -> Result<()> {
        let pending = self.state.pending_fms.ok_or(RuntimeError::NoPendingFms)?;
        let (min, max) = (self.plan.fms.scale_min, self.plan.fms.scale_max);
        if rating < min || rating > max {
            return Err(RuntimeError::FmsOutOfRange { rating, min, max });
        }
        let t = self.state.clock;
        self.state.pending_fms = None;
        self.ratings.push(rating);
        self.events.push(
            EventRecord::new(t, EventKind::FmsResponse)
                .with("prompt", i64::from(pending.index))
                .with("rating", rating)
                .with("latency", t - pending.t)
                .with("source", source),
        );
        Ok(())
    }

    pub fn submit_hit(&mut self, target: &str) -> Result<()> {
        let t = self.state.clock;
        let state = self
            .targets
            .iter_mut()
            .find(|s| s.spec.id == target)
            .ok_or_else(|| RuntimeError::UnknownTarget(target.into()))?;
        if !state.spawned {
            return Err(RuntimeError::TargetNotSpawned(target.into()));
        }
        if state.hit {
            return Err(RuntimeError::TargetAlreadyHit(target.into()));
        }
        state.hit = true;
        self.events
            .push(EventRecord::new(t, EventKind::TargetHit).with("target", target));
        Ok(())
    }

    /// Ends the session early.
    pub fn stop(&mut self) {
        if self.state.finished {
            return;
        }
        let t = self.state.clock;
        if let Some(p) = self.state.pending_fms.take() {
            self.events
                .push(EventRecord::custom(t, "fms_missed").with("prompt", i64::from(p.index)));
        }
        self.state.finished = true;
        self.state.stopped = true;
        self.next_prompt = None;
        self.events.push(EventRecord::custom(t, "session_stopped"));
    }

    /// Answers due prompts from the plan's FMS script, if any.
    pub fn apply_fms_script(&mut self) -> Result<()> {
        let Some(script) = &self.plan.fms_script else {
            return Ok(());
        };
        if let Some(p) = self.state.pending_fms {
            if self.state.clock + EPS >= p.t + script.delay {
                let i = self.script_cursor.min(script.ratings.len() - 1);
                let rating = script.ratings[i];
                self.script_cursor += 1;
                self.submit_fms(rating, "script")?;
            }
        }
        Ok(())
    }

    /// Computes the summary and hands out the logs.
    pub fn finalize(&self) -> RunArtifacts {
        RunArtifacts {
            summary: summary::summarize(self),
            pose_log: self.pose_log.clone(),
            event_log: self.events.clone(),
            effect_log: self.effect_log.clone(),
        }
    }
}

/// Runs a plan to completion, feeding inputs from `trace` (neutral input
/// when absent) and answering prompts from the plan's FMS script.
pub fn run_headless(
    plan: &SessionPlan,
    scene: &SceneDescription,
    trace: Option<&InputTrace>,
) -> Result<RunArtifacts> {
    let mut session = Session::start(plan.clone(), scene)?;
    session.apply_fms_script()?;
    while !session.is_finished() {
        let inputs = trace
            .map(|tr| tr.inputs_at(session.state().clock))
            .unwrap_or_default();
        session.tick(&inputs)?;
        if !session.is_finished() {
            session.apply_fms_script()?;
        }
    }
    Ok(session.finalize())
}
