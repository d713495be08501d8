//! Rig kinematics for the six locomotion providers and the handler that
//! composes them per controller.
//!
//! Axis conventions follow [`crate::math`]: `+y` up, `+z` forward, `-x`
//! right. Positive joystick x is a turn to the right, i.e. a negative
//! rotation about `+y`.

mod trace;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use trace::{InputTrace, TraceRow};

use crate::environment::{terrain_height, EnvError, Heightmap, PathTable};
use crate::math::{Pose, Quat, Vec3};

/// Default fixed timestep (typical HMD refresh).
pub const DEFAULT_DT: f64 = 1.0 / 90.0;
/// Default joystick threshold for edge-triggered actions.
pub const DEFAULT_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocomotionError {
    #[error("timestep must be positive and finite, got {0}")]
    InvalidTimestep(f64),
    #[error("non-finite controller input")]
    NonFiniteInput,
    #[error("path `{0}` is not loaded")]
    UnknownPath(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Controller input channel a provider can bind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    StickX,
    StickY,
    Grip,
    Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerInput {
    pub joystick: [f64; 2],
    #[serde(default)]
    pub grip: bool,
    #[serde(default)]
    pub trigger: bool,
    #[serde(default)]
    pub validate: bool,
    /// Controller pose in rig (tracking) space.
    #[serde(default)]
    pub pose: Pose,
}

impl ControllerInput {
    pub fn stick(x: f64, y: f64) -> Self {
        ControllerInput {
            joystick: [x, y],
            ..Default::default()
        }
    }

    fn is_finite(&self) -> bool {
        self.joystick.iter().all(|c| c.is_finite())
            && self.pose.position.is_finite()
            && self.pose.orientation.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerInputs {
    pub left: ControllerInput,
    pub right: ControllerInput,
}

impl ControllerInputs {
    pub fn get(&self, side: Side) -> &ControllerInput {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn get_mut(&mut self, side: Side) -> &mut ControllerInput {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }
}

fn default_speed() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_max_distance() -> f64 {
    20.0
}
fn default_one() -> f64 {
    1.0
}
fn default_turn_rate() -> f64 {
    90.0
}
fn default_snap() -> f64 {
    30.0
}
fn default_follow_speed() -> f64 {
    5.0
}

/// Provider kind with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Provider {
    ContinuousMove {
        #[serde(default = "default_speed")]
        speed: f64,
        /// Move relative to the rig heading (true) or the controller (false).
        #[serde(default = "default_true")]
        head_relative: bool,
    },
    Teleport {
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_max_distance")]
        max_distance: f64,
    },
    GrabMove {
        #[serde(default = "default_one")]
        gain: f64,
    },
    ContinuousTurn {
        #[serde(default = "default_turn_rate")]
        rate: f64,
    },
    SnapTurn {
        #[serde(default = "default_snap")]
        angle: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    PathFollow {
        path: String,
        #[serde(default = "default_follow_speed")]
        speed: f64,
    },
}

impl Provider {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Provider::ContinuousMove { .. } => "ContinuousMove",
            Provider::Teleport { .. } => "Teleport",
            Provider::GrabMove { .. } => "GrabMove",
            Provider::ContinuousTurn { .. } => "ContinuousTurn",
            Provider::SnapTurn { .. } => "SnapTurn",
            Provider::PathFollow { .. } => "PathFollow",
        }
    }

    /// Channels the provider can use.
    pub fn supported_actions(&self) -> &'static [Action] {
        match self {
            Provider::ContinuousMove { .. } => &[Action::StickX, Action::StickY],
            Provider::Teleport { .. } => &[Action::StickY],
            Provider::GrabMove { .. } => &[Action::Grip],
            Provider::ContinuousTurn { .. } | Provider::SnapTurn { .. } => &[Action::StickX],
            Provider::PathFollow { .. } => &[],
        }
    }

    /// Moves the rig through space (as opposed to only turning it).
    pub fn is_translational(&self) -> bool {
        !matches!(
            self,
            Provider::ContinuousTurn { .. } | Provider::SnapTurn { .. }
        )
    }

    /// Label used for the navigation-type row of the study report.
    /// Provider described by a registry attachment of one of the provider
    /// types; missing fields take the registry defaults.
    pub fn from_values(
        type_id: &str,
        values: &BTreeMap<String, crate::registry::Value>,
    ) -> Option<Provider> {
        use crate::registry::types;
        let real = |k: &str, d: f64| values.get(k).and_then(|v| v.as_real()).unwrap_or(d);
        Some(match type_id {
            types::CONTINUOUS_MOVE => Provider::ContinuousMove {
                speed: real("speed", default_speed()),
                head_relative: values
                    .get("head_relative")
                    .and_then(|v| v.as_bool())
                    .unwrap_or(true),
            },
            types::TELEPORT => Provider::Teleport {
                threshold: real("threshold", DEFAULT_THRESHOLD),
                max_distance: real("max_distance", default_max_distance()),
            },
            types::GRAB_MOVE => Provider::GrabMove {
                gain: real("gain", default_one()),
            },
            types::CONTINUOUS_TURN => Provider::ContinuousTurn {
                rate: real("rate", default_turn_rate()),
            },
            types::SNAP_TURN => Provider::SnapTurn {
                angle: real("angle", default_snap()),
                threshold: real("threshold", DEFAULT_THRESHOLD),
            },
            types::PATH_FOLLOW => Provider::PathFollow {
                path: values
                    .get("path")
                    .and_then(|v| v.as_text())
                    .unwrap_or("main")
                    .into(),
                speed: real("speed", default_follow_speed()),
            },
            _ => return None,
        })
    }

    pub fn navigation_label(&self) -> &'static str {
        match self {
            Provider::ContinuousMove { .. } => "Standard control",
            Provider::Teleport { .. } => "Teleportation",
            Provider::GrabMove { .. } => "Grab movement",
            Provider::ContinuousTurn { .. } => "Continuous rotation",
            Provider::SnapTurn { .. } => "Snap turn",
            Provider::PathFollow { .. } => "Path following",
        }
    }

    fn check(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        let threshold = |v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(format!("threshold must lie in (0, 1], got {v}"))
            }
        };
        match self {
            Provider::ContinuousMove { speed, .. } => positive("speed", *speed),
            Provider::Teleport {
                threshold: t,
                max_distance,
            } => {
                threshold(*t)?;
                positive("max_distance", *max_distance)
            }
            Provider::GrabMove { gain } => positive("gain", *gain),
            Provider::ContinuousTurn { rate } => positive("rate", *rate),
            Provider::SnapTurn {
                angle,
                threshold: t,
            } => {
                threshold(*t)?;
                positive("angle", *angle)
            }
            Provider::PathFollow { path, speed } => {
                if path.is_empty() {
                    return Err("PathFollow requires a path reference".into());
                }
                positive("speed", *speed)
            }
        }
    }
}

/// A provider plus the actions it declares for each controller. Omitted
/// action lists default to everything the provider supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderSpec {
    #[serde(flatten)]
    pub provider: Provider,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_actions: Option<Vec<Action>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_actions: Option<Vec<Action>>,
}

impl ProviderSpec {
    pub fn new(provider: Provider) -> Self {
        ProviderSpec {
            provider,
            left_actions: None,
            right_actions: None,
        }
    }

    pub fn actions_for(&self, side: Side) -> Vec<Action> {
        let declared = match side {
            Side::Left => &self.left_actions,
            Side::Right => &self.right_actions,
        };
        match declared {
            Some(a) => a.clone(),
            None => self.provider.supported_actions().to_vec(),
        }
    }
}

/// Something handed to the handler. Only [`ProviderEntry::Custom`] entries
/// follow the custom-provider contract; anything else is filtered out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProviderEntry {
    Custom(ProviderSpec),
    Foreign { kind: String },
}

impl From<Provider> for ProviderEntry {
    fn from(p: Provider) -> Self {
        ProviderEntry::Custom(ProviderSpec::new(p))
    }
}

/// A validated provider with the actions enabled for its controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveProvider {
    pub provider: Provider,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProviderSet {
    pub left: Vec<ActiveProvider>,
    pub right: Vec<ActiveProvider>,
}

impl ProviderSet {
    pub fn side(&self, side: Side) -> &[ActiveProvider] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    pub fn providers(&self) -> impl Iterator<Item = &Provider> {
        self.left.iter().chain(&self.right).map(|a| &a.provider)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub side: Side,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configured {
    pub set: ProviderSet,
    pub diagnostics: Vec<Diagnostic>,
}

/// Rebuilds the handler from scratch: previous providers are discarded,
/// entries that do not follow the custom-provider contract are dropped
/// with a diagnostic, and each surviving provider gets its declared
/// actions for the controller whose list it came from.
pub fn configure_handler(left: &[ProviderEntry], right: &[ProviderEntry]) -> Configured {
    let mut diagnostics = Vec::new();
    let mut build = |side: Side, entries: &[ProviderEntry]| -> Vec<ActiveProvider> {
        let mut out = Vec::new();
        for (index, entry) in entries.iter().enumerate() {
            let spec = match entry {
                ProviderEntry::Custom(spec) => spec,
                ProviderEntry::Foreign { kind } => {
                    diagnostics.push(Diagnostic {
                        side,
                        index,
                        message: format!("`{kind}` is not a custom locomotion provider; removed"),
                    });
                    continue;
                }
            };
            if let Err(message) = spec.provider.check() {
                diagnostics.push(Diagnostic {
                    side,
                    index,
                    message,
                });
                continue;
            }
            let actions = spec.actions_for(side);
            let supported = spec.provider.supported_actions();
            if let Some(bad) = actions.iter().find(|a| !supported.contains(a)) {
                diagnostics.push(Diagnostic {
                    side,
                    index,
                    message: format!(
                        "{} cannot bind {:?}; removed",
                        spec.provider.kind_name(),
                        bad
                    ),
                });
                continue;
            }
            out.push(ActiveProvider {
                provider: spec.provider.clone(),
                actions,
            });
        }
        out
    };
    let left = build(Side::Left, left);
    let right = build(Side::Right, right);
    Configured {
        set: ProviderSet { left, right },
        diagnostics,
    }
}

/// Per-controller provider memory carried between steps.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SideModes {
    /// Snap fired and waiting for the stick to return below threshold.
    pub snap_latched: bool,
    /// Teleport ray being aimed (world-space pose of the ray origin).
    pub teleport_aim: Option<Pose>,
    /// Controller position where the current grab started or last moved.
    pub grab_anchor: Option<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderModes {
    pub left: SideModes,
    pub right: SideModes,
    /// Arc length travelled by PathFollow.
    pub path_s: f64,
}

impl ProviderModes {
    fn side_mut(&mut self, side: Side) -> &mut SideModes {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigState {
    pub position: Vec3,
    pub heading: Quat,
    #[serde(default)]
    pub modes: ProviderModes,
}

impl Default for RigState {
    fn default() -> Self {
        RigState::at(Pose::IDENTITY)
    }
}

impl RigState {
    pub fn at(pose: Pose) -> Self {
        RigState {
            position: pose.position,
            heading: pose.orientation.normalized(),
            modes: ProviderModes::default(),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.heading)
    }

    /// Heading yaw in degrees.
    pub fn yaw(&self) -> f64 {
        self.heading.yaw()
    }
}

/// Yaws the rig by `degrees` about `+y` (positive = toward `+x`, i.e. left).
pub fn snap_turn(rig: &RigState, degrees: f64) -> RigState {
    let mut out = *rig;
    out.heading = (Quat::from_yaw(degrees) * rig.heading).normalized();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Surface {
    /// Infinite plane through `point` with the given normal.
    Plane {
        point: Vec3,
        normal: Vec3,
    },
    Terrain(Heightmap),
}

impl Surface {
    pub fn floor(y: f64) -> Self {
        Surface::Plane {
            point: Vec3::new(0.0, y, 0.0),
            normal: Vec3::Y,
        }
    }
}

/// Paths and teleport surfaces the providers act upon.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocomotionContext {
    pub paths: BTreeMap<String, PathTable>,
    pub surfaces: Vec<Surface>,
}

fn ray_plane(origin: Vec3, dir: Vec3, point: Vec3, normal: Vec3) -> Option<f64> {
    let denom = dir.dot(normal);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (point - origin).dot(normal) / denom;
    (t > 0.0).then_some(t)
}

fn ray_terrain(origin: Vec3, dir: Vec3, grid: &Heightmap, max_distance: f64) -> Option<f64> {
    let gap = |t: f64| {
        let p = origin + dir * t;
        terrain_height(grid, p.x, p.z).ok().map(|h| p.y - h)
    };
    let step = grid.cell_size * 0.25;
    let n = libm::ceil(max_distance / step) as usize;
    let mut prev: Option<(f64, f64)> = gap(0.0).map(|g| (0.0, g));
    for k in 1..=n {
        let t = (k as f64 * step).min(max_distance);
        let Some(g) = gap(t) else {
            prev = None;
            continue;
        };
        if let Some((t0, g0)) = prev {
            if g0 > 0.0 && g <= 0.0 {
                let (mut lo, mut hi) = (t0, t);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    match gap(mid) {
                        Some(gm) if gm > 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                    if hi - lo < 1e-13 {
                        break;
                    }
                }
                return Some(hi);
            }
        }
        prev = Some((t, g));
    }
    None
}

/// First point where a ray meets one of `surfaces` within `max_distance`.
pub fn teleport_resolve(
    origin: Vec3,
    direction: Vec3,
    surfaces: &[Surface],
    max_distance: f64,
) -> Option<Vec3> {
    let dir = direction.normalized()?;
    let best = surfaces
        .iter()
        .filter_map(|s| match s {
            Surface::Plane { point, normal } => ray_plane(origin, dir, *point, *normal),
            Surface::Terrain(grid) => ray_terrain(origin, dir, grid, max_distance),
        })
        .filter(|t| *t <= max_distance)
        .min_by(|a, b| a.total_cmp(b))?;
    Some(origin + dir * best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LocomotionEvent {
    Snap { side: Side, degrees: f64 },
    Teleport { side: Side, from: Vec3, to: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub rig: RigState,
    pub events: Vec<LocomotionEvent>,
}

/// Channel values left after earlier providers on the same side consumed theirs.
struct Channels {
    consumed: Vec<Action>,
}

impl Channels {
    fn claim(&mut self, wanted: &[Action]) -> Vec<Action> {
        let got: Vec<Action> = wanted
            .iter()
            .copied()
            .filter(|a| !self.consumed.contains(a))
            .collect();
        self.consumed.extend(got.iter().copied());
        got
    }
}

/// Advances the rig by one fixed timestep.
pub fn step(
    rig: &RigState,
    set: &ProviderSet,
    inputs: &ControllerInputs,
    dt: f64,
    ctx: &LocomotionContext,
) -> Result<Step, LocomotionError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(LocomotionError::InvalidTimestep(dt));
    }
    if !inputs.left.is_finite() || !inputs.right.is_finite() {
        return Err(LocomotionError::NonFiniteInput);
    }
    let mut rig = *rig;
    let mut events = Vec::new();
    for side in [Side::Left, Side::Right] {
        let input = inputs.get(side);
        let jx = input.joystick[0].clamp(-1.0, 1.0);
        let jy = input.joystick[1].clamp(-1.0, 1.0);
        let mut channels = Channels {
            consumed: Vec::new(),
        };
        for active in set.side(side) {
            let got = channels.claim(&active.actions);
            let has = |a: Action| got.contains(&a);
            let sx = if has(Action::StickX) { jx } else { 0.0 };
            let sy = if has(Action::StickY) { jy } else { 0.0 };
            match &active.provider {
                Provider::ContinuousMove {
                    speed,
                    head_relative,
                } => {
                    let (mut x, mut y) = (sx, sy);
                    let mag = libm::sqrt(x * x + y * y);
                    if mag > 1.0 {
                        x /= mag;
                        y /= mag;
                    }
                    let frame = if *head_relative {
                        rig.heading
                    } else {
                        rig.heading * input.pose.orientation
                    };
                    let forward = frame.rotate(Vec3::Z).horizontal().normalized();
                    if let Some(forward) = forward {
                        let right = forward.cross(Vec3::Y);
                        rig.position += (forward * y + right * x) * (speed * dt);
                    }
                }
                Provider::ContinuousTurn { rate } => {
                    if sx != 0.0 {
                        rig = snap_turn(&rig, -sx * rate * dt);
                    }
                }
                Provider::SnapTurn { angle, threshold } => {
                    let modes = rig.modes.side_mut(side);
                    if sx.abs() >= *threshold {
                        if !modes.snap_latched {
                            modes.snap_latched = true;
                            let degrees = -sx.signum() * angle;
                            rig = snap_turn(&rig, degrees);
                            events.push(LocomotionEvent::Snap { side, degrees });
                        }
                    } else {
                        modes.snap_latched = false;
                    }
                }
                Provider::Teleport {
                    threshold,
                    max_distance,
                } => {
                    let world = rig.pose().compose(input.pose);
                    if sy >= *threshold {
                        rig.modes.side_mut(side).teleport_aim = Some(world);
                    } else if let Some(aim) = rig.modes.side_mut(side).teleport_aim.take() {
                        let dir = aim.orientation.rotate(Vec3::Z);
                        if let Some(to) =
                            teleport_resolve(aim.position, dir, &ctx.surfaces, *max_distance)
                        {
                            events.push(LocomotionEvent::Teleport {
                                side,
                                from: rig.position,
                                to,
                            });
                            rig.position = to;
                        }
                    }
                }
                Provider::GrabMove { gain } => {
                    let held = has(Action::Grip) && input.grip;
                    let heading = rig.heading;
                    let modes = rig.modes.side_mut(side);
                    if held {
                        let now = input.pose.position;
                        let delta = modes.grab_anchor.map(|a| now - a);
                        modes.grab_anchor = Some(now);
                        if let Some(d) = delta {
                            rig.position -= heading.rotate(d) * *gain;
                        }
                    } else {
                        modes.grab_anchor = None;
                    }
                }
                Provider::PathFollow { path, speed } => {
                    let table = ctx
                        .paths
                        .get(path)
                        .ok_or_else(|| LocomotionError::UnknownPath(path.clone()))?;
                    let mut s = rig.modes.path_s + speed * dt;
                    if !table.closed {
                        s = s.min(table.total_length);
                    } else {
                        s = table.normalize_s(s)?;
                    }
                    rig.modes.path_s = s;
                    let (p, tangent) = table.pose_at(s)?;
                    rig.position = p;
                    let yaw = libm::atan2(tangent.x, tangent.z).to_degrees();
                    if tangent.horizontal().norm() > 1e-9 {
                        rig.heading = Quat::from_yaw(yaw);
                    }
                }
            }
        }
    }
    rig.heading = rig.heading.normalized();
    Ok(Step { rig, events })
}
