use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BreakdownThresholds, RuntimeError};
use crate::environment::SceneDescription;
use crate::locomotion::{Provider, ProviderEntry, DEFAULT_DT};
use crate::registry::{types, Attachment, Value};
use crate::susceptibility::{Axis, SensitivityConfig, StimulusSchedule, TranslationCfg};
use crate::vision::EffectsConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    Baseline,
    Exposure,
    Break,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Baseline => "Baseline",
            PhaseKind::Exposure => "Exposure",
            PhaseKind::Break => "Break",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmsCfg {
    /// Seconds between prompts during exposure.
    pub interval: f64,
    pub scale_min: i64,
    pub scale_max: i64,
}

impl Default for FmsCfg {
    fn default() -> Self {
        FmsCfg {
            interval: 60.0,
            scale_min: 0,
            scale_max: 20,
        }
    }
}

/// How the viewpoint moves during exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Motion {
    /// No locomotion at all.
    Static,
    /// Participant-controlled through the configured providers.
    Active {
        #[serde(default)]
        left: Vec<ProviderEntry>,
        #[serde(default)]
        right: Vec<ProviderEntry>,
    },
    /// Carried along the scene path at constant speed.
    PathFollow { speed: f64 },
    /// Constant-rate camera rotation about one head axis.
    Rotator { axis: Axis, rate: f64 },
    /// Explicit stimulus schedule.
    Schedule(StimulusSchedule),
    /// Passive battery generated from a configuration and the plan seed.
    Sensitivity(SensitivityConfig),
}

impl Motion {
    pub fn is_active(&self) -> bool {
        matches!(self, Motion::Active { .. })
    }
}

/// Pre-recorded FMS answers used by headless runs: each prompt is answered
/// `delay` seconds later with the next rating (the last one repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmsScript {
    pub delay: f64,
    pub ratings: Vec<i64>,
}

/// Target that appears at `spawn` seconds and can then be hit once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub id: String,
    pub spawn: f64,
}

fn default_pickup_radius() -> f64 {
    0.5
}
fn default_log_rate() -> f64 {
    50.0
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_native_fov() -> f64 {
    110.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    #[serde(default)]
    pub name: String,
    pub phases: Vec<Phase>,
    /// Scene reference, resolved by whoever loads the plan.
    #[serde(default)]
    pub scene: String,
    pub motion: Motion,
    #[serde(default)]
    pub coin_count: u32,
    #[serde(default = "default_pickup_radius")]
    pub pickup_radius: f64,
    #[serde(default)]
    pub fms: FmsCfg,
    #[serde(default = "default_log_rate")]
    pub log_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Reduction effects; when absent they come from the scene entities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<EffectsConfig>,
    #[serde(default = "default_native_fov")]
    pub native_fov: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fms_script: Option<FmsScript>,
    #[serde(default)]
    pub breakdown: BreakdownThresholds,
}

impl SessionPlan {
    pub fn new(phases: Vec<Phase>, motion: Motion) -> Self {
        SessionPlan {
            name: String::new(),
            phases,
            scene: String::new(),
            motion,
            coin_count: 0,
            pickup_radius: default_pickup_radius(),
            fms: FmsCfg::default(),
            log_rate: default_log_rate(),
            seed: 0,
            dt: DEFAULT_DT,
            effects: None,
            native_fov: default_native_fov(),
            targets: Vec::new(),
            fms_script: None,
            breakdown: BreakdownThresholds::default(),
        }
    }

    /// Plan configured by the scene's enabled features: phases, FMS and
    /// coins from the game handler, the log rate from the data saver and
    /// the motion from the rig providers, camera rotator or sensitivity
    /// test, in that order of precedence.
    pub fn from_scene(scene: &SceneDescription) -> Self {
        let enabled: Vec<&Attachment> = scene
            .entities
            .iter()
            .flat_map(|e| e.attachments.iter())
            .filter(|a| a.enabled)
            .collect();
        let find = |ty: &str| enabled.iter().copied().find(|a| a.type_id == ty);
        let real = |a: Option<&Attachment>, k: &str, d: f64| {
            a.and_then(|a| a.values.get(k))
                .and_then(Value::as_real)
                .unwrap_or(d)
        };
        let int = |a: Option<&Attachment>, k: &str, d: i64| {
            a.and_then(|a| a.values.get(k))
                .and_then(Value::as_int)
                .unwrap_or(d)
        };
        let flag = |a: Option<&Attachment>, k: &str, d: bool| {
            a.and_then(|a| a.values.get(k))
                .and_then(Value::as_bool)
                .unwrap_or(d)
        };

        let game = find(types::GAME_HANDLER);
        let mut phases = Vec::new();
        let baseline = real(game, "baseline_duration", 0.0);
        if baseline > 0.0 {
            phases.push(Phase {
                kind: PhaseKind::Baseline,
                duration: baseline,
            });
        }
        phases.push(Phase {
            kind: PhaseKind::Exposure,
            duration: real(game, "exposure_duration", 1200.0),
        });

        let (mut left, mut right) = (Vec::new(), Vec::new());
        for a in &enabled {
            if let Some(p) = Provider::from_values(&a.type_id, &a.values) {
                let turn = matches!(
                    p,
                    Provider::ContinuousTurn { .. } | Provider::SnapTurn { .. }
                );
                if turn { &mut right } else { &mut left }.push(ProviderEntry::from(p));
            }
        }
        let path_only = left.len() == 1
            && right.is_empty()
            && matches!(&left[0], ProviderEntry::Custom(spec) if matches!(&spec.provider, Provider::PathFollow { path, .. } if path == super::MAIN_PATH));
        let rotator = find(types::CAMERA_ROTATOR);
        let sensitivity = find(types::SENSITIVITY_TEST);
        let motion = if path_only {
            let ProviderEntry::Custom(spec) = &left[0] else {
                unreachable!()
            };
            let Provider::PathFollow { speed, .. } = spec.provider else {
                unreachable!()
            };
            Motion::PathFollow { speed }
        } else if !left.is_empty() || !right.is_empty() {
            Motion::Active { left, right }
        } else if let Some(r) = rotator {
            let axis = match r.values.get("axis").and_then(Value::as_text) {
                Some("pitch") => Axis::Pitch,
                Some("roll") => Axis::Roll,
                _ => Axis::Yaw,
            };
            Motion::Rotator {
                axis,
                rate: real(Some(r), "rate", 36.0),
            }
        } else if sensitivity.is_some() {
            let d = SensitivityConfig::default();
            Motion::Sensitivity(SensitivityConfig {
                reps_per_axis: int(sensitivity, "reps_per_axis", 1).max(0) as u32,
                indicator_duration: real(sensitivity, "indicator_duration", d.indicator_duration),
                turn_duration: real(sensitivity, "turn_duration", d.turn_duration),
                pause_after_turn: real(sensitivity, "pause_after_turn", d.pause_after_turn),
                pause_between_triples: real(
                    sensitivity,
                    "pause_between_triples",
                    d.pause_between_triples,
                ),
                alternate_direction: flag(
                    sensitivity,
                    "alternate_direction",
                    d.alternate_direction,
                ),
                shuffle_orders: flag(sensitivity, "shuffle_orders", d.shuffle_orders),
                include_translation: flag(
                    sensitivity,
                    "include_translation",
                    d.include_translation,
                ),
                translation: TranslationCfg {
                    distance: real(sensitivity, "translation_distance", d.translation.distance),
                    duration: real(sensitivity, "translation_duration", d.translation.duration),
                },
                orders: d.orders,
            })
        } else {
            Motion::Static
        };

        let mut plan = SessionPlan::new(phases, motion);
        plan.name = scene.name.clone();
        plan.scene = scene.name.clone();
        if scene.path.is_some() {
            plan.coin_count = int(game, "coin_count", 0).max(0) as u32;
        }
        plan.pickup_radius = real(game, "pickup_radius", plan.pickup_radius);
        plan.fms.interval = real(game, "fms_interval", plan.fms.interval);
        plan.fms.scale_min = int(game, "fms_min", plan.fms.scale_min);
        plan.fms.scale_max = int(game, "fms_max", plan.fms.scale_max);
        plan.log_rate = real(find(types::DATA_SAVER), "log_rate", plan.log_rate);
        plan
    }

    pub fn total_duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.phases.is_empty() {
            return Err(RuntimeError::InvalidPlan(
                "at least one phase is required".into(),
            ));
        }
        if let Some(i) = self.phases.iter().position(|p| !positive(p.duration)) {
            return Err(RuntimeError::InvalidPlan(alloc::format!(
                "phase {i} duration must be positive"
            )));
        }
        if !positive(self.fms.interval) {
            return Err(RuntimeError::InvalidPlan(
                "fms.interval must be positive".into(),
            ));
        }
        if self.fms.scale_min > self.fms.scale_max {
            return Err(RuntimeError::InvalidPlan(
                "fms.scale_min exceeds fms.scale_max".into(),
            ));
        }
        if !positive(self.log_rate) {
            return Err(RuntimeError::InvalidPlan(
                "log_rate must be positive".into(),
            ));
        }
        if !positive(self.dt) {
            return Err(RuntimeError::InvalidPlan("dt must be positive".into()));
        }
        if !(self.pickup_radius >= 0.0 && self.pickup_radius.is_finite()) {
            return Err(RuntimeError::InvalidPlan(
                "pickup_radius must be non-negative".into(),
            ));
        }
        match &self.motion {
            Motion::PathFollow { speed } if !positive(*speed) => {
                return Err(RuntimeError::InvalidPlan(
                    "path speed must be positive".into(),
                ));
            }
            Motion::Rotator { rate, .. } if !rate.is_finite() => {
                return Err(RuntimeError::InvalidPlan(
                    "rotator rate must be finite".into(),
                ));
            }
            _ => {}
        }
        if let Some(script) = &self.fms_script {
            if script.ratings.is_empty() || !(script.delay >= 0.0 && script.delay.is_finite()) {
                return Err(RuntimeError::InvalidPlan(
                    "fms_script needs ratings and a non-negative delay".into(),
                ));
            }
        }
        Ok(())
    }
}
