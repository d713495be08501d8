use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    color_weights, dof_effect, fov_restriction_with_rotation, snapper_step, ColorCfg, ColorDeltas,
    DofCfg, FovRestrictorCfg, PixelizeCfg, RestFrameCfg, RestFrameModel, SnapperCfg, SnapperState,
};
use crate::math::{Pose, Quat, Vec3};
use crate::registry::{types, PresetDoc, SceneEntity, Value};

/// Which reduction effects are active and how they are tuned.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov: Option<FovRestrictorCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapper: Option<SnapperCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<ColorCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dof: Option<DofCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rest_frame: Option<RestFrameCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixelize: Option<PixelizeCfg>,
}

/// A reduction technique as it appears in a study report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechniqueInfo {
    pub name: String,
    pub apply_condition: String,
    pub details: String,
}

fn real(values: &BTreeMap<String, Value>, key: &str, default: f64) -> f64 {
    values.get(key).and_then(Value::as_real).unwrap_or(default)
}

fn flag(values: &BTreeMap<String, Value>, key: &str, default: bool) -> bool {
    values.get(key).and_then(Value::as_bool).unwrap_or(default)
}

impl EffectsConfig {
    pub fn is_empty(&self) -> bool {
        *self == EffectsConfig::default()
    }

    /// Enables the effect behind `type_id` with the given field values.
    /// Missing fields take their defaults; non-vision types are ignored.
    /// Returns whether the type was recognized.
    pub fn set_from_values(&mut self, type_id: &str, values: &BTreeMap<String, Value>) -> bool {
        match type_id {
            types::REDUCED_FOV => {
                let d = FovRestrictorCfg::default();
                self.fov = Some(FovRestrictorCfg {
                    dynamic: flag(values, "dynamic", d.dynamic),
                    fov_max: real(values, "fov_max", d.fov_max),
                    fov_min: real(values, "fov_min", d.fov_min),
                    gain: real(values, "gain", d.gain),
                    rate_limit: real(values, "rate_limit", d.rate_limit),
                    angular_gain: real(values, "angular_gain", d.angular_gain),
                });
            }
            types::VISION_SNAPPER => {
                let d = SnapperCfg::default();
                self.snapper = Some(SnapperCfg {
                    omega_threshold: real(values, "omega_threshold", d.omega_threshold),
                    fade_out: real(values, "fade_out", d.fade_out),
                    hold: real(values, "hold", d.hold),
                    fade_in: real(values, "fade_in", d.fade_in),
                });
            }
            types::COLOR_MANIPULATION => {
                let d = ColorCfg::default();
                self.color = Some(ColorCfg {
                    hue_delta_r: real(values, "hue_delta_r", d.hue_delta_r),
                    hue_delta_g: real(values, "hue_delta_g", d.hue_delta_g),
                    hue_delta_b: real(values, "hue_delta_b", d.hue_delta_b),
                    hue_delta_w: real(values, "hue_delta_w", d.hue_delta_w),
                    saturation_delta: real(values, "saturation_delta", d.saturation_delta),
                    contrast_delta: real(values, "contrast_delta", d.contrast_delta),
                    k_lin: real(values, "k_lin", d.k_lin),
                    k_rot: real(values, "k_rot", d.k_rot),
                });
            }
            types::DEPTH_OF_FIELD => {
                let d = DofCfg::default();
                self.dof = Some(DofCfg {
                    dynamic: flag(values, "dynamic", d.dynamic),
                    focus_distance: real(values, "focus_distance", d.focus_distance),
                    max_blur: real(values, "max_blur", d.max_blur),
                    probe_depth: real(values, "probe_depth", d.probe_depth),
                    speed_gain: real(values, "speed_gain", d.speed_gain),
                });
            }
            types::REST_FRAMES => {
                let model = match values.get("model").and_then(Value::as_text) {
                    Some("hat") => RestFrameModel::Hat,
                    _ => RestFrameModel::Nose,
                };
                let preset = match model {
                    RestFrameModel::Nose => RestFrameCfg::nose(),
                    RestFrameModel::Hat => RestFrameCfg::hat(),
                };
                let position = values
                    .get("offset")
                    .and_then(Value::as_vec3)
                    .unwrap_or(preset.offset.position);
                let orientation = values
                    .get("rotation")
                    .and_then(Value::as_quat)
                    .unwrap_or(Quat::IDENTITY);
                self.rest_frame = Some(RestFrameCfg {
                    model,
                    offset: Pose::new(position, orientation),
                });
            }
            types::PIXELIZE => {
                let h = values
                    .get("screen_height")
                    .and_then(Value::as_int)
                    .unwrap_or(270);
                self.pixelize = Some(PixelizeCfg { screen_height: h });
            }
            _ => return false,
        }
        true
    }

    /// Builds the configuration from preset documents; later documents for
    /// the same type win.
    pub fn from_presets<'a>(docs: impl IntoIterator<Item = &'a PresetDoc>) -> Self {
        let mut cfg = EffectsConfig::default();
        for doc in docs {
            cfg.set_from_values(&doc.target_type, &doc.values);
        }
        cfg
    }

    /// Builds the configuration from the enabled attachments of scene entities.
    pub fn from_entities<'a>(entities: impl IntoIterator<Item = &'a SceneEntity>) -> Self {
        let mut cfg = EffectsConfig::default();
        for e in entities {
            for a in e.attachments.iter().filter(|a| a.enabled) {
                cfg.set_from_values(&a.type_id, &a.values);
            }
        }
        cfg
    }

    /// Active techniques with their parameters, in a fixed order.
    pub fn techniques(&self) -> Vec<TechniqueInfo> {
        let mut out = Vec::new();
        if let Some(f) = &self.fov {
            let (condition, details) = if f.dynamic {
                (
                    "Dynamic, during linear movement".to_string(),
                    format!(
                        "FOV reduction size (minimum {} degrees) and speed ({} degrees/s)",
                        f.fov_min, f.rate_limit
                    ),
                )
            } else {
                (
                    "Static, always on".to_string(),
                    format!("Fixed FOV of {} degrees", f.fov_min),
                )
            };
            out.push(TechniqueInfo {
                name: "Reduced FOV".into(),
                apply_condition: condition,
                details,
            });
        }
        if let Some(s) = &self.snapper {
            out.push(TechniqueInfo {
                name: "Vision Snapper".into(),
                apply_condition: format!("Rotation faster than {} degrees/s", s.omega_threshold),
                details: format!(
                    "Fade out {} s, hold {} s, fade in {} s",
                    s.fade_out, s.hold, s.fade_in
                ),
            });
        }
        if let Some(c) = &self.color {
            out.push(TechniqueInfo {
                name: "Color Manipulation".into(),
                apply_condition: "Dynamic, linear and rotational acceleration".into(),
                details: format!(
                    "Hue deltas R {} G {} B {} W {} degrees, saturation {}, contrast {}",
                    c.hue_delta_r,
                    c.hue_delta_g,
                    c.hue_delta_b,
                    c.hue_delta_w,
                    c.saturation_delta,
                    c.contrast_delta
                ),
            });
        }
        if let Some(d) = &self.dof {
            out.push(TechniqueInfo {
                name: "Depth of Field".into(),
                apply_condition: if d.dynamic {
                    "Dynamic, during movement".into()
                } else {
                    "Static, always on".into()
                },
                details: format!(
                    "Focus distance {} m, maximum blur {}",
                    d.focus_distance, d.max_blur
                ),
            });
        }
        if let Some(r) = &self.rest_frame {
            let model = match r.model {
                RestFrameModel::Nose => "nose",
                RestFrameModel::Hat => "hat",
            };
            out.push(TechniqueInfo {
                name: "Rest Frame".into(),
                apply_condition: "Always on".into(),
                details: format!("Virtual {model} fixed in the head frame"),
            });
        }
        if let Some(p) = &self.pixelize {
            out.push(TechniqueInfo {
                name: "Pixelize".into(),
                apply_condition: "Always on (desktop only)".into(),
                details: format!("Screen height {} px", p.screen_height),
            });
        }
        out
    }
}

/// Rig motion that drives the effects during one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionSample {
    /// Linear speed, m/s.
    pub speed: f64,
    /// Angular speed, °/s.
    pub omega: f64,
    /// Linear acceleration magnitude, m/s².
    pub a_lin: f64,
    /// Angular acceleration magnitude, °/s².
    pub a_rot: f64,
}

impl MotionSample {
    pub fn from_vectors(v: Vec3, w: Vec3, a: Vec3, alpha: Vec3) -> Self {
        MotionSample {
            speed: v.norm(),
            omega: w.norm(),
            a_lin: a.norm(),
            a_rot: alpha.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectState {
    pub fov: f64,
    pub snapper: SnapperState,
}

/// One row of the effect parameter stream.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectFrame {
    pub t: f64,
    pub fov: f64,
    pub opacity: f64,
    pub color: ColorDeltas,
    pub blur: f64,
}

impl EffectFrame {
    pub const CSV_HEADER: &'static str = "t,fov,opacity,hue_r,hue_g,hue_b,hue_w,sat,con,blur";

    pub fn csv_fields(&self) -> [f64; 10] {
        [
            self.t,
            self.fov,
            self.opacity,
            self.color.hue_r,
            self.color.hue_g,
            self.color.hue_b,
            self.color.hue_w,
            self.color.saturation,
            self.color.contrast,
            self.blur,
        ]
    }
}

/// Stateful driver that evaluates every active effect once per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEngine {
    pub config: EffectsConfig,
    /// Field of view reported when no restrictor is active.
    pub native_fov: f64,
    pub state: EffectState,
}

impl EffectEngine {
    pub fn new(config: EffectsConfig, native_fov: f64) -> Self {
        let fov = match &config.fov {
            Some(f) if f.dynamic => f.fov_max,
            Some(f) => f.fov_min,
            None => native_fov,
        };
        EffectEngine {
            config,
            native_fov,
            state: EffectState {
                fov,
                snapper: SnapperState::default(),
            },
        }
    }

    /// Frame for the current state with the rig at rest, without advancing.
    pub fn idle_frame(&self, t: f64) -> EffectFrame {
        EffectFrame {
            t,
            fov: self.state.fov,
            opacity: self
                .config
                .snapper
                .as_ref()
                .map_or(0.0, |c| self.state.snapper.opacity(c)),
            color: ColorDeltas::default(),
            blur: self.config.dof.as_ref().map_or(0.0, |d| dof_effect(d, 0.0)),
        }
    }

    pub fn step(&mut self, t: f64, motion: MotionSample, dt: f64) -> EffectFrame {
        let fov = match &self.config.fov {
            Some(cfg) => {
                fov_restriction_with_rotation(cfg, motion.speed, motion.omega, self.state.fov, dt)
            }
            None => self.native_fov,
        };
        self.state.fov = fov;
        let opacity = match &self.config.snapper {
            Some(cfg) => {
                let (s, o) = snapper_step(cfg, self.state.snapper, motion.omega, dt);
                self.state.snapper = s;
                o
            }
            None => 0.0,
        };
        let color = self
            .config
            .color
            .as_ref()
            .map(|c| color_weights(c, motion.a_lin, motion.a_rot))
            .unwrap_or_default();
        let blur = self
            .config
            .dof
            .as_ref()
            .map_or(0.0, |d| dof_effect(d, motion.speed));
        EffectFrame {
            t,
            fov,
            opacity,
            color,
            blur,
        }
    }
}
