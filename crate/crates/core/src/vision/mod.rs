//! Parameter computers for the cybersickness-reduction effects.
//!
//! Nothing here touches pixels: each function turns rig kinematics and a
//! configuration into the numbers a renderer would feed its post-processing
//! (field of view, fade opacity, color deltas, blur, rest-frame pose,
//! pixelation resolution).

mod effects;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use effects::{
    EffectEngine, EffectFrame, EffectState, EffectsConfig, MotionSample, TechniqueInfo,
};

use crate::math::{Pose, PoseSample, Quat, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VisionError {
    #[error("need at least 3 pose samples, got {0}")]
    TooFewSamples(usize),
    #[error("timestep must be positive and finite")]
    InvalidTimestep,
    #[error("sample {index} at t = {t} is off the uniform grid")]
    NonUniform { index: usize, t: f64 },
    #[error("screen height must be positive, got {0}")]
    InvalidScreenHeight(i64),
    #[error("screen height {requested} exceeds native height {native}")]
    ScreenHeightAboveNative { requested: i64, native: u32 },
}

/// Derivatives of a pose trace at one sample.
///
/// Linear quantities are world-frame; angular ones are head-frame rates in
/// degrees about `x` (pitch), `y` (yaw) and `z` (roll).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicsSample {
    pub t: f64,
    pub linear_velocity: Vec3,
    pub linear_accel: Vec3,
    pub angular_velocity: Vec3,
    pub angular_accel: Vec3,
}

/// Second-order finite differences: central in the interior, one-sided at
/// the ends. Angular rates come from relative rotations between samples.
pub fn kinematics_from_trace(
    poses: &[PoseSample],
    dt: f64,
) -> Result<Vec<KinematicsSample>, VisionError> {
    let n = poses.len();
    if n < 3 {
        return Err(VisionError::TooFewSamples(n));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(VisionError::InvalidTimestep);
    }
    let t0 = poses[0].t;
    for (i, p) in poses.iter().enumerate() {
        if (p.t - t0 - i as f64 * dt).abs() > 1e-6 {
            return Err(VisionError::NonUniform { index: i, t: p.t });
        }
    }
    let p: Vec<Vec3> = poses.iter().map(|s| s.position).collect();

    let vel = |i: usize| -> Vec3 {
        if i == 0 {
            (p[0] * -3.0 + p[1] * 4.0 - p[2]) / (2.0 * dt)
        } else if i == n - 1 {
            (p[n - 1] * 3.0 - p[n - 2] * 4.0 + p[n - 3]) / (2.0 * dt)
        } else {
            (p[i + 1] - p[i - 1]) / (2.0 * dt)
        }
    };
    let acc = |i: usize| -> Vec3 {
        let dt2 = dt * dt;
        if n >= 4 && i == 0 {
            (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) / dt2
        } else if n >= 4 && i == n - 1 {
            (p[n - 1] * 2.0 - p[n - 2] * 5.0 + p[n - 3] * 4.0 - p[n - 4]) / dt2
        } else {
            let c = i.clamp(1, n - 2);
            (p[c + 1] - p[c] * 2.0 + p[c - 1]) / dt2
        }
    };

    // Angular rate at the midpoint of each interval.
    let mid: Vec<Vec3> = poses
        .windows(2)
        .map(|w| relative_rotation(w[0].orientation, w[1].orientation) / dt)
        .collect();
    let omega: Vec<Vec3> = (0..n)
        .map(|i| {
            if i == 0 {
                (mid[0] * 3.0 - mid[1]) / 2.0
            } else if i == n - 1 {
                (mid[n - 2] * 3.0 - mid[n - 3]) / 2.0
            } else {
                (mid[i - 1] + mid[i]) / 2.0
            }
        })
        .collect();
    let alpha = |i: usize| -> Vec3 {
        if i == 0 {
            (omega[0] * -3.0 + omega[1] * 4.0 - omega[2]) / (2.0 * dt)
        } else if i == n - 1 {
            (omega[n - 1] * 3.0 - omega[n - 2] * 4.0 + omega[n - 3]) / (2.0 * dt)
        } else {
            (mid[i] - mid[i - 1]) / dt
        }
    };

    Ok((0..n)
        .map(|i| KinematicsSample {
            t: poses[i].t,
            linear_velocity: vel(i),
            linear_accel: acc(i),
            angular_velocity: omega[i],
            angular_accel: alpha(i),
        })
        .collect())
}

/// Rotation vector (degrees, frame of `a`) taking `a` to `b`.
fn relative_rotation(a: Quat, b: Quat) -> Vec3 {
    (a.conjugate() * b).to_rotation_vector()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FovRestrictorCfg {
    pub dynamic: bool,
    pub fov_max: f64,
    pub fov_min: f64,
    /// Degrees of restriction per m/s of linear speed.
    pub gain: f64,
    /// Maximum change of the field of view, degrees per second.
    pub rate_limit: f64,
    /// Degrees of restriction per °/s of angular speed; off by default.
    pub angular_gain: f64,
}

impl Default for FovRestrictorCfg {
    fn default() -> Self {
        FovRestrictorCfg {
            dynamic: true,
            fov_max: 110.0,
            fov_min: 60.0,
            gain: 20.0,
            rate_limit: 0.2,
            angular_gain: 0.0,
        }
    }
}

/// Field of view the restrictor is heading for at the given motion.
pub fn fov_target(cfg: &FovRestrictorCfg, speed: f64, omega: f64) -> f64 {
    let raw = cfg.fov_max - cfg.gain * speed.abs() - cfg.angular_gain * omega.abs();
    raw.clamp(cfg.fov_min, cfg.fov_max)
}

/// Next field of view for linear motion only.
pub fn fov_restriction(cfg: &FovRestrictorCfg, speed: f64, prev_fov: f64, dt: f64) -> f64 {
    fov_restriction_with_rotation(cfg, speed, 0.0, prev_fov, dt)
}

/// Moves from `prev_fov` toward the target by at most `rate_limit * dt`.
/// A static restrictor holds `fov_min`.
pub fn fov_restriction_with_rotation(
    cfg: &FovRestrictorCfg,
    speed: f64,
    omega: f64,
    prev_fov: f64,
    dt: f64,
) -> f64 {
    if !cfg.dynamic {
        return cfg.fov_min;
    }
    let prev = prev_fov.clamp(cfg.fov_min, cfg.fov_max);
    let target = fov_target(cfg, speed, omega);
    let max_step = cfg.rate_limit * dt.max(0.0);
    let gap = target - prev;
    if gap.abs() <= max_step {
        target
    } else {
        let mut next = (prev + max_step.copysign(gap)).clamp(cfg.fov_min, cfg.fov_max);
        // Rounding can push the realised step a few ulps past the limit.
        while (next - prev).abs() > max_step {
            next = if gap > 0.0 {
                next.next_down()
            } else {
                next.next_up()
            };
        }
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnapperCfg {
    /// Angular speed above which a blink starts, °/s.
    pub omega_threshold: f64,
    pub fade_out: f64,
    pub hold: f64,
    pub fade_in: f64,
}

impl Default for SnapperCfg {
    fn default() -> Self {
        SnapperCfg {
            omega_threshold: 60.0,
            fade_out: 0.1,
            hold: 0.1,
            fade_in: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SnapPhase {
    #[default]
    Idle,
    FadingOut,
    Black,
    FadingIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SnapperState {
    pub phase: SnapPhase,
    /// Time spent in the current phase.
    pub elapsed: f64,
}

const PHASE_EPS: f64 = 1e-9;

impl SnapperState {
    pub fn opacity(&self, cfg: &SnapperCfg) -> f64 {
        let ramp = |elapsed: f64, len: f64| {
            if len <= 0.0 {
                1.0
            } else {
                (elapsed / len).clamp(0.0, 1.0)
            }
        };
        match self.phase {
            SnapPhase::Idle => 0.0,
            SnapPhase::FadingOut => ramp(self.elapsed, cfg.fade_out),
            SnapPhase::Black => 1.0,
            SnapPhase::FadingIn => 1.0 - ramp(self.elapsed, cfg.fade_in),
        }
    }
}

/// Advances the blink state machine by `dt` and returns the new opacity.
///
/// Rotation faster than the threshold while idle (or fading back in)
/// starts a fade to black from the current opacity; black is held for
/// `hold`, then the view fades back in.
pub fn snapper_step(
    cfg: &SnapperCfg,
    state: SnapperState,
    omega: f64,
    dt: f64,
) -> (SnapperState, f64) {
    let mut st = state;
    if omega.abs() > cfg.omega_threshold
        && matches!(st.phase, SnapPhase::Idle | SnapPhase::FadingIn)
    {
        let from = st.opacity(cfg);
        st = SnapperState {
            phase: SnapPhase::FadingOut,
            elapsed: from * cfg.fade_out.max(0.0),
        };
    }
    let mut remaining = dt.max(0.0);
    loop {
        let (len, next) = match st.phase {
            SnapPhase::Idle => break,
            SnapPhase::FadingOut => (cfg.fade_out, SnapPhase::Black),
            SnapPhase::Black => (cfg.hold, SnapPhase::FadingIn),
            SnapPhase::FadingIn => (cfg.fade_in, SnapPhase::Idle),
        };
        let left = (len - st.elapsed).max(0.0);
        if left <= remaining + PHASE_EPS {
            remaining = (remaining - left).max(0.0);
            st = SnapperState {
                phase: next,
                elapsed: 0.0,
            };
        } else {
            st.elapsed += remaining;
            break;
        }
    }
    if st.phase == SnapPhase::Idle {
        st.elapsed = 0.0;
    }
    (st, st.opacity(cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorCfg {
    pub hue_delta_r: f64,
    pub hue_delta_g: f64,
    pub hue_delta_b: f64,
    pub hue_delta_w: f64,
    pub saturation_delta: f64,
    pub contrast_delta: f64,
    /// Weight per m/s² of linear acceleration.
    pub k_lin: f64,
    /// Weight per °/s² of angular acceleration.
    pub k_rot: f64,
}

impl Default for ColorCfg {
    fn default() -> Self {
        ColorCfg {
            hue_delta_r: 0.0,
            hue_delta_g: 0.0,
            hue_delta_b: 0.0,
            hue_delta_w: 0.0,
            saturation_delta: -0.3,
            contrast_delta: -0.2,
            k_lin: 0.5,
            k_rot: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColorDeltas {
    pub weight: f64,
    pub hue_r: f64,
    pub hue_g: f64,
    pub hue_b: f64,
    pub hue_w: f64,
    pub saturation: f64,
    pub contrast: f64,
}

/// `w = clamp(k_lin * a_lin + k_rot * a_rot, 0, 1)`; every delta is `w`
/// times its configured maximum.
pub fn color_weights(cfg: &ColorCfg, a_lin: f64, a_rot: f64) -> ColorDeltas {
    let w = (cfg.k_lin * a_lin.abs() + cfg.k_rot * a_rot.abs()).clamp(0.0, 1.0);
    ColorDeltas {
        weight: w,
        hue_r: w * cfg.hue_delta_r,
        hue_g: w * cfg.hue_delta_g,
        hue_b: w * cfg.hue_delta_b,
        hue_w: w * cfg.hue_delta_w,
        saturation: w * cfg.saturation_delta,
        contrast: w * cfg.contrast_delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DofCfg {
    pub dynamic: bool,
    pub focus_distance: f64,
    pub max_blur: f64,
    /// Depth at which the blur stream is sampled.
    pub probe_depth: f64,
    /// Dynamic mode scales blur by `min(1, speed_gain * speed)`.
    pub speed_gain: f64,
}

impl Default for DofCfg {
    fn default() -> Self {
        DofCfg {
            dynamic: false,
            focus_distance: 2.0,
            max_blur: 1.0,
            probe_depth: 4.0,
            speed_gain: 1.0,
        }
    }
}

/// `max_blur * min(1, |depth - focus| / focus)`.
pub fn dof_blur(cfg: &DofCfg, object_depth: f64) -> f64 {
    let depth = object_depth.max(0.0);
    let rel = (depth - cfg.focus_distance).abs() / cfg.focus_distance;
    cfg.max_blur * rel.min(1.0)
}

/// Blur at the probe depth, scaled by motion when dynamic.
pub fn dof_effect(cfg: &DofCfg, speed: f64) -> f64 {
    let base = dof_blur(cfg, cfg.probe_depth);
    if cfg.dynamic {
        base * (cfg.speed_gain * speed.abs()).min(1.0)
    } else {
        base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestFrameModel {
    #[default]
    Nose,
    Hat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestFrameCfg {
    pub model: RestFrameModel,
    /// Pose of the object in the head frame.
    pub offset: Pose,
}

impl RestFrameCfg {
    /// Slightly below and ahead of the eyes, centered.
    pub fn nose() -> Self {
        RestFrameCfg {
            model: RestFrameModel::Nose,
            offset: Pose::new(Vec3::new(0.0, -0.045, 0.085), Quat::IDENTITY),
        }
    }

    /// Brim above the eyes.
    pub fn hat() -> Self {
        RestFrameCfg {
            model: RestFrameModel::Hat,
            offset: Pose::new(Vec3::new(0.0, 0.11, 0.06), Quat::IDENTITY),
        }
    }
}

impl Default for RestFrameCfg {
    fn default() -> Self {
        RestFrameCfg::nose()
    }
}

/// World pose of the rest-frame object: `head ∘ offset`.
pub fn rest_frame_pose(head: Pose, cfg: &RestFrameCfg) -> Pose {
    head.compose(cfg.offset)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelizeCfg {
    pub screen_height: i64,
}

impl Default for PixelizeCfg {
    fn default() -> Self {
        PixelizeCfg { screen_height: 270 }
    }
}

/// Target resolution with height `screen_height` and the native aspect ratio.
///
/// Advisory only: the effect cannot be applied while an HMD is connected.
pub fn pixelize_resolution(
    cfg: &PixelizeCfg,
    native: (u32, u32),
) -> Result<(u32, u32), VisionError> {
    let (w, h) = native;
    if cfg.screen_height <= 0 {
        return Err(VisionError::InvalidScreenHeight(cfg.screen_height));
    }
    if cfg.screen_height > i64::from(h) {
        return Err(VisionError::ScreenHeightAboveNative {
            requested: cfg.screen_height,
            native: h,
        });
    }
    let sh = cfg.screen_height as f64;
    let width = libm::round(sh * f64::from(w) / f64::from(h)) as u32;
    Ok((width, cfg.screen_height as u32))
}
