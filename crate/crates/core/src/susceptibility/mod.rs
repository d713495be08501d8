//! Individual susceptibility tests: the passive motion battery and the
//! Rod-and-Frame Test.

mod rft;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use rft::{
    generate_rft_trials, rotate_rod, score_rft, validate_rod, wrap_rod_angle, RftConfig,
    RftResponse, RftResult, RftTrial, RodState,
};

use crate::math::{Pose, Quat, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SusceptibilityError {
    #[error("at least one axis order is required")]
    NoOrders,
    #[error("order {0} is not a permutation of pitch, roll and yaw")]
    InvalidOrder(usize),
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error("{0} must be positive and finite")]
    InvalidDuration(&'static str),
    #[error("t = {t} outside schedule [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },
    #[error("invalid rod-and-frame configuration: {0}")]
    InvalidRft(&'static str),
    #[error("trial {0} was already validated")]
    AlreadyCommitted(usize),
    #[error("{trials} trials but {responses} responses")]
    CountMismatch { trials: usize, responses: usize },
}

pub type Result<T, E = SusceptibilityError> = core::result::Result<T, E>;

/// Head-frame rotation axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Pitch,
    Roll,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Pitch, Axis::Roll, Axis::Yaw];

    /// Unit axis in the head frame: pitch about `x`, yaw about `y`, roll about `z`.
    pub fn vector(self) -> Vec3 {
        match self {
            Axis::Pitch => Vec3::X,
            Axis::Yaw => Vec3::Y,
            Axis::Roll => Vec3::Z,
        }
    }

    /// Translation axis that shares this rotation axis.
    pub fn translation(self) -> TranslationAxis {
        match self {
            Axis::Pitch => TranslationAxis::Lateral,
            Axis::Yaw => TranslationAxis::Vertical,
            Axis::Roll => TranslationAxis::Longitudinal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Pitch => "pitch",
            Axis::Roll => "roll",
            Axis::Yaw => "yaw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationAxis {
    Lateral,
    Vertical,
    Longitudinal,
}

impl TranslationAxis {
    pub const ALL: [TranslationAxis; 3] = [
        TranslationAxis::Lateral,
        TranslationAxis::Vertical,
        TranslationAxis::Longitudinal,
    ];

    pub fn vector(self) -> Vec3 {
        match self {
            TranslationAxis::Lateral => Vec3::X,
            TranslationAxis::Vertical => Vec3::Y,
            TranslationAxis::Longitudinal => Vec3::Z,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TranslationAxis::Lateral => "lateral",
            TranslationAxis::Vertical => "vertical",
            TranslationAxis::Longitudinal => "longitudinal",
        }
    }
}

/// Axis a segment refers to, rotational or translational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionAxis {
    Rotation(Axis),
    Translation(TranslationAxis),
}

impl MotionAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            MotionAxis::Rotation(a) => a.as_str(),
            MotionAxis::Translation(a) => a.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TranslationCfg {
    /// Distance covered per translation segment, m.
    pub distance: f64,
    pub duration: f64,
}

impl Default for TranslationCfg {
    fn default() -> Self {
        TranslationCfg {
            distance: 4.0,
            duration: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityConfig {
    pub reps_per_axis: u32,
    /// Time the next-axis indicator is shown before each movement.
    pub indicator_duration: f64,
    pub turn_duration: f64,
    pub pause_after_turn: f64,
    pub pause_between_triples: f64,
    pub orders: Vec<[Axis; 3]>,
    /// Flip the direction of every other repetition on an axis.
    pub alternate_direction: bool,
    /// Shuffle the order list with the schedule seed.
    pub shuffle_orders: bool,
    pub include_translation: bool,
    pub translation: TranslationCfg,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        use Axis::*;
        SensitivityConfig {
            reps_per_axis: 1,
            indicator_duration: 1.0,
            turn_duration: 10.0,
            pause_after_turn: 2.0,
            pause_between_triples: 5.0,
            orders: alloc::vec![[Pitch, Roll, Yaw], [Roll, Yaw, Pitch], [Yaw, Pitch, Roll]],
            alternate_direction: true,
            shuffle_orders: false,
            include_translation: false,
            translation: TranslationCfg::default(),
        }
    }
}

impl SensitivityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(SusceptibilityError::NoOrders);
        }
        for (i, o) in self.orders.iter().enumerate() {
            if o[0] == o[1] || o[1] == o[2] || o[0] == o[2] {
                return Err(SusceptibilityError::InvalidOrder(i));
            }
        }
        if self.reps_per_axis == 0 {
            return Err(SusceptibilityError::ZeroRepetitions);
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let checks = [
            (self.indicator_duration, "indicator_duration"),
            (self.turn_duration, "turn_duration"),
            (self.pause_after_turn, "pause_after_turn"),
            (self.pause_between_triples, "pause_between_triples"),
        ];
        for (v, name) in checks {
            if !positive(v) {
                return Err(SusceptibilityError::InvalidDuration(name));
            }
        }
        if self.include_translation {
            if !positive(self.translation.duration) {
                return Err(SusceptibilityError::InvalidDuration("translation.duration"));
            }
            if !self.translation.distance.is_finite() || self.translation.distance < 0.0 {
                return Err(SusceptibilityError::InvalidDuration("translation.distance"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Shows which axis moves next.
    Indicator,
    Rotation,
    Translation,
    Pause,
    /// Zero-length end marker: the test returns to the main menu.
    ReturnToMenu,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Indicator => "indicator",
            SegmentKind::Rotation => "rotation",
            SegmentKind::Translation => "translation",
            SegmentKind::Pause => "pause",
            SegmentKind::ReturnToMenu => "return_to_menu",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSegment {
    pub kind: SegmentKind,
    pub axis: Option<MotionAxis>,
    pub start: f64,
    pub duration: f64,
    /// Signed total motion: degrees for rotations, metres for translations.
    pub magnitude: f64,
}

impl StimulusSegment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSchedule {
    pub segments: Vec<StimulusSegment>,
}

impl StimulusSchedule {
    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, StimulusSegment::end)
    }

    /// Segment active at `t`; boundaries belong to the later segment.
    pub fn segment_at(&self, t: f64) -> Option<&StimulusSegment> {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end())
            .or_else(|| self.segments.last().filter(|s| t >= 0.0 && t <= s.end()))
    }
}

struct Builder {
    segments: Vec<StimulusSegment>,
    clock: f64,
}

impl Builder {
    fn push(&mut self, kind: SegmentKind, axis: Option<MotionAxis>, duration: f64, magnitude: f64) {
        self.segments.push(StimulusSegment {
            kind,
            axis,
            start: self.clock,
            duration,
            magnitude,
        });
        self.clock += duration;
    }
}

/// Lays out the passive battery: for every axis order, each axis is
/// announced, moved and followed by a pause, `reps_per_axis` times.
pub fn build_sensitivity_schedule(cfg: &SensitivityConfig, seed: u64) -> Result<StimulusSchedule> {
    cfg.validate()?;
    let mut orders = cfg.orders.clone();
    if cfg.shuffle_orders {
        orders.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut b = Builder {
        segments: Vec::new(),
        clock: 0.0,
    };
    let direction = |rep: u32| {
        if cfg.alternate_direction && rep % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    };

    for (i, order) in orders.iter().enumerate() {
        if i > 0 {
            b.push(SegmentKind::Pause, None, cfg.pause_between_triples, 0.0);
        }
        for &axis in order {
            let a = Some(MotionAxis::Rotation(axis));
            for rep in 0..cfg.reps_per_axis {
                b.push(SegmentKind::Indicator, a, cfg.indicator_duration, 0.0);
                b.push(
                    SegmentKind::Rotation,
                    a,
                    cfg.turn_duration,
                    360.0 * direction(rep),
                );
                b.push(SegmentKind::Pause, None, cfg.pause_after_turn, 0.0);
            }
        }
    }
    if cfg.include_translation {
        let tr = &cfg.translation;
        for order in &orders {
            b.push(SegmentKind::Pause, None, cfg.pause_between_triples, 0.0);
            for &axis in order {
                let a = Some(MotionAxis::Translation(axis.translation()));
                for rep in 0..cfg.reps_per_axis {
                    b.push(SegmentKind::Indicator, a, cfg.indicator_duration, 0.0);
                    b.push(
                        SegmentKind::Translation,
                        a,
                        tr.duration,
                        tr.distance * direction(rep),
                    );
                    b.push(SegmentKind::Pause, None, cfg.pause_after_turn, 0.0);
                }
            }
        }
    }
    b.push(SegmentKind::ReturnToMenu, None, 0.0, 0.0);
    Ok(StimulusSchedule {
        segments: b.segments,
    })
}

fn apply_fraction(pose: Pose, seg: &StimulusSegment, frac: f64) -> Pose {
    match (seg.kind, seg.axis) {
        (SegmentKind::Rotation, Some(MotionAxis::Rotation(axis))) => {
            let turn = Quat::from_axis_angle(axis.vector(), seg.magnitude * frac);
            Pose::new(pose.position, (pose.orientation * turn).normalized())
        }
        (SegmentKind::Translation, Some(MotionAxis::Translation(axis))) => {
            let d = pose.orientation.rotate(axis.vector()) * (seg.magnitude * frac);
            Pose::new(pose.position + d, pose.orientation)
        }
        _ => pose,
    }
}

/// Camera pose at `t` relative to `origin`. Motion is expressed in the
/// camera's own frame at constant rate within each segment.
pub fn schedule_pose(schedule: &StimulusSchedule, origin: Pose, t: f64) -> Result<Pose> {
    let end = schedule.end();
    if !(t >= -1e-9 && t <= end + 1e-9) {
        return Err(SusceptibilityError::TimeOutOfRange { t, end });
    }
    let mut pose = origin;
    for seg in &schedule.segments {
        if t < seg.end() {
            let frac = if seg.duration > 0.0 {
                ((t - seg.start) / seg.duration).clamp(0.0, 1.0)
            } else {
                1.0
            };
            return Ok(apply_fraction(pose, seg, frac));
        }
        pose = apply_fraction(pose, seg, 1.0);
    }
    Ok(pose)
}
