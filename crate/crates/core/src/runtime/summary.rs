use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{EventKind, Motion, PhaseKind, Session};
use crate::locomotion::Provider;
use crate::vision::{kinematics_from_trace, TechniqueInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlType {
    Passive,
    Active,
}

/// Classifier thresholds for the motion breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BreakdownThresholds {
    /// m/s² along a head axis.
    pub linear_accel: f64,
    /// °/s about a head axis.
    pub angular_rate: f64,
}

impl Default for BreakdownThresholds {
    fn default() -> Self {
        BreakdownThresholds {
            linear_accel: 0.1,
            angular_rate: 1.0,
        }
    }
}

/// Seconds of exposure spent accelerating along, or rotating about, each
/// head axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionBreakdown {
    pub linear_lateral: f64,
    pub linear_vertical: f64,
    pub linear_longitudinal: f64,
    pub rotation_pitch: f64,
    pub rotation_yaw: f64,
    pub rotation_roll: f64,
}

/// Minutes with at most two decimals and no trailing zeros.
pub fn format_minutes(seconds: f64) -> String {
    let hundredths = libm::round(seconds / 60.0 * 100.0) as i64;
    let whole = hundredths / 100;
    let frac = (hundredths % 100).abs();
    if frac == 0 {
        format!("{whole}")
    } else if frac % 10 == 0 {
        format!("{whole}.{}", frac / 10)
    } else {
        format!("{whole}.{frac:02}")
    }
}

impl MotionBreakdown {
    pub fn is_zero(&self) -> bool {
        *self == MotionBreakdown::default()
    }

    /// Report lines for every non-zero entry, e.g.
    /// `Rotation along Yaw axis - 10 min`.
    pub fn describe(&self) -> Vec<String> {
        let rows = [
            ("Linear acceleration along lateral", self.linear_lateral),
            ("Linear acceleration along vertical", self.linear_vertical),
            (
                "Linear acceleration along longitudinal",
                self.linear_longitudinal,
            ),
            ("Rotation along Pitch axis", self.rotation_pitch),
            ("Rotation along Yaw axis", self.rotation_yaw),
            ("Rotation along Roll axis", self.rotation_roll),
        ];
        rows.iter()
            .filter(|(_, s)| format_minutes(*s) != "0")
            .map(|(label, s)| format!("{label} - {} min", format_minutes(*s)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub kind: PhaseKind,
    pub start: f64,
    /// Time actually spent in the phase.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub plan_name: String,
    pub scene: String,
    pub seed: u64,
    pub completed: bool,
    pub duration_s: f64,
    pub phases: Vec<PhaseRecord>,
    pub baseline_s: Option<f64>,
    pub exposure_s: f64,
    pub break_s: Option<f64>,
    /// Means over exposure time.
    pub mean_linear_speed: f64,
    pub mean_angular_speed: f64,
    /// `mean(|ω| / 90°/s + |v| / 1 m/s) / 2`, a dimensionless stand-in for
    /// optic-flow magnitude.
    pub optic_flow_proxy: f64,
    pub breakdown: MotionBreakdown,
    pub control_type: ControlType,
    pub navigation: String,
    pub techniques: Vec<TechniqueInfo>,
    pub coins_total: usize,
    pub coins_collected: usize,
    pub targets_hit: usize,
    pub fms_prompts: usize,
    pub fms_ratings: Vec<i64>,
}

impl SessionSummary {
    pub fn mean_fms(&self) -> Option<f64> {
        (!self.fms_ratings.is_empty())
            .then(|| self.fms_ratings.iter().sum::<i64>() as f64 / self.fms_ratings.len() as f64)
    }
}

fn navigation_label(motion: &Motion) -> String {
    match motion {
        Motion::Static => "None".into(),
        Motion::PathFollow { .. } => "Path following".into(),
        Motion::Rotator { .. } => "Passive rotation".into(),
        Motion::Schedule(_) | Motion::Sensitivity(_) => "Passive motion battery".into(),
        Motion::Active { .. } => unreachable!("active labels come from the provider set"),
    }
}

fn active_navigation<'a>(providers: impl Iterator<Item = &'a Provider>) -> String {
    let mut labels: Vec<&str> = Vec::new();
    let all: Vec<&Provider> = providers.collect();
    let translational: Vec<&Provider> = all
        .iter()
        .copied()
        .filter(|p| p.is_translational())
        .collect();
    let chosen = if translational.is_empty() {
        all
    } else {
        translational
    };
    for p in chosen {
        let l = p.navigation_label();
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    if labels.is_empty() {
        "None".into()
    } else {
        labels.join(" + ")
    }
}

pub(super) fn summarize(s: &Session) -> SessionSummary {
    let plan = &s.plan;
    let clock = s.state.clock;
    let mut phases = Vec::new();
    let completed = s.state.finished && !s.state.stopped;
    for (i, p) in plan.phases.iter().enumerate() {
        let start = s.boundaries[i];
        if start > clock + super::EPS {
            break;
        }
        let duration = if completed {
            p.duration
        } else {
            (s.boundaries[i + 1].min(clock) - start).max(0.0)
        };
        phases.push(PhaseRecord {
            kind: p.kind,
            start,
            duration,
        });
    }
    let total_of = |kind: PhaseKind| -> Option<f64> {
        let v: Vec<f64> = phases
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.duration)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum())
    };
    let windows: Vec<(f64, f64)> = phases
        .iter()
        .filter(|r| r.kind == PhaseKind::Exposure)
        .map(|r| (r.start, r.start + r.duration))
        .collect();

    let mut breakdown = MotionBreakdown::default();
    let (mut lin, mut ang, mut flow, mut weight) = (0.0, 0.0, 0.0, 0.0);
    if let Ok(kin) = kinematics_from_trace(&s.trace, plan.dt) {
        let th = plan.breakdown;
        let flags: Vec<[bool; 6]> = kin
            .iter()
            .zip(&s.trace)
            .map(|(k, p)| {
                let a = p.orientation.conjugate().rotate(k.linear_accel);
                let w = k.angular_velocity;
                [
                    a.x.abs() > th.linear_accel,
                    a.y.abs() > th.linear_accel,
                    a.z.abs() > th.linear_accel,
                    w.x.abs() > th.angular_rate,
                    w.y.abs() > th.angular_rate,
                    w.z.abs() > th.angular_rate,
                ]
            })
            .collect();
        for i in 0..kin.len().saturating_sub(1) {
            let (ta, tb) = (kin[i].t, kin[i + 1].t);
            let mid = 0.5 * (ta + tb);
            if !windows.iter().any(|&(a, b)| mid > a && mid < b) {
                continue;
            }
            let h = tb - ta;
            let speed = |j: usize| kin[j].linear_velocity.norm();
            let omega = |j: usize| kin[j].angular_velocity.norm();
            lin += 0.5 * h * (speed(i) + speed(i + 1));
            ang += 0.5 * h * (omega(i) + omega(i + 1));
            flow += 0.5 * h * ((omega(i) / 90.0 + speed(i)) + (omega(i + 1) / 90.0 + speed(i + 1)))
                / 2.0;
            weight += h;
            let mut acc = [0.0; 6];
            for (axis, slot) in acc.iter_mut().enumerate() {
                let c = u8::from(flags[i][axis]) + u8::from(flags[i + 1][axis]);
                *slot = 0.5 * h * f64::from(c);
            }
            breakdown.linear_lateral += acc[0];
            breakdown.linear_vertical += acc[1];
            breakdown.linear_longitudinal += acc[2];
            breakdown.rotation_pitch += acc[3];
            breakdown.rotation_yaw += acc[4];
            breakdown.rotation_roll += acc[5];
        }
    }
    let mean = |v: f64| if weight > 0.0 { v / weight } else { 0.0 };

    let (control_type, navigation) = match &plan.motion {
        Motion::Active { .. } => (
            ControlType::Active,
            active_navigation(s.providers.providers()),
        ),
        other => (ControlType::Passive, navigation_label(other)),
    };
    let targets_hit = s
        .events
        .iter()
        .filter(|e| e.kind == EventKind::TargetHit)
        .count();

    SessionSummary {
        plan_name: plan.name.clone(),
        scene: plan.scene.clone(),
        seed: plan.seed,
        completed,
        duration_s: phases.iter().map(|r| r.duration).sum(),
        baseline_s: total_of(PhaseKind::Baseline),
        exposure_s: total_of(PhaseKind::Exposure).unwrap_or(0.0),
        break_s: total_of(PhaseKind::Break),
        phases,
        mean_linear_speed: mean(lin),
        mean_angular_speed: mean(ang),
        optic_flow_proxy: mean(flow),
        breakdown,
        control_type,
        navigation,
        techniques: s.effects.config.techniques(),
        coins_total: s.coins.len(),
        coins_collected: s.state.collected.len(),
        targets_hit,
        fms_prompts: s.prompt_count as usize,
        fms_ratings: s.ratings.clone(),
    }
}

impl fmt::Display for ControlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlType::Passive => "Passive",
            ControlType::Active => "Active",
        })
    }
}
