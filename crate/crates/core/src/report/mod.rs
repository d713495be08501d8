//! The standardized study report: schema, validation, prefill from session
//! runs and a Markdown rendering laid out as feature / explanation / value.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{format_minutes, ControlType, MotionBreakdown, RunArtifacts, SessionSummary};
use crate::vision::TechniqueInfo;

pub const SCHEMA: &str = "csaf.report.v1";

/// Text printed for an optional row that carries no value.
pub const NOT_APPLICABLE: &str = "If any \u{2014} not applicable";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no sessions to report")]
    NoSessions,
    #[error("session {0} did not run to completion")]
    Incomplete(usize),
    #[error("sessions disagree on {field}: {detail}")]
    Inconsistent { field: &'static str, detail: String },
    #[error("report is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub participants: u32,
    pub females: u32,
    pub experienced: u32,
    pub inexperienced: u32,
    pub age: AgeStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownAxis {
    Lateral,
    Vertical,
    Longitudinal,
    Pitch,
    Yaw,
    Roll,
}

impl BreakdownAxis {
    pub fn label(self) -> &'static str {
        match self {
            BreakdownAxis::Lateral => "Linear acceleration along lateral",
            BreakdownAxis::Vertical => "Linear acceleration along vertical",
            BreakdownAxis::Longitudinal => "Linear acceleration along longitudinal",
            BreakdownAxis::Pitch => "Rotation along Pitch axis",
            BreakdownAxis::Yaw => "Rotation along Yaw axis",
            BreakdownAxis::Roll => "Rotation along Roll axis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownEntry {
    pub axis: BreakdownAxis,
    pub minutes: f64,
}

impl BreakdownEntry {
    /// `Rotation along Yaw axis - 10 min`, minutes to two decimals.
    pub fn describe(&self) -> String {
        format!(
            "{} - {} min",
            self.axis.label(),
            format_minutes(self.minutes * 60.0)
        )
    }
}

/// Motion breakdown of one passive session; `session` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBreakdown {
    pub session: u32,
    pub entries: Vec<BreakdownEntry>,
}

impl SessionBreakdown {
    pub fn from_breakdown(session: u32, b: &MotionBreakdown) -> Self {
        let all = [
            (BreakdownAxis::Lateral, b.linear_lateral),
            (BreakdownAxis::Vertical, b.linear_vertical),
            (BreakdownAxis::Longitudinal, b.linear_longitudinal),
            (BreakdownAxis::Pitch, b.rotation_pitch),
            (BreakdownAxis::Yaw, b.rotation_yaw),
            (BreakdownAxis::Roll, b.rotation_roll),
        ];
        let entries = all
            .iter()
            .filter(|(_, s)| format_minutes(*s) != "0")
            .map(|&(axis, s)| BreakdownEntry {
                axis,
                minutes: s / 60.0,
            })
            .collect();
        SessionBreakdown { session, entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub design: String,
    pub sessions: u32,
    pub baseline_min: Option<f64>,
    pub exposure_min: f64,
    pub break_min: Option<f64>,
    /// Passive sessions only; `None` when no session was passive.
    pub motion_breakdown: Option<Vec<SessionBreakdown>>,
    pub vr_content: String,
    pub control_type: ControlType,
    pub navigation_per_session: Vec<String>,
    /// Optic-flow proxy per session, when available.
    pub optic_flow: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub hmd: String,
    /// Degrees.
    pub fov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardReport {
    pub schema: String,
    pub demographics: Demographics,
    pub experiment: ExperimentSettings,
    pub reduction_techniques: Vec<TechniqueInfo>,
    pub hardware: Hardware,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

fn push(out: &mut Vec<Violation>, path: &str, message: impl Into<String>) {
    out.push(Violation {
        path: path.into(),
        message: message.into(),
    });
}

/// Every invariant violation with the path of the offending field. Empty
/// means the report is valid.
pub fn validate_report(r: &StandardReport) -> Vec<Violation> {
    let mut v = Vec::new();
    if r.schema != SCHEMA {
        push(&mut v, "schema", format!("expected `{SCHEMA}`"));
    }
    let d = &r.demographics;
    if d.females > d.participants {
        push(&mut v, "demographics.females", "exceeds participants");
    }
    if u64::from(d.experienced) + u64::from(d.inexperienced) > u64::from(d.participants) {
        push(
            &mut v,
            "demographics.experienced",
            "experienced + inexperienced exceeds participants",
        );
    }
    let a = &d.age;
    for (name, x) in [
        ("min", a.min),
        ("max", a.max),
        ("mean", a.mean),
        ("std", a.std),
    ] {
        if !x.is_finite() || x < 0.0 {
            push(
                &mut v,
                &format!("demographics.age.{name}"),
                "must be finite and non-negative",
            );
        }
    }
    if a.min > a.max {
        push(&mut v, "demographics.age.min", "exceeds age.max");
    }
    if !(a.min <= a.mean && a.mean <= a.max) {
        push(
            &mut v,
            "demographics.age.mean",
            "outside [age.min, age.max]",
        );
    }

    let e = &r.experiment;
    if e.sessions == 0 {
        push(&mut v, "experiment.sessions", "must be at least 1");
    }
    let duration_ok = |x: f64| x.is_finite() && x >= 0.0;
    if !(e.exposure_min.is_finite() && e.exposure_min > 0.0) {
        push(&mut v, "experiment.exposure_min", "must be positive");
    }
    if e.baseline_min.is_some_and(|x| !duration_ok(x)) {
        push(&mut v, "experiment.baseline_min", "must be non-negative");
    }
    if e.break_min.is_some_and(|x| !duration_ok(x)) {
        push(&mut v, "experiment.break_min", "must be non-negative");
    }
    if e.navigation_per_session.len() != e.sessions as usize {
        push(
            &mut v,
            "experiment.navigation_per_session",
            format!(
                "{} entries for {} sessions",
                e.navigation_per_session.len(),
                e.sessions
            ),
        );
    }
    if let Some(list) = &e.motion_breakdown {
        for (i, s) in list.iter().enumerate() {
            if s.session == 0 || s.session > e.sessions {
                push(
                    &mut v,
                    &format!("experiment.motion_breakdown[{i}].session"),
                    "not a session of this study",
                );
            }
            for (j, entry) in s.entries.iter().enumerate() {
                if !duration_ok(entry.minutes) {
                    push(
                        &mut v,
                        &format!("experiment.motion_breakdown[{i}].entries[{j}].minutes"),
                        "must be non-negative",
                    );
                }
            }
        }
    }
    if let Some(flow) = &e.optic_flow {
        if flow.len() != e.sessions as usize {
            push(
                &mut v,
                "experiment.optic_flow",
                format!("{} entries for {} sessions", flow.len(), e.sessions),
            );
        }
        if let Some(i) = flow.iter().position(|x| !duration_ok(*x)) {
            push(
                &mut v,
                &format!("experiment.optic_flow[{i}]"),
                "must be non-negative",
            );
        }
    }
    for (i, t) in r.reduction_techniques.iter().enumerate() {
        if t.name.trim().is_empty() {
            push(
                &mut v,
                &format!("reduction_techniques[{i}].name"),
                "must not be empty",
            );
        }
    }
    if !(r.hardware.fov.is_finite() && r.hardware.fov > 0.0 && r.hardware.fov <= 360.0) {
        push(&mut v, "hardware.fov", "must lie in (0, 360]");
    }
    v
}

fn same<T: PartialEq + core::fmt::Debug>(
    field: &'static str,
    values: impl Iterator<Item = T>,
) -> Result<Option<T>, ReportError> {
    let mut first = None;
    for x in values {
        match &first {
            None => first = Some(x),
            Some(f) if *f == x => {}
            Some(f) => {
                return Err(ReportError::Inconsistent {
                    field,
                    detail: format!("{f:?} vs {x:?}"),
                })
            }
        }
    }
    Ok(first)
}

/// Prefills the experiment-settings part of a report from finished runs,
/// one per session, in session order. Durations are copied from the
/// summaries without re-derivation.
pub fn from_session(
    artifacts: &[RunArtifacts],
    demographics: Demographics,
    hardware: Hardware,
) -> Result<StandardReport, ReportError> {
    let sums: Vec<&SessionSummary> = artifacts.iter().map(|a| &a.summary).collect();
    from_summaries(&sums, demographics, hardware)
}

/// Same as [`from_session`] for runs whose logs are not at hand.
pub fn from_summaries(
    sums: &[&SessionSummary],
    demographics: Demographics,
    hardware: Hardware,
) -> Result<StandardReport, ReportError> {
    if sums.is_empty() {
        return Err(ReportError::NoSessions);
    }
    if let Some(i) = sums.iter().position(|s| !s.completed) {
        return Err(ReportError::Incomplete(i));
    }
    let exposure_s = same("exposure duration", sums.iter().map(|s| s.exposure_s))?.unwrap_or(0.0);
    let baseline_s = same("baseline duration", sums.iter().map(|s| s.baseline_s))?.flatten();
    let break_s = same("break duration", sums.iter().map(|s| s.break_s))?.flatten();
    let control_type =
        same("control type", sums.iter().map(|s| s.control_type))?.unwrap_or(ControlType::Passive);

    let passive: Vec<SessionBreakdown> = sums
        .iter()
        .enumerate()
        .filter(|(_, s)| s.control_type == ControlType::Passive)
        .map(|(i, s)| SessionBreakdown::from_breakdown(i as u32 + 1, &s.breakdown))
        .collect();

    let mut techniques: Vec<TechniqueInfo> = Vec::new();
    for s in sums {
        for t in &s.techniques {
            if !techniques.contains(t) {
                techniques.push(t.clone());
            }
        }
    }

    let mut scenes: Vec<&str> = Vec::new();
    for s in sums {
        if !s.scene.is_empty() && !scenes.contains(&s.scene.as_str()) {
            scenes.push(&s.scene);
        }
    }
    let vr_content = if scenes.is_empty() {
        "Customized VR game".to_string()
    } else {
        format!("Customized VR game ({})", scenes.join(", "))
    };
    let design = if sums.len() > 1 {
        "Within-subject design"
    } else {
        "Single session"
    };

    Ok(StandardReport {
        schema: SCHEMA.into(),
        demographics,
        experiment: ExperimentSettings {
            design: design.into(),
            sessions: sums.len() as u32,
            baseline_min: baseline_s.map(|s| s / 60.0),
            exposure_min: exposure_s / 60.0,
            break_min: break_s.map(|s| s / 60.0),
            motion_breakdown: (!passive.is_empty()).then_some(passive),
            vr_content,
            control_type,
            navigation_per_session: sums.iter().map(|s| s.navigation.clone()).collect(),
            optic_flow: Some(sums.iter().map(|s| s.optic_flow_proxy).collect()),
        },
        reduction_techniques: techniques,
        hardware,
    })
}

/// Shortest decimal form, capped at four fractional digits.
fn trim_number(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn minutes(x: Option<f64>) -> String {
    x.map_or_else(
        || NOT_APPLICABLE.into(),
        |m| format!("{} min", trim_number(m)),
    )
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

/// Row labels of the document rendering, section headers included.
pub const ROW_LABELS: [&str; 24] = [
    "Basic Demographics",
    "Number of participants",
    "Number of Female",
    "Number of experienced Users",
    "Number of inexperienced Users",
    "Age range",
    "Experiment settings",
    "Experiment design",
    "Number of Sessions",
    "Duration of baseline (If any)",
    "Duration of the experiment (per session)",
    "Break between sessions/exposure (If any)",
    "Break down of linear acceleration and rotation in time (If passive navigation)",
    "VR content",
    "Control type",
    "Navigation type (per session)",
    "Optic Flow magnitude (per session if available)",
    "Cybersickness reduction techniques (if any)",
    "Name of the Techniques",
    "Apply condition",
    "Details of the techniques",
    "Hardware settings",
    "HMD device",
    "Related FOV",
];

/// Markdown table with columns feature, explanation and value. Fails on a
/// report that does not validate.
pub fn render_document(r: &StandardReport) -> Result<String, ReportError> {
    let violations = validate_report(r);
    if !violations.is_empty() {
        return Err(ReportError::Invalid(violations));
    }
    let d = &r.demographics;
    let e = &r.experiment;
    let sessions: Vec<String> = (1..=e.sessions).map(|i| format!("S{i}")).collect();

    let breakdown = match &e.motion_breakdown {
        None => NOT_APPLICABLE.into(),
        Some(list) => list
            .iter()
            .map(|s| {
                let body = if s.entries.is_empty() {
                    "no acceleration or rotation".into()
                } else {
                    s.entries
                        .iter()
                        .map(BreakdownEntry::describe)
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                format!("S{}: {body}", s.session)
            })
            .collect::<Vec<_>>()
            .join("; "),
    };
    let navigation = e
        .navigation_per_session
        .iter()
        .enumerate()
        .map(|(i, n)| format!("S{}. {n}", i + 1))
        .collect::<Vec<_>>()
        .join(", ");
    let optic_flow = match &e.optic_flow {
        None => NOT_APPLICABLE.into(),
        Some(v) => {
            let list = v
                .iter()
                .enumerate()
                .map(|(i, x)| format!("S{}: {}", i + 1, trim_number(*x)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{list} (proxy: mean(|w|/90 deg/s + |v|/1 m/s)/2)")
        }
    };
    let control = match e.control_type {
        ControlType::Passive => "Passive locomotion",
        ControlType::Active => "Active locomotion",
    };
    let techniques = |f: fn(&TechniqueInfo) -> &str| {
        if r.reduction_techniques.is_empty() {
            NOT_APPLICABLE.to_string()
        } else {
            r.reduction_techniques
                .iter()
                .map(f)
                .collect::<Vec<_>>()
                .join("; ")
        }
    };

    let rows: [(&str, &str, String); 22] = [
        ("**Basic Demographics**", "", String::new()),
        (
            "Number of participants",
            "Total number of participants",
            d.participants.to_string(),
        ),
        (
            "Number of Female",
            "Total number of females among participants",
            d.females.to_string(),
        ),
        (
            "Number of experienced Users",
            "Total number of experienced Users of VR",
            d.experienced.to_string(),
        ),
        (
            "Number of inexperienced Users",
            "Total number of inexperienced Users of VR",
            d.inexperienced.to_string(),
        ),
        (
            "Age range",
            "Report of age with range, mean and std",
            format!(
                "{}-{} (M: {}, Std: {})",
                trim_number(d.age.min),
                trim_number(d.age.max),
                trim_number(d.age.mean),
                trim_number(d.age.std)
            ),
        ),
        ("**Experiment settings**", "", String::new()),
        (
            "Experiment design",
            "Overall structure and plan of the experiment",
            e.design.clone(),
        ),
        (
            "Number of Sessions",
            "Total number of sessions that each participant experienced",
            format!("{} ({})", e.sessions, sessions.join(", ")),
        ),
        (
            "Duration of baseline (If any)",
            "Time of each session without VR exposure",
            minutes(e.baseline_min),
        ),
        (
            "Duration of the experiment (per session)",
            "Time of each session during VR exposure",
            minutes(Some(e.exposure_min)),
        ),
        (
            "Break between sessions/exposure (If any)",
            "Gap between sessions or periods of exposure",
            minutes(e.break_min),
        ),
        (
            "Break down of linear acceleration and rotation in time (If passive navigation)",
            "Duration of time in linear acceleration and rotation",
            breakdown,
        ),
        (
            "VR content",
            "VR game or 360 video, with names if any",
            e.vr_content.clone(),
        ),
        (
            "Control type",
            "Passive locomotion or active locomotion with controllers",
            control.into(),
        ),
        (
            "Navigation type (per session)",
            "Navigation type in each session",
            navigation,
        ),
        (
            "Optic Flow magnitude (per session if available)",
            "Mean optic-flow magnitude",
            optic_flow,
        ),
        (
            "**Cybersickness reduction techniques (if any)**",
            "",
            String::new(),
        ),
        (
            "Name of the Techniques",
            "The technique in short",
            techniques(|t| &t.name),
        ),
        (
            "Apply condition",
            "When the technique is applied",
            techniques(|t| &t.apply_condition),
        ),
        (
            "Details of the techniques",
            "Parameters of the technique",
            techniques(|t| &t.details),
        ),
        ("**Hardware settings**", "", String::new()),
    ];

    let mut out = String::new();
    out.push_str("| List of provided features | Explanation | Example/value |\n");
    out.push_str("|---|---|---|\n");
    for (label, explanation, value) in &rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            label,
            cell(explanation),
            cell(value)
        );
    }
    let _ = writeln!(
        out,
        "| HMD device | Head-mounted display model | {} |",
        cell(&r.hardware.hmd)
    );
    let _ = writeln!(
        out,
        "| Related FOV | Field of view of the display | {} deg |",
        trim_number(r.hardware.fov)
    );
    Ok(out)
}
