//! CSV and JSON file formats for logs, traces, schedules and RFT results.
//!
//! Reals are written with Rust's shortest round-trip formatting, so a file
//! read back yields bit-identical values and two identical runs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use csaf_core::environment::Heightmap;
use csaf_core::locomotion::{ControllerInput, InputTrace, Side, TraceRow};
use csaf_core::registry::Value;
use csaf_core::runtime::{EventKind, EventRecord};
use csaf_core::susceptibility::{RftResponse, RftResult, RftTrial, StimulusSchedule};
use csaf_core::vision::EffectFrame;
use csaf_core::{Pose, PoseSample, Quat, Vec3};

pub const POSE_HEADER: [&str; 8] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"];
pub const EVENT_HEADER: [&str; 3] = ["t", "kind", "payload_json"];
pub const TRACE_HEADER: [&str; 14] = [
    "t", "side", "jx", "jy", "grip", "trigger", "validate", "cpx", "cpy", "cpz", "cqw", "cqx",
    "cqy", "cqz",
];
pub const SCHEDULE_HEADER: [&str; 5] = ["start", "duration", "kind", "axis", "magnitude"];
pub const RFT_HEADER: [&str; 5] = [
    "trial",
    "frame_sign",
    "rod_sign",
    "response_deg",
    "abs_error_deg",
];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: bad `{field}`: {reason}")]
    Field {
        line: u64,
        field: &'static str,
        reason: String,
    },
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

fn num(x: f64) -> String {
    format!("{x}")
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let found = rdr.headers()?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(FormatError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn str(&self, i: usize, field: &'static str) -> Result<&str> {
        self.rec.get(i).ok_or(FormatError::Field {
            line: self.line,
            field,
            reason: "missing".into(),
        })
    }

    fn real(&self, i: usize, field: &'static str) -> Result<f64> {
        let s = self.str(i, field)?;
        s.trim().parse().map_err(|_| FormatError::Field {
            line: self.line,
            field,
            reason: format!("`{s}` is not a number"),
        })
    }

    fn flag(&self, i: usize, field: &'static str) -> Result<bool> {
        match self.rec.get(i).unwrap_or("").trim() {
            "1" | "true" => Ok(true),
            "0" | "false" | "" => Ok(false),
            other => Err(FormatError::Field {
                line: self.line,
                field,
                reason: format!("`{other}` is not a flag"),
            }),
        }
    }
}

fn rows<R: Read>(
    rdr: &mut csv::Reader<R>,
    mut each: impl FnMut(Row<'_>) -> Result<()>,
) -> Result<()> {
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        each(Row { rec: &rec, line })?;
    }
    Ok(())
}

pub fn write_pose_csv<W: Write>(w: W, log: &[PoseSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(POSE_HEADER)?;
    for s in log {
        let (p, q) = (s.position, s.orientation);
        out.write_record([s.t, p.x, p.y, p.z, q.w, q.x, q.y, q.z].map(num))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pose_csv<R: Read>(r: R) -> Result<Vec<PoseSample>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &POSE_HEADER)?;
    let mut out = Vec::new();
    rows(&mut rdr, |row| {
        let v = |i: usize| row.real(i, POSE_HEADER[i]);
        out.push(PoseSample {
            t: v(0)?,
            position: Vec3::new(v(1)?, v(2)?, v(3)?),
            orientation: Quat::new(v(4)?, v(5)?, v(6)?, v(7)?),
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_event_csv<W: Write>(w: W, events: &[EventRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EVENT_HEADER)?;
    for e in events {
        let payload = serde_json::to_string(&e.payload)?;
        out.write_record([num(e.t), e.kind.as_str().to_string(), payload])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_event_csv<R: Read>(r: R) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &EVENT_HEADER)?;
    let mut out = Vec::new();
    rows(&mut rdr, |row| {
        let kind_s = row.str(1, "kind")?;
        let kind = EventKind::parse(kind_s).ok_or_else(|| FormatError::Field {
            line: row.line,
            field: "kind",
            reason: format!("unknown event kind `{kind_s}`"),
        })?;
        let payload: BTreeMap<String, Value> = serde_json::from_str(row.str(2, "payload_json")?)?;
        out.push(EventRecord {
            t: row.real(0, "t")?,
            kind,
            payload,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_effects_csv<W: Write>(w: W, frames: &[EffectFrame]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EffectFrame::CSV_HEADER.split(','))?;
    for f in frames {
        out.write_record(f.csv_fields().map(num))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_input_trace<W: Write>(w: W, trace: &InputTrace) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
    for r in trace.rows() {
        let i = &r.input;
        let (p, q) = (i.pose.position, i.pose.orientation);
        let mut rec = vec![num(r.t), r.side.as_str().to_string()];
        rec.extend([i.joystick[0], i.joystick[1]].map(num));
        rec.extend([flag(i.grip), flag(i.trigger), flag(i.validate)]);
        rec.extend([p.x, p.y, p.z, q.w, q.x, q.y, q.z].map(num));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a controller trace. The header may stop after `jy`, after the
/// flags or carry every column; absent flags read as false and absent or
/// empty pose columns put the controller at the rig origin.
pub fn read_input_trace<R: Read>(r: R) -> Result<InputTrace> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let width = rdr.headers()?.len();
    let width = if [4, 7, TRACE_HEADER.len()].contains(&width) {
        width
    } else {
        TRACE_HEADER.len()
    };
    check_header(&mut rdr, &TRACE_HEADER[..width])?;
    let mut out = Vec::new();
    rows(&mut rdr, |row| {
        let side = match row.str(1, "side")?.trim() {
            "left" | "Left" | "L" => Side::Left,
            "right" | "Right" | "R" => Side::Right,
            other => {
                return Err(FormatError::Field {
                    line: row.line,
                    field: "side",
                    reason: format!("`{other}` is neither left nor right"),
                })
            }
        };
        let pose = if row.rec.len() >= TRACE_HEADER.len() && !row.rec[7].trim().is_empty() {
            let v = |i: usize| row.real(i, TRACE_HEADER[i]);
            Pose::new(
                Vec3::new(v(7)?, v(8)?, v(9)?),
                Quat::new(v(10)?, v(11)?, v(12)?, v(13)?),
            )
        } else {
            Pose::IDENTITY
        };
        out.push(TraceRow {
            t: row.real(0, "t")?,
            side,
            input: ControllerInput {
                joystick: [row.real(2, "jx")?, row.real(3, "jy")?],
                grip: row.flag(4, "grip")?,
                trigger: row.flag(5, "trigger")?,
                validate: row.flag(6, "validate")?,
                pose,
            },
        });
        Ok(())
    })?;
    Ok(InputTrace::new(out))
}

pub fn write_schedule_csv<W: Write>(w: W, schedule: &StimulusSchedule) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCHEDULE_HEADER)?;
    for s in &schedule.segments {
        out.write_record([
            num(s.start),
            num(s.duration),
            s.kind.as_str().to_string(),
            s.axis.map_or(String::new(), |a| a.as_str().to_string()),
            num(s.magnitude),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Trial list, with response and error columns filled when the trials have
/// been answered and left empty otherwise.
pub fn write_rft_csv<W: Write>(
    w: W,
    trials: &[RftTrial],
    answered: Option<(&[RftResponse], &RftResult)>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RFT_HEADER)?;
    for (i, t) in trials.iter().enumerate() {
        let (resp, err) = match answered {
            Some((r, s)) => (num(r[i].final_rod_angle), num(s.absolute_errors[i])),
            None => (String::new(), String::new()),
        };
        out.write_record([
            t.index.to_string(),
            t.frame_sign.to_string(),
            t.rod_sign.to_string(),
            resp,
            err,
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Responses from a CSV with at least `trial` and `response_deg` columns,
/// such as a filled-in trial list.
pub fn read_rft_responses<R: Read>(r: R) -> Result<Vec<RftResponse>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(FormatError::Field {
                line: 1,
                field: name,
                reason: "column missing".into(),
            })
    };
    let (ti, ri) = (col("trial")?, col("response_deg")?);
    let mut out = Vec::new();
    rows(&mut rdr, |row| {
        let trial = row.real(ti, "trial")?;
        if trial < 0.0 || trial.fract() != 0.0 {
            return Err(FormatError::Field {
                line: row.line,
                field: "trial",
                reason: "not a trial index".into(),
            });
        }
        out.push(RftResponse {
            trial: trial as usize,
            final_rod_angle: row.real(ri, "response_deg")?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Row-major heights, one grid row per line.
pub fn write_heightmap_csv<W: Write>(w: W, map: &Heightmap) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in map.rows() {
        out.write_record(row.iter().map(|h| num(*h)))?;
    }
    out.flush()?;
    Ok(())
}
