//! The file set a finished run leaves in its output directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use csaf_core::runtime::{RunArtifacts, SessionPlan, SessionSummary};

use crate::formats::{self, FormatError};
use crate::LoadError;

pub const POSE_CSV: &str = "pose.csv";
pub const EVENTS_CSV: &str = "events.csv";
pub const EFFECTS_CSV: &str = "effects.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const PLAN_JSON: &str = "plan.json";

/// Every file [`write_run`] produces.
pub const ARTIFACT_FILES: [&str; 5] = [POSE_CSV, EVENTS_CSV, EFFECTS_CSV, SUMMARY_JSON, PLAN_JSON];

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes logs, summary and the resolved plan into `dir`, creating it.
pub fn write_run(
    dir: &Path,
    plan: &SessionPlan,
    run: &RunArtifacts,
) -> Result<Vec<PathBuf>, FormatError> {
    fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(name);
    formats::write_pose_csv(create(&path(POSE_CSV))?, &run.pose_log)?;
    formats::write_event_csv(create(&path(EVENTS_CSV))?, &run.event_log)?;
    formats::write_effects_csv(create(&path(EFFECTS_CSV))?, &run.effect_log)?;
    write_json(&path(SUMMARY_JSON), &run.summary)?;
    write_json(&path(PLAN_JSON), plan)?;
    Ok(ARTIFACT_FILES.iter().map(|n| path(n)).collect())
}

/// Summary of a run directory, or a summary file given directly.
pub fn read_summary(path: &Path) -> Result<SessionSummary, LoadError> {
    let file = if path.is_dir() {
        path.join(SUMMARY_JSON)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file).map_err(|e| LoadError::Io(file.clone(), e))?;
    serde_json::from_str(&text).map_err(|e| LoadError::Parse(file, e.to_string()))
}
