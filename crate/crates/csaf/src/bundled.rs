//! Scenes, plans and fixtures shipped inside the binary.

use std::path::{Path, PathBuf};

use csaf_core::environment::SceneDescription;
use csaf_core::registry::Registry;
use csaf_core::runtime::SessionPlan;

use crate::LoadError;

const SCENES: [(&str, &str); 5] = [
    (
        "forest-simple",
        include_str!("../data/scenes/forest-simple.scene.json"),
    ),
    (
        "forest-complex",
        include_str!("../data/scenes/forest-complex.scene.json"),
    ),
    ("city", include_str!("../data/scenes/city.scene.json")),
    ("rural", include_str!("../data/scenes/rural.scene.json")),
    ("space", include_str!("../data/scenes/space.scene.json")),
];

const PLANS: [(&str, &str); 1] = [(
    "coin-demo",
    include_str!("../data/plans/coin-demo.plan.json"),
)];

/// Report filled with the example column of the standard report table.
pub const EXAMPLE_REPORT: &str = include_str!("../data/fixtures/example.report.v1.json");

pub fn scene_names() -> impl Iterator<Item = &'static str> {
    SCENES.iter().map(|(n, _)| *n)
}

pub fn plan_names() -> impl Iterator<Item = &'static str> {
    PLANS.iter().map(|(n, _)| *n)
}

pub fn bundled_scene(name: &str) -> Option<SceneDescription> {
    let (_, text) = SCENES.iter().find(|(n, _)| *n == name)?;
    Some(serde_json::from_str(text).expect("bundled scenes parse"))
}

pub fn bundled_plan(name: &str) -> Option<SessionPlan> {
    let (_, text) = PLANS.iter().find(|(n, _)| *n == name)?;
    Some(serde_json::from_str(text).expect("bundled plans parse"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| LoadError::Parse(path.to_path_buf(), e.to_string()))
}

/// A bundled scene name or a path to a scene file, checked against the
/// registry.
pub fn load_scene(
    reference: &str,
    base: Option<&Path>,
    registry: &Registry,
) -> Result<SceneDescription, LoadError> {
    let scene = match bundled_scene(reference) {
        Some(s) => s,
        None => read_json(&resolve(reference, base))?,
    };
    for e in &scene.entities {
        registry.check_entity(e).map_err(|err| {
            LoadError::Invalid(format!("scene `{}`, entity {}: {err}", scene.name, e.id))
        })?;
    }
    Ok(scene)
}

/// A bundled plan name or a path to a plan file. Returns the plan and the
/// directory relative references inside it resolve against.
pub fn load_plan(reference: &str) -> Result<(SessionPlan, Option<PathBuf>), LoadError> {
    if let Some(p) = bundled_plan(reference) {
        return Ok((p, None));
    }
    let path = PathBuf::from(reference);
    let plan = read_json(&path)?;
    Ok((plan, path.parent().map(Path::to_path_buf)))
}

fn resolve(reference: &str, base: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(reference);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}
