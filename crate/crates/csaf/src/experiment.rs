//! Preset references and headless experiment-set runs.

use std::collections::BTreeMap;
use std::path::Path;

use csaf_core::environment::SceneDescription;
use csaf_core::registry::{PresetLibrary, PresetWarning, Registry};
use csaf_core::runtime::{
    next_node, run_headless, ExperimentSet, NodeResults, RunArtifacts, SessionPlan,
};

use crate::bundled::{load_plan, load_scene};
use crate::LoadError;

/// Splits `<target_type>.<preset_name>`.
pub fn split_ref(reference: &str) -> Result<(&str, &str), LoadError> {
    reference
        .split_once('.')
        .filter(|(t, n)| !t.is_empty() && !n.is_empty())
        .ok_or_else(|| {
            LoadError::Invalid(format!(
                "preset reference `{reference}` is not `<type>.<name>`"
            ))
        })
}

/// Applies each referenced preset to every entity carrying the target
/// feature. A reference that matches no entity is an error.
pub fn apply_preset_refs(
    scene: &mut SceneDescription,
    refs: &[String],
    library: &PresetLibrary,
    registry: &Registry,
) -> Result<Vec<PresetWarning>, LoadError> {
    let mut warnings = Vec::new();
    for r in refs {
        let (ty, name) = split_ref(r)?;
        let doc = library
            .get(ty, name)
            .ok_or_else(|| LoadError::Invalid(format!("unknown preset `{r}`")))?;
        let mut hit = false;
        for e in scene.entities.iter_mut() {
            if e.attachment(ty).is_some() {
                let applied = registry
                    .apply_preset(e, doc)
                    .map_err(|err| LoadError::Invalid(format!("preset `{r}`: {err}")))?;
                *e = applied.entity;
                warnings.extend(applied.warnings);
                hit = true;
            }
        }
        if !hit {
            return Err(LoadError::Invalid(format!(
                "preset `{r}`: scene `{}` has no `{ty}` feature",
                scene.name
            )));
        }
    }
    Ok(warnings)
}

#[derive(Debug, Clone)]
pub struct NodeRun {
    pub node: String,
    pub plan: SessionPlan,
    pub artifacts: RunArtifacts,
}

/// Runs the set from its start node until no edge applies. Each node runs
/// with `seed` so a set replays identically.
pub fn run_set(
    set: &ExperimentSet,
    base: Option<&Path>,
    registry: &Registry,
    library: &PresetLibrary,
    seed: u64,
) -> Result<Vec<NodeRun>, anyhow::Error> {
    set.validate()?;
    let mut visits: BTreeMap<String, u32> = BTreeMap::new();
    let mut runs = Vec::new();
    let mut current = set.node(&set.start);
    while let Some(node) = current {
        // A node without a plan runs the plan its scene describes.
        let (plan, plan_dir) = match node.plan.as_str() {
            "" => (None, None),
            p => {
                let (plan, dir) = load_plan(&resolve(p, base))?;
                (Some(plan), dir)
            }
        };
        let scene_ref = match (&plan, node.scene.as_str()) {
            (Some(p), "") => p.scene.clone(),
            (None, "") => anyhow::bail!("node `{}` names neither a plan nor a scene", node.id),
            (_, s) => s.to_string(),
        };
        let mut scene = load_scene(&scene_ref, plan_dir.as_deref().or(base), registry)?;
        apply_preset_refs(&mut scene, &node.presets, library, registry)?;
        let mut plan = plan.unwrap_or_else(|| SessionPlan::from_scene(&scene));
        plan.scene = scene.name.clone();
        plan.seed = seed;
        let artifacts = run_headless(&plan, &scene, None)?;
        *visits.entry(node.id.clone()).or_default() += 1;
        let results = NodeResults::from_summary(&artifacts.summary);
        runs.push(NodeRun {
            node: node.id.clone(),
            plan,
            artifacts,
        });
        current = next_node(set, &node.id, &results, &visits)?;
    }
    Ok(runs)
}

fn resolve(reference: &str, base: Option<&Path>) -> String {
    match base {
        Some(b)
            if crate::bundled::bundled_plan(reference).is_none()
                && Path::new(reference).is_relative() =>
        {
            b.join(reference).to_string_lossy().into_owned()
        }
        _ => reference.to_string(),
    }
}
