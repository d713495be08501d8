use csaf::bundled::{
    bundled_plan, bundled_scene, load_plan, load_scene, plan_names, scene_names, EXAMPLE_REPORT,
};
use csaf::LoadError;
use csaf_core::environment::{build_path, generate_terrain};
use csaf_core::registry::builtin_registry;
use csaf_core::report::validate_report;
use csaf_core::runtime::{run_headless, Motion, SessionPlan};

#[test]
fn every_bundled_scene_loads_and_checks() {
    let registry = builtin_registry();
    let names: Vec<_> = scene_names().collect();
    assert_eq!(
        names,
        ["forest-simple", "forest-complex", "city", "rural", "space"]
    );
    for name in names {
        let scene = load_scene(name, None, &registry).unwrap();
        assert_eq!(scene.name, name);
        if let Some(t) = &scene.terrain {
            generate_terrain(t).unwrap();
        }
        if let Some(p) = &scene.path {
            build_path(p).unwrap();
        }
    }
}

#[test]
fn scene_plans_validate_and_run_briefly() {
    for name in scene_names() {
        let scene = bundled_scene(name).unwrap();
        let mut plan = SessionPlan::from_scene(&scene);
        plan.validate().unwrap();
        for p in &mut plan.phases {
            p.duration = p.duration.min(2.0);
        }
        let run = run_headless(&plan, &scene, None).unwrap();
        assert!(run.summary.completed, "{name}");
    }
}

#[test]
fn path_scenes_follow_their_path() {
    let scene = bundled_scene("forest-simple").unwrap();
    let plan = SessionPlan::from_scene(&scene);
    assert!(matches!(plan.motion, Motion::PathFollow { .. }));
    let space = bundled_scene("space").unwrap();
    assert!(space.path.is_none());
    assert!(matches!(
        SessionPlan::from_scene(&space).motion,
        Motion::Sensitivity(_)
    ));
}

#[test]
fn demo_plan_is_bundled_and_valid() {
    assert_eq!(plan_names().collect::<Vec<_>>(), ["coin-demo"]);
    let plan = bundled_plan("coin-demo").unwrap();
    plan.validate().unwrap();
    assert_eq!(plan.scene, "forest-simple");
    let (same, dir) = load_plan("coin-demo").unwrap();
    assert_eq!(same, plan);
    assert!(dir.is_none());
}

#[test]
fn example_fixture_is_valid() {
    let report = serde_json::from_str(EXAMPLE_REPORT).unwrap();
    assert!(validate_report(&report).is_empty());
}

#[test]
fn scene_files_resolve_against_base() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = bundled_scene("rural").unwrap();
    scene.name = "my-rural".into();
    std::fs::write(
        dir.path().join("mine.json"),
        serde_json::to_string(&scene).unwrap(),
    )
    .unwrap();
    let registry = builtin_registry();
    let loaded = load_scene("mine.json", Some(dir.path()), &registry).unwrap();
    assert_eq!(loaded, scene);
    assert!(matches!(
        load_scene("missing.json", Some(dir.path()), &registry),
        Err(LoadError::Io(..))
    ));
    std::fs::write(dir.path().join("broken.json"), "{").unwrap();
    assert!(matches!(
        load_scene("broken.json", Some(dir.path()), &registry),
        Err(LoadError::Parse(..))
    ));
}

#[test]
fn scenes_with_unknown_features_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = bundled_scene("city").unwrap();
    scene.entities[0].attachments[0].type_id = "NoSuchFeature".into();
    std::fs::write(
        dir.path().join("bad.json"),
        serde_json::to_string(&scene).unwrap(),
    )
    .unwrap();
    assert!(matches!(
        load_scene("bad.json", Some(dir.path()), &builtin_registry()),
        Err(LoadError::Invalid(_))
    ));
}
