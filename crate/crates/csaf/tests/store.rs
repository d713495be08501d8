use std::collections::BTreeMap;

use csaf::bundled::bundled_scene;
use csaf::experiment::apply_preset_refs;
use csaf::store::{file_name, PresetStore, StoreError};
use csaf_core::registry::{builtin_registry, PresetLibrary, Value};

fn speed(v: f64) -> BTreeMap<String, Value> {
    BTreeMap::from([("speed".to_string(), Value::Real(v))])
}

#[test]
fn missing_directory_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let store = PresetStore::new(dir.path().join("nope"));
    let (lib, warnings) = store.load(&builtin_registry()).unwrap();
    assert!(lib.is_empty());
    assert!(warnings.is_empty());
}

#[test]
fn save_load_delete() {
    let dir = tempfile::tempdir().unwrap();
    let registry = builtin_registry();
    let store = PresetStore::new(dir.path());
    let doc = registry
        .create_preset("ContinuousMove", "brisk", speed(3.5))
        .unwrap();
    let path = store.save(&doc).unwrap();
    assert_eq!(
        path.file_name().unwrap().to_str().unwrap(),
        "ContinuousMove.brisk.preset.json"
    );
    assert_eq!(
        file_name("ContinuousMove", "brisk"),
        "ContinuousMove.brisk.preset.json"
    );

    let (lib, _) = store.load(&registry).unwrap();
    assert_eq!(lib.get("ContinuousMove", "brisk"), Some(&doc));

    assert!(store.delete("ContinuousMove", "brisk").unwrap());
    assert!(!store.delete("ContinuousMove", "brisk").unwrap());
    assert!(store.load(&registry).unwrap().0.is_empty());
}

#[test]
fn misnamed_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let registry = builtin_registry();
    let doc = registry
        .create_preset("ContinuousMove", "brisk", speed(3.5))
        .unwrap();
    std::fs::write(
        dir.path().join("ContinuousMove.other.preset.json"),
        serde_json::to_string(&doc).unwrap(),
    )
    .unwrap();
    assert!(matches!(
        PresetStore::new(dir.path()).load(&registry),
        Err(StoreError::Misnamed { .. })
    ));
}

#[test]
fn unknown_fields_and_future_versions_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let registry = builtin_registry();
    let store = PresetStore::new(dir.path());
    let mut doc = registry
        .create_preset("ContinuousMove", "odd", speed(1.0))
        .unwrap();
    doc.values.insert("retired_field".into(), Value::Bool(true));
    store.save(&doc).unwrap();
    assert!(matches!(
        store.load(&registry),
        Err(StoreError::Registry(..))
    ));

    let mut doc = registry
        .create_preset("ContinuousMove", "odd", speed(1.0))
        .unwrap();
    doc.schema_version += 1;
    store.save(&doc).unwrap();
    assert!(matches!(
        store.load(&registry),
        Err(StoreError::Registry(..))
    ));
}

#[test]
fn preset_refs_apply_to_matching_entities() {
    let registry = builtin_registry();
    let mut lib = PresetLibrary::new();
    lib.insert(
        registry
            .create_preset("PathFollow", "slow", speed(0.5))
            .unwrap(),
    );
    let mut scene = bundled_scene("forest-simple").unwrap();
    apply_preset_refs(
        &mut scene,
        &["PathFollow.slow".to_string()],
        &lib,
        &registry,
    )
    .unwrap();
    let rig = scene
        .entities
        .iter()
        .find(|e| e.attachment("PathFollow").is_some())
        .unwrap();
    assert_eq!(
        rig.attachment("PathFollow").unwrap().values["speed"],
        Value::Real(0.5)
    );

    assert!(apply_preset_refs(
        &mut scene,
        &["PathFollow.fast".to_string()],
        &lib,
        &registry
    )
    .is_err());
    assert!(apply_preset_refs(&mut scene, &["no-dot".to_string()], &lib, &registry).is_err());
    let mut space = bundled_scene("space").unwrap();
    assert!(apply_preset_refs(
        &mut space,
        &["PathFollow.slow".to_string()],
        &lib,
        &registry
    )
    .is_err());
}
