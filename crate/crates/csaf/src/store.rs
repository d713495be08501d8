//! Preset files on disk, one `<target_type>.<preset_name>.preset.json` per
//! preset.

use std::fs;
use std::path::{Path, PathBuf};

use csaf_core::registry::{PresetDoc, PresetLibrary, PresetWarning, Registry, RegistryError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, serde_json::Error),
    #[error("{0}: {1}")]
    Registry(PathBuf, RegistryError),
    #[error("{path}: file name does not match `{expected}`")]
    Misnamed { path: PathBuf, expected: String },
}

pub const SUFFIX: &str = ".preset.json";

pub fn file_name(target_type: &str, preset_name: &str) -> String {
    format!("{target_type}.{preset_name}{SUFFIX}")
}

#[derive(Debug, Clone)]
pub struct PresetStore {
    dir: PathBuf,
}

impl PresetStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PresetStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, target_type: &str, preset_name: &str) -> PathBuf {
        self.dir.join(file_name(target_type, preset_name))
    }

    /// Loads every preset in the directory, upgraded to the current schemas.
    /// A missing directory is an empty library.
    pub fn load(
        &self,
        registry: &Registry,
    ) -> Result<(PresetLibrary, Vec<PresetWarning>), StoreError> {
        let mut lib = PresetLibrary::new();
        let mut warnings = Vec::new();
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((lib, warnings)),
            Err(e) => return Err(StoreError::Io(self.dir.clone(), e)),
        };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(SUFFIX))
            })
            .collect();
        paths.sort();
        for path in paths {
            let doc = read_doc(&path)?;
            let expected = file_name(&doc.target_type, &doc.preset_name);
            if path.file_name().and_then(|n| n.to_str()) != Some(expected.as_str()) {
                return Err(StoreError::Misnamed { path, expected });
            }
            let (doc, w) = registry
                .upgrade_preset(&doc)
                .map_err(|e| StoreError::Registry(path.clone(), e))?;
            warnings.extend(w);
            lib.insert(doc);
        }
        Ok((lib, warnings))
    }

    pub fn save(&self, doc: &PresetDoc) -> Result<PathBuf, StoreError> {
        fs::create_dir_all(&self.dir).map_err(|e| StoreError::Io(self.dir.clone(), e))?;
        let path = self.path_for(&doc.target_type, &doc.preset_name);
        let mut text =
            serde_json::to_string_pretty(doc).map_err(|e| StoreError::Parse(path.clone(), e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| StoreError::Io(path.clone(), e))?;
        Ok(path)
    }

    /// Returns whether a file was removed.
    pub fn delete(&self, target_type: &str, preset_name: &str) -> Result<bool, StoreError> {
        let path = self.path_for(target_type, preset_name);
        match fs::remove_file(&path) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(StoreError::Io(path, e)),
        }
    }
}

pub fn read_doc(path: &Path) -> Result<PresetDoc, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Parse(path.to_path_buf(), e))
}
