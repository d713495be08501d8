//! Feature types, presets and scene entities.
//!
//! A [`Registry`] holds every feature type known to the engine, each under a
//! [`Category`]. A [`PresetDoc`] is a named bundle of field values for one
//! type; it never mentions entities, so the same document can be applied to
//! any entity carrying an attachment of that type, whatever the entity is
//! called. Extensions are types that declare another type as their base and
//! are offered for every entity that carries the base.

mod builtin;
mod value;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use builtin::{builtin_registry, types};
pub use value::{SemanticType, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("type `{0}` is already registered")]
    DuplicateType(String),
    #[error("type `{ty}` extends unregistered type `{base}`")]
    DanglingExtension { ty: String, base: String },
    #[error("category `{0}` has not been declared")]
    UnknownCategory(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("`{0}` is not a valid preset name")]
    InvalidPresetName(String),
    #[error("type `{ty}` declares field `{field}` twice")]
    DuplicateField { ty: String, field: String },
    #[error("type `{ty}` has no field `{field}`")]
    UnknownField { ty: String, field: String },
    #[error("field `{field}` expects {expected}, got {found}")]
    TypeMismatch {
        field: String,
        expected: String,
        found: &'static str,
    },
    #[error("field `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("entity has no `{0}` attachment")]
    NoAttachment(String),
    #[error("preset schema version {found} of `{ty}` is newer than supported version {supported}")]
    SchemaTooNew {
        ty: String,
        found: u32,
        supported: u32,
    },
    #[error("preset schema version must be at least 1")]
    SchemaVersionZero,
    #[error("enabling extension `{ext}` requires a `{base}` attachment")]
    MissingBase { ext: String, base: String },
}

pub type Result<T, E = RegistryError> = core::result::Result<T, E>;

/// Label of a setup tab. Ordering in listings follows declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(String);

impl Category {
    pub const EXPERIMENT: &'static str = "Experiment";
    pub const ENVIRONMENT: &'static str = "Environment";
    pub const VISION: &'static str = "Vision";
    pub const LOCOMOTION: &'static str = "Locomotion";

    pub fn new(name: impl Into<String>) -> Self {
        Category(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub ty: SemanticType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub default: Value,
}

impl FieldSpec {
    pub fn new(name: &str, ty: SemanticType, unit: Option<&str>, default: Value) -> Self {
        FieldSpec {
            name: name.to_string(),
            ty,
            unit: unit.map(ToString::to_string),
            default,
        }
    }

    pub fn boolean(name: &str, default: bool) -> Self {
        Self::new(name, SemanticType::Bool, None, Value::Bool(default))
    }

    pub fn integer(name: &str, default: i64) -> Self {
        Self::new(name, SemanticType::Int, None, Value::Int(default))
    }

    pub fn real(name: &str, unit: &str, default: f64) -> Self {
        let unit = if unit.is_empty() { None } else { Some(unit) };
        Self::new(name, SemanticType::Real, unit, Value::Real(default))
    }

    pub fn text(name: &str, default: &str) -> Self {
        Self::new(
            name,
            SemanticType::Text,
            None,
            Value::Text(default.to_string()),
        )
    }

    pub fn choice(name: &str, variants: &[&str], default: &str) -> Self {
        Self::new(
            name,
            SemanticType::Enum(variants.iter().map(|v| v.to_string()).collect()),
            None,
            Value::Text(default.to_string()),
        )
    }

    pub fn vec3(name: &str, unit: &str, default: crate::Vec3) -> Self {
        Self::new(name, SemanticType::Vec3, Some(unit), Value::Vec3(default))
    }

    pub fn quat(name: &str, default: crate::Quat) -> Self {
        Self::new(name, SemanticType::Quat, None, Value::Quat(default))
    }

    pub fn preset_ref(name: &str) -> Self {
        Self::new(
            name,
            SemanticType::PresetRef,
            None,
            Value::Text(String::new()),
        )
    }
}

/// A registered feature type and its field schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeTag {
    pub identifier: String,
    pub category: Category,
    pub fields: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extends: Option<String>,
    #[serde(default = "one")]
    pub schema_version: u32,
}

fn one() -> u32 {
    1
}

impl TypeTag {
    pub fn new(identifier: &str, category: &str, fields: Vec<FieldSpec>) -> Self {
        TypeTag {
            identifier: identifier.to_string(),
            category: Category::new(category),
            fields,
            extends: None,
            schema_version: 1,
        }
    }

    pub fn extending(mut self, base: &str) -> Self {
        self.extends = Some(base.to_string());
        self
    }

    pub fn with_schema_version(mut self, version: u32) -> Self {
        self.schema_version = version;
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn defaults(&self) -> BTreeMap<String, Value> {
        self.fields
            .iter()
            .map(|f| (f.name.clone(), f.default.clone()))
            .collect()
    }

    pub fn is_extension(&self) -> bool {
        self.extends.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub identifier: String,
    pub category: Category,
    pub index: usize,
}

/// Shareable parameter bundle for a single feature type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetDoc {
    pub preset_name: String,
    pub target_type: String,
    pub schema_version: u32,
    pub values: BTreeMap<String, Value>,
}

impl PresetDoc {
    pub fn get(&self, field: &str) -> Option<&Value> {
        self.values.get(field)
    }
}

/// Something the registry tolerated while loading a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetWarning {
    DroppedField { field: String, from_version: u32 },
}

impl fmt::Display for PresetWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetWarning::DroppedField {
                field,
                from_version,
            } => write!(
                f,
                "dropped unknown field `{field}` from schema version {from_version}"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u64);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub type_id: String,
    pub values: BTreeMap<String, Value>,
    pub enabled: bool,
}

/// Scene node. Identified by `id`; `display_name` is cosmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntity {
    pub id: EntityId,
    pub display_name: String,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
}

impl SceneEntity {
    pub fn new(id: EntityId, display_name: impl Into<String>) -> Self {
        SceneEntity {
            id,
            display_name: display_name.into(),
            attachments: Vec::new(),
        }
    }

    pub fn attachment(&self, type_id: &str) -> Option<&Attachment> {
        self.attachments.iter().find(|a| a.type_id == type_id)
    }

    fn attachment_mut(&mut self, type_id: &str) -> Option<&mut Attachment> {
        self.attachments.iter_mut().find(|a| a.type_id == type_id)
    }

    pub fn is_enabled(&self, type_id: &str) -> bool {
        self.attachment(type_id).is_some_and(|a| a.enabled)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.display_name = name.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameCheck {
    Ok,
    InvalidIdentifier,
    Duplicate,
}

/// Result of applying a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub entity: SceneEntity,
    pub warnings: Vec<PresetWarning>,
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Preset names end up in file names, so they are restricted to
/// `[A-Za-z0-9_-]+`.
pub fn is_preset_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    categories: Vec<Category>,
    types: Vec<TypeTag>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with the four standard categories declared and no types.
    pub fn with_standard_categories() -> Self {
        let mut r = Registry::new();
        for c in [
            Category::EXPERIMENT,
            Category::ENVIRONMENT,
            Category::VISION,
            Category::LOCOMOTION,
        ] {
            r.declare_category(c);
        }
        r
    }

    /// Declares a category; declaring an existing one is a no-op.
    pub fn declare_category(&mut self, name: &str) -> Category {
        let c = Category::new(name);
        if !self.categories.contains(&c) {
            self.categories.push(c.clone());
        }
        c
    }

    pub fn register_type(&mut self, tag: TypeTag) -> Result<Registration> {
        if !is_identifier(&tag.identifier) {
            return Err(RegistryError::InvalidIdentifier(tag.identifier));
        }
        if self.get(&tag.identifier).is_some() {
            return Err(RegistryError::DuplicateType(tag.identifier));
        }
        if !self.categories.contains(&tag.category) {
            return Err(RegistryError::UnknownCategory(tag.category.0));
        }
        if let Some(base) = &tag.extends {
            if self.get(base).is_none() {
                return Err(RegistryError::DanglingExtension {
                    ty: tag.identifier,
                    base: base.clone(),
                });
            }
        }
        if tag.schema_version == 0 {
            return Err(RegistryError::SchemaVersionZero);
        }
        for (i, f) in tag.fields.iter().enumerate() {
            if tag.fields[..i].iter().any(|g| g.name == f.name) {
                return Err(RegistryError::DuplicateField {
                    ty: tag.identifier.clone(),
                    field: f.name.clone(),
                });
            }
            f.ty.check(&f.name, &f.default)?;
        }
        let reg = Registration {
            identifier: tag.identifier.clone(),
            category: tag.category.clone(),
            index: self.types.len(),
        };
        self.types.push(tag);
        Ok(reg)
    }

    pub fn get(&self, identifier: &str) -> Option<&TypeTag> {
        self.types.iter().find(|t| t.identifier == identifier)
    }

    fn require(&self, identifier: &str) -> Result<&TypeTag> {
        self.get(identifier)
            .ok_or_else(|| RegistryError::UnknownType(identifier.to_string()))
    }

    /// All types in registration order.
    pub fn types(&self) -> &[TypeTag] {
        &self.types
    }

    pub fn types_in(&self, category: &str) -> impl Iterator<Item = &TypeTag> + '_ {
        let category = Category::new(category);
        self.types.iter().filter(move |t| t.category == category)
    }

    /// Categories that have at least one registered type, in declaration order.
    pub fn list_categories(&self) -> Vec<&Category> {
        self.categories
            .iter()
            .filter(|c| self.types.iter().any(|t| &t.category == *c))
            .collect()
    }

    pub fn validate_feature_name(&self, name: &str) -> NameCheck {
        if !is_identifier(name) {
            NameCheck::InvalidIdentifier
        } else if self.get(name).is_some() {
            NameCheck::Duplicate
        } else {
            NameCheck::Ok
        }
    }

    /// Builds a preset for `type_id`; fields absent from `values` take their defaults.
    pub fn create_preset(
        &self,
        type_id: &str,
        name: &str,
        values: BTreeMap<String, Value>,
    ) -> Result<PresetDoc> {
        let tag = self.require(type_id)?;
        if !is_preset_name(name) {
            return Err(RegistryError::InvalidPresetName(name.to_string()));
        }
        let mut out = tag.defaults();
        for (field, v) in values {
            let spec = tag
                .field(&field)
                .ok_or_else(|| RegistryError::UnknownField {
                    ty: tag.identifier.clone(),
                    field: field.clone(),
                })?;
            let v = spec.ty.coerce(&field, v)?;
            out.insert(field, v);
        }
        Ok(PresetDoc {
            preset_name: name.to_string(),
            target_type: tag.identifier.clone(),
            schema_version: tag.schema_version,
            values: out,
        })
    }

    /// Normalizes a document to the registry's current schema. Older
    /// documents lose fields the schema no longer has (with a warning);
    /// newer ones are rejected.
    pub fn upgrade_preset(&self, doc: &PresetDoc) -> Result<(PresetDoc, Vec<PresetWarning>)> {
        let tag = self.require(&doc.target_type)?;
        if doc.schema_version == 0 {
            return Err(RegistryError::SchemaVersionZero);
        }
        if doc.schema_version > tag.schema_version {
            return Err(RegistryError::SchemaTooNew {
                ty: tag.identifier.clone(),
                found: doc.schema_version,
                supported: tag.schema_version,
            });
        }
        let older = doc.schema_version < tag.schema_version;
        let mut warnings = Vec::new();
        let mut kept = BTreeMap::new();
        for (field, v) in &doc.values {
            match tag.field(field) {
                Some(_) => {
                    kept.insert(field.clone(), v.clone());
                }
                None if older => warnings.push(PresetWarning::DroppedField {
                    field: field.clone(),
                    from_version: doc.schema_version,
                }),
                None => {
                    return Err(RegistryError::UnknownField {
                        ty: tag.identifier.clone(),
                        field: field.clone(),
                    })
                }
            }
        }
        let upgraded = self.create_preset(&tag.identifier, &doc.preset_name, kept)?;
        Ok((upgraded, warnings))
    }

    pub fn apply_preset(&self, entity: &SceneEntity, preset: &PresetDoc) -> Result<Applied> {
        let (doc, warnings) = self.upgrade_preset(preset)?;
        let mut entity = entity.clone();
        let att = entity
            .attachment_mut(&doc.target_type)
            .ok_or_else(|| RegistryError::NoAttachment(doc.target_type.clone()))?;
        att.values = doc.values;
        Ok(Applied { entity, warnings })
    }

    /// Captures the current values of one attachment as a preset.
    pub fn extract_preset(
        &self,
        entity: &SceneEntity,
        type_id: &str,
        name: &str,
    ) -> Result<PresetDoc> {
        let tag = self.require(type_id)?;
        let att = entity
            .attachment(type_id)
            .ok_or_else(|| RegistryError::NoAttachment(type_id.to_string()))?;
        let mut values = tag.defaults();
        for (k, v) in &att.values {
            if tag.field(k).is_some() {
                values.insert(k.clone(), v.clone());
            }
        }
        self.create_preset(type_id, name, values)
    }

    /// Extension types whose base is attached to `entity`, in registration order.
    pub fn available_extensions(&self, entity: &SceneEntity) -> Vec<&TypeTag> {
        self.types
            .iter()
            .filter(|t| {
                t.extends
                    .as_deref()
                    .is_some_and(|base| entity.attachment(base).is_some())
            })
            .collect()
    }

    /// Enables or disables a feature. Enabling a feature that is not yet
    /// attached attaches it with default values; disabling keeps the values.
    pub fn toggle_feature(
        &self,
        entity: &SceneEntity,
        type_id: &str,
        on: bool,
    ) -> Result<SceneEntity> {
        let tag = self.require(type_id)?;
        let mut entity = entity.clone();
        if on {
            if let Some(base) = &tag.extends {
                if entity.attachment(base).is_none() {
                    return Err(RegistryError::MissingBase {
                        ext: tag.identifier.clone(),
                        base: base.clone(),
                    });
                }
            }
        }
        match entity.attachment_mut(type_id) {
            Some(att) => att.enabled = on,
            None if on => entity.attachments.push(Attachment {
                type_id: tag.identifier.clone(),
                values: tag.defaults(),
                enabled: true,
            }),
            None => {}
        }
        Ok(entity)
    }

    /// Adds an attachment with default values, or returns the entity unchanged
    /// if one already exists.
    pub fn attach(&self, entity: &SceneEntity, type_id: &str) -> Result<SceneEntity> {
        if entity.attachment(type_id).is_some() {
            self.require(type_id)?;
            return Ok(entity.clone());
        }
        self.toggle_feature(entity, type_id, true)
    }

    /// Checks an attachment set against the schema (used for scene files).
    pub fn check_entity(&self, entity: &SceneEntity) -> Result<()> {
        for (i, att) in entity.attachments.iter().enumerate() {
            let tag = self.require(&att.type_id)?;
            if entity.attachments[..i]
                .iter()
                .any(|a| a.type_id == att.type_id)
            {
                return Err(RegistryError::InvalidValue {
                    field: att.type_id.clone(),
                    reason: format!("entity {} has two `{}` attachments", entity.id, att.type_id),
                });
            }
            for (k, v) in &att.values {
                let spec = tag.field(k).ok_or_else(|| RegistryError::UnknownField {
                    ty: tag.identifier.clone(),
                    field: k.clone(),
                })?;
                spec.ty.check(k, v)?;
            }
        }
        Ok(())
    }
}

/// In-memory preset collection keyed by `(target_type, preset_name)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetLibrary {
    docs: BTreeMap<(String, String), PresetDoc>,
}

impl PresetLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates through `create_preset` and stores, replacing any same-named preset.
    pub fn create(
        &mut self,
        registry: &Registry,
        type_id: &str,
        name: &str,
        values: BTreeMap<String, Value>,
    ) -> Result<&PresetDoc> {
        let doc = registry.create_preset(type_id, name, values)?;
        Ok(self.insert(doc))
    }

    pub fn insert(&mut self, doc: PresetDoc) -> &PresetDoc {
        let key = (doc.target_type.clone(), doc.preset_name.clone());
        self.docs.insert(key.clone(), doc);
        &self.docs[&key]
    }

    pub fn get(&self, type_id: &str, name: &str) -> Option<&PresetDoc> {
        self.docs.get(&(type_id.to_string(), name.to_string()))
    }

    pub fn remove(&mut self, type_id: &str, name: &str) -> Option<PresetDoc> {
        self.docs.remove(&(type_id.to_string(), name.to_string()))
    }

    pub fn list_presets_for<'a>(
        &'a self,
        type_id: &'a str,
    ) -> impl Iterator<Item = &'a PresetDoc> + 'a {
        self.docs.values().filter(move |d| d.target_type == type_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PresetDoc> {
        self.docs.values()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}
