use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{RegistryError, Result};
use crate::math::{Quat, Vec3};

/// Semantic type of a preset field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticType {
    Bool,
    Int,
    /// Real number; the unit lives on the field.
    Real,
    Text,
    Enum(Vec<String>),
    Vec3,
    /// Unit quaternion `[w, x, y, z]`.
    Quat,
    /// Name of another preset.
    PresetRef,
}

impl SemanticType {
    fn describe(&self) -> String {
        match self {
            SemanticType::Bool => "a boolean".into(),
            SemanticType::Int => "an integer".into(),
            SemanticType::Real => "a real number".into(),
            SemanticType::Text => "a string".into(),
            SemanticType::Enum(v) => format!("one of {v:?}"),
            SemanticType::Vec3 => "a 3-vector".into(),
            SemanticType::Quat => "a unit quaternion".into(),
            SemanticType::PresetRef => "a preset name".into(),
        }
    }

    /// Converts `v` to this type's canonical representation. Integers widen
    /// to reals; nothing else converts.
    pub fn coerce(&self, field: &str, v: Value) -> Result<Value> {
        let v = match (self, v) {
            (SemanticType::Real, Value::Int(i)) => Value::Real(i as f64),
            (_, v) => v,
        };
        self.check(field, &v)?;
        Ok(v)
    }

    pub fn check(&self, field: &str, v: &Value) -> Result<()> {
        let mismatch = || RegistryError::TypeMismatch {
            field: field.to_string(),
            expected: self.describe(),
            found: v.kind(),
        };
        let invalid = |reason: &str| RegistryError::InvalidValue {
            field: field.to_string(),
            reason: reason.to_owned(),
        };
        match (self, v) {
            (SemanticType::Bool, Value::Bool(_)) | (SemanticType::Int, Value::Int(_)) => Ok(()),
            (SemanticType::Real, Value::Real(x)) => {
                if x.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("real values must be finite"))
                }
            }
            (SemanticType::Text, Value::Text(_)) => Ok(()),
            (SemanticType::Enum(variants), Value::Text(s)) => {
                if variants.iter().any(|x| x == s) {
                    Ok(())
                } else {
                    Err(invalid(&format!("`{s}` is not one of {variants:?}")))
                }
            }
            (SemanticType::PresetRef, Value::Text(s)) => {
                if s.is_empty() || super::is_preset_name(s) {
                    Ok(())
                } else {
                    Err(invalid(&format!("`{s}` is not a preset name")))
                }
            }
            (SemanticType::Vec3, Value::Vec3(p)) => {
                if p.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("vector components must be finite"))
                }
            }
            (SemanticType::Quat, Value::Quat(q)) => {
                if q.is_finite() && (q.norm() - 1.0).abs() <= 1e-9 {
                    Ok(())
                } else {
                    Err(invalid("quaternion must have unit norm"))
                }
            }
            _ => Err(mismatch()),
        }
    }
}

/// A field value. Serialized as plain JSON: booleans, integers, reals,
/// strings, `[x, y, z]` and `[w, x, y, z]`. Enumerations and preset
/// references are stored as text and validated against the schema.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
    Vec3(Vec3),
    Quat(Quat),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Text(_) => "string",
            Value::Vec3(_) => "3-vector",
            Value::Quat(_) => "quaternion",
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Reals, and integers widened to reals.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_vec3(&self) -> Option<Vec3> {
        match self {
            Value::Vec3(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_quat(&self) -> Option<Quat> {
        match self {
            Value::Quat(q) => Some(*q),
            _ => None,
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<Vec3> for Value {
    fn from(v: Vec3) -> Self {
        Value::Vec3(v)
    }
}

impl From<Quat> for Value {
    fn from(q: Quat) -> Self {
        Value::Quat(q)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Real(x) => s.serialize_f64(*x),
            Value::Text(t) => s.serialize_str(t),
            Value::Vec3(v) => {
                let mut seq = s.serialize_seq(Some(3))?;
                for c in v.to_array() {
                    seq.serialize_element(&c)?;
                }
                seq.end()
            }
            Value::Quat(q) => {
                let mut seq = s.serialize_seq(Some(4))?;
                for c in [q.w, q.x, q.y, q.z] {
                    seq.serialize_element(&c)?;
                }
                seq.end()
            }
        }
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a boolean, number, string, or array of 3 or 4 numbers")
    }

    fn visit_bool<E: de::Error>(self, v: bool) -> core::result::Result<Value, E> {
        Ok(Value::Bool(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> core::result::Result<Value, E> {
        Ok(Value::Int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> core::result::Result<Value, E> {
        i64::try_from(v)
            .map(Value::Int)
            .map_err(|_| E::custom("integer out of range"))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> core::result::Result<Value, E> {
        Ok(Value::Real(v))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> core::result::Result<Value, E> {
        Ok(Value::Text(v.to_string()))
    }

    fn visit_string<E: de::Error>(self, v: String) -> core::result::Result<Value, E> {
        Ok(Value::Text(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> core::result::Result<Value, A::Error> {
        let mut c = [0.0f64; 4];
        let mut n = 0;
        while let Some(x) = seq.next_element::<f64>()? {
            if n == 4 {
                return Err(de::Error::invalid_length(5, &self));
            }
            c[n] = x;
            n += 1;
        }
        match n {
            3 => Ok(Value::Vec3(Vec3::new(c[0], c[1], c[2]))),
            4 => Ok(Value::Quat(Quat::new(c[0], c[1], c[2], c[3]))),
            _ => Err(de::Error::invalid_length(n, &self)),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Value, D::Error> {
        d.deserialize_any(ValueVisitor)
    }
}
