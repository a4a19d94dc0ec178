//! Canonical JSON interchange format for plans.
//!
//! Canonical form: UTF-8, object keys sorted, no insignificant whitespace,
//! and a top-level `"schema": "planglow/1"` marker. Equal plans always
//! serialize to identical bytes.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{validate_plan, StudyPlan, Violation};

pub const SCHEMA_VERSION: &str = "planglow/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("plan is not valid: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Invalid(Vec<Violation>),
}

impl CodecError {
    pub fn path(&self) -> Option<&str> {
        match self {
            CodecError::Schema { path, .. } => Some(path),
            CodecError::Invalid(v) => v.first().map(|v| v.path.as_str()),
            CodecError::Parse { .. } => None,
        }
    }
}

/// Serializes a valid plan to its canonical document.
pub fn serialize_plan(plan: &StudyPlan) -> Result<String, CodecError> {
    let violations = validate_plan(plan);
    if !violations.is_empty() {
        return Err(CodecError::Invalid(violations));
    }
    Ok(plan_document(plan))
}

/// Canonical document without the validity precondition. Used where an
/// in-progress plan needs to be shown to a model or diffed.
pub fn plan_document(plan: &StudyPlan) -> String {
    let mut value = serde_json::to_value(plan).expect("plan serializes to JSON");
    if let Value::Object(map) = &mut value {
        map.insert("schema".into(), Value::String(SCHEMA_VERSION.into()));
    }
    to_canonical_string(&value)
}

/// Parses a canonical (or any well-formed) plan document.
pub fn deserialize_plan(doc: &str) -> Result<StudyPlan, CodecError> {
    let value: Value = serde_json::from_str(doc).map_err(parse_error)?;
    plan_from_value(value)
}

pub(crate) fn parse_error(e: serde_json::Error) -> CodecError {
    CodecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub(crate) fn plan_from_value(mut value: Value) -> Result<StudyPlan, CodecError> {
    let Value::Object(map) = &mut value else {
        return Err(CodecError::Schema {
            path: "$".into(),
            message: "document must be a JSON object".into(),
        });
    };
    match map.remove("schema") {
        Some(Value::String(s)) if s == SCHEMA_VERSION => {}
        Some(other) => {
            return Err(CodecError::Schema {
                path: "schema".into(),
                message: format!("expected \"{SCHEMA_VERSION}\", found {other}"),
            })
        }
        None => {
            return Err(CodecError::Schema {
                path: "schema".into(),
                message: "missing schema marker".into(),
            })
        }
    }
    let plan = typed_plan(value)?;
    if let Some(first) = validate_plan(&plan).into_iter().next() {
        return Err(CodecError::Schema {
            path: first.path,
            message: first.message,
        });
    }
    Ok(plan)
}

/// Typed deserialization with the failing path reported in document terms.
pub(crate) fn typed_plan(value: Value) -> Result<StudyPlan, CodecError> {
    serde_path_to_error::deserialize::<_, StudyPlan>(value).map_err(|e| {
        let path = e.path().to_string();
        CodecError::Schema {
            path: if path == "." { "$".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

/// Compact JSON with recursively sorted object keys.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    to_canonical_string(&serde_json::to_value(value).expect("value serializes to JSON"))
}

fn to_canonical_string(value: &Value) -> String {
    serde_json::to_string(&sorted(value)).expect("JSON value serializes")
}

fn sorted(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k.clone(), sorted(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
        other => other.clone(),
    }
}
