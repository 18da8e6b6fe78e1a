//! Canonical JSON documents.
//!
//! Canonical output has every object's keys sorted, integers only, two-space
//! indentation and a trailing newline, so identical inputs give identical
//! bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::chain::LimitSeriesSkeleton;
use crate::error::DocumentError;

pub const SCHEMA_VERSION: u64 = 1;

/// A skeleton file. `metadata` sits outside the canonical body and is ignored
/// when reading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonDocument {
    pub schema: u64,
    pub skeleton: LimitSeriesSkeleton,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BTreeMap<String, String>>,
}

impl SkeletonDocument {
    pub fn new(skeleton: LimitSeriesSkeleton) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            skeleton,
            metadata: None,
        }
    }
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::with_capacity(entries.len());
            for (k, v) in entries {
                out.insert(k, canonicalize(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = canonicalize(serde_json::to_value(value)?);
    let mut out = serde_json::to_string_pretty(&v)?;
    out.push('\n');
    Ok(out)
}

/// Single-line canonical form, for streamed output.
pub fn to_canonical_line<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    serde_json::to_string(&canonicalize(serde_json::to_value(value)?))
}

pub fn skeleton_to_json(s: &LimitSeriesSkeleton) -> Result<String, serde_json::Error> {
    to_canonical_json(&SkeletonDocument::new(s.clone()))
}

/// Parses a skeleton document, checking its schema version.
pub fn skeleton_from_json(text: &str) -> Result<LimitSeriesSkeleton, DocumentError> {
    let doc: Value = serde_json::from_str(text)?;
    let found = doc.get("schema").and_then(Value::as_u64).unwrap_or(0);
    if found != SCHEMA_VERSION {
        return Err(DocumentError::Schema {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let doc: SkeletonDocument = serde_json::from_value(doc)?;
    Ok(doc.skeleton)
}
