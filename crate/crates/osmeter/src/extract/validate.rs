//! Response validation: fence stripping, single-JSON-object parsing, and
//! per-template schema checks with bounded boolean coercion.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::extract::templates::{FieldKind, Template};

/// Typed fragment parsed from one provider response.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureFragment {
    pub bools: BTreeMap<String, bool>,
    pub quotes: BTreeMap<String, String>,
    pub links: BTreeMap<String, Vec<String>>,
    pub warnings: Vec<String>,
}

/// Strip markdown code fences when present, parse exactly one JSON object,
/// and check the template schema. String "true"/"false" booleans are coerced
/// with a warning; anything else is a schema error (retryable).
pub fn validate_response(raw: &str, template: &Template) -> Result<FeatureFragment> {
    let stripped = strip_fences(raw);
    let value: Value = serde_json::from_str(stripped.trim())
        .map_err(|e| Error::Schema(format!("{}: not one JSON object: {e}", template.id)))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Schema(format!("{}: response is not an object", template.id)))?;

    let mut fragment = FeatureFragment::default();
    for field in &template.fields {
        match obj.get(field.name) {
            None | Some(Value::Null) => {
                if field.required {
                    return Err(Error::Schema(format!(
                        "{}: missing required key {}",
                        template.id, field.name
                    )));
                }
            }
            Some(v) => ingest_value(field.name, field.kind, v, template, &mut fragment)?,
        }
    }
    for key in obj.keys() {
        if key != "title" && template.field(key).is_none() {
            fragment.warnings.push(format!("unknown key ignored: {key}"));
        }
    }
    Ok(fragment)
}

fn ingest_value(
    name: &str,
    kind: FieldKind,
    v: &Value,
    template: &Template,
    fragment: &mut FeatureFragment,
) -> Result<()> {
    match kind {
        FieldKind::Bool => {
            let b = match v {
                Value::Bool(b) => *b,
                Value::String(s) => match s.as_str() {
                    "true" | "True" => {
                        fragment
                            .warnings
                            .push(format!("{name}: boolean given as string, coerced"));
                        true
                    }
                    "false" | "False" => {
                        fragment
                            .warnings
                            .push(format!("{name}: boolean given as string, coerced"));
                        false
                    }
                    other => {
                        return Err(Error::Schema(format!(
                            "{}: {name} is not a boolean: {other:?}",
                            template.id
                        )))
                    }
                },
                other => {
                    return Err(Error::Schema(format!(
                        "{}: {name} is not a boolean: {other}",
                        template.id
                    )))
                }
            };
            fragment.bools.insert(name.to_string(), b);
        }
        FieldKind::Quote => {
            let s = v.as_str().ok_or_else(|| {
                Error::Schema(format!("{}: {name} is not a string", template.id))
            })?;
            if !s.is_empty() {
                fragment.quotes.insert(name.to_string(), s.to_string());
            }
        }
        FieldKind::LinkList => {
            let arr = v.as_array().ok_or_else(|| {
                Error::Schema(format!("{}: {name} is not an array", template.id))
            })?;
            let mut list = Vec::with_capacity(arr.len());
            for item in arr {
                list.push(
                    item.as_str()
                        .ok_or_else(|| {
                            Error::Schema(format!(
                                "{}: {name} contains a non-string entry",
                                template.id
                            ))
                        })?
                        .to_string(),
                );
            }
            fragment.links.insert(name.to_string(), list);
        }
    }
    Ok(())
}

fn strip_fences(raw: &str) -> &str {
    let trimmed = raw.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    // drop an optional language tag on the fence line
    let rest = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    rest.strip_suffix("```").map(str::trim).unwrap_or(rest)
}
