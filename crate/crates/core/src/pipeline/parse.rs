//! Turning free-form model output into a validated [`StudyPlan`].

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::plan::codec::{typed_plan, CodecError};
use crate::plan::{validate_plan, LearnerProfile, PlanId, ResourceStatus, StudyPlan, Violation};

/// Engine-managed fields written over whatever the model emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStamp {
    pub plan_id: PlanId,
    pub version: u64,
    pub profile: LearnerProfile,
    pub days_per_week: u32,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

/// What to tell the model when its plan could not be used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairDescriptor {
    pub violations: Vec<Violation>,
}

impl RepairDescriptor {
    pub fn prompt_suffix(&self) -> String {
        let mut s =
            String::from("\n\nYour previous answer could not be used because of these problems:\n");
        for v in &self.violations {
            s.push_str(&format!("- {}: {}\n", v.path, v.message));
        }
        s.push_str(
            "Return the complete corrected plan as a single JSON object in the required format.",
        );
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("no plan document found in the response")]
    NoPayload,
    #[error("plan document has {} problem(s), first: {}", .0.violations.len(), .0.violations.first().map(ToString::to_string).unwrap_or_default())]
    Repairable(RepairDescriptor),
}

impl PlanParseError {
    pub fn descriptor(&self) -> RepairDescriptor {
        match self {
            PlanParseError::NoPayload => RepairDescriptor {
                violations: vec![Violation::new(
                    "$",
                    "no JSON object with a \"weeks\" array was found",
                )],
            },
            PlanParseError::Repairable(d) => d.clone(),
        }
    }
}

/// Extracts the first plan document from `text`, stamps engine-managed
/// fields, and validates it.
///
/// Model-supplied resource status and provenance are discarded (resources
/// stay unverified until the catalog confirms them) and each day's
/// `estimated_minutes` is recomputed from resource durations.
pub fn parse_plan_response(text: &str, stamp: &PlanStamp) -> Result<StudyPlan, PlanParseError> {
    let payload = extract_document(text, "weeks").ok_or(PlanParseError::NoPayload)?;
    let weeks = payload.get("weeks").cloned().unwrap_or(Value::Null);

    let mut doc = Map::new();
    doc.insert("weeks".into(), prune_weeks(weeks));
    doc.insert("plan_id".into(), Value::String(stamp.plan_id.0.clone()));
    doc.insert("version".into(), Value::from(stamp.version));
    doc.insert(
        "profile".into(),
        serde_json::to_value(&stamp.profile).expect("profile serializes"),
    );
    doc.insert("days_per_week".into(), Value::from(stamp.days_per_week));
    doc.insert(
        "created_at".into(),
        serde_json::to_value(stamp.created_at).expect("timestamp serializes"),
    );
    doc.insert(
        "updated_at".into(),
        serde_json::to_value(stamp.updated_at).expect("timestamp serializes"),
    );

    let mut plan = typed_plan(Value::Object(doc)).map_err(|e| match e {
        CodecError::Schema { path, message } => PlanParseError::Repairable(RepairDescriptor {
            violations: vec![Violation::new(path, message)],
        }),
        other => PlanParseError::Repairable(RepairDescriptor {
            violations: vec![Violation::new("$", other.to_string())],
        }),
    })?;

    for week in &mut plan.weeks {
        for day in &mut week.days {
            for res in &mut day.resources {
                res.status = ResourceStatus::Invalid;
                res.provenance = None;
            }
            day.recompute_minutes();
        }
    }

    let violations = validate_plan(&plan);
    if violations.is_empty() {
        Ok(plan)
    } else {
        Err(PlanParseError::Repairable(RepairDescriptor { violations }))
    }
}

/// First JSON object in `text` that has `required_key`, looking inside
/// fenced code blocks first and then at every `{` in the raw text.
pub fn extract_document(text: &str, required_key: &str) -> Option<Map<String, Value>> {
    let wanted = |v: Value| match v {
        Value::Object(m) if m.contains_key(required_key) => Some(m),
        _ => None,
    };
    for block in fenced_blocks(text) {
        if let Some(m) = first_value(block).and_then(wanted) {
            return Some(m);
        }
    }
    text.match_indices('{')
        .find_map(|(i, _)| first_value(&text[i..]).and_then(wanted))
}

fn first_value(s: &str) -> Option<Value> {
    let s = s.trim_start();
    if !s.starts_with('{') {
        return None;
    }
    serde_json::Deserializer::from_str(s)
        .into_iter::<Value>()
        .next()
        .and_then(Result::ok)
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // Skip the info string (e.g. "json") up to the end of the line.
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    out
}

const WEEK_KEYS: &[&str] = &[
    "index",
    "title",
    "objectives",
    "content_rationale",
    "connections",
    "days",
];
const DAY_KEYS: &[&str] = &[
    "index",
    "topic",
    "topic_rationale",
    "objectives",
    "resources",
    "estimated_minutes",
];
const OBJECTIVE_KEYS: &[&str] = &["text", "bloom_level"];
const RESOURCE_KEYS: &[&str] = &[
    "kind",
    "external_id",
    "url",
    "title",
    "duration_seconds",
    "views",
    "likes",
    "description",
    "status",
    "provenance",
];

/// Drops keys the schema does not know; models like to add commentary fields.
fn prune_weeks(weeks: Value) -> Value {
    map_array(weeks, |week| {
        let mut week = keep(week, WEEK_KEYS);
        if let Value::Object(m) = &mut week {
            prune_field(m, "objectives", |o| keep(o, OBJECTIVE_KEYS));
            prune_field(m, "days", |day| {
                let mut day = keep(day, DAY_KEYS);
                if let Value::Object(dm) = &mut day {
                    prune_field(dm, "objectives", |o| keep(o, OBJECTIVE_KEYS));
                    prune_field(dm, "resources", |r| keep(r, RESOURCE_KEYS));
                }
                day
            });
        }
        week
    })
}

fn prune_field(m: &mut Map<String, Value>, key: &str, f: impl Fn(Value) -> Value) {
    if let Some(v) = m.remove(key) {
        m.insert(key.to_string(), map_array(v, f));
    }
}

fn map_array(v: Value, f: impl Fn(Value) -> Value) -> Value {
    match v {
        Value::Array(items) => Value::Array(items.into_iter().map(f).collect()),
        other => other,
    }
}

fn keep(v: Value, keys: &[&str]) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.into_iter()
                .filter(|(k, _)| keys.contains(&k.as_str()))
                .collect(),
        ),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::serialize_plan;
    use crate::testkit;

    fn stamp_for(plan: &StudyPlan) -> PlanStamp {
        PlanStamp {
            plan_id: plan.plan_id.clone(),
            version: plan.version,
            profile: plan.profile.clone(),
            days_per_week: plan.days_per_week,
            created_at: plan.created_at,
            updated_at: plan.updated_at,
        }
    }

    /// The sample plan as the parser will return it: resources unverified.
    fn unverified(mut plan: StudyPlan) -> StudyPlan {
        for w in &mut plan.weeks {
            for d in &mut w.days {
                for r in &mut d.resources {
                    r.status = ResourceStatus::Invalid;
                    r.provenance = None;
                }
            }
        }
        plan
    }

    #[test]
    fn fenced_document_parses() {
        let plan = testkit::sample_plan(2);
        let text = format!("```json\n{}\n```", serialize_plan(&plan).unwrap());
        let parsed = parse_plan_response(&text, &stamp_for(&plan)).unwrap();
        assert_eq!(parsed, unverified(plan));
    }

    #[test]
    fn prose_wrapped_document_matches_unwrapped() {
        let plan = testkit::sample_plan(2);
        let doc = serialize_plan(&plan).unwrap();
        let stamp = stamp_for(&plan);
        let bare = parse_plan_response(&doc, &stamp).unwrap();
        let wrapped = format!(
            "Here is your plan {{as requested}}.\n\n{doc}\n\nLet me know if you'd like changes {{or more weeks}}."
        );
        assert_eq!(parse_plan_response(&wrapped, &stamp).unwrap(), bare);
    }

    #[test]
    fn missing_connections_yields_repair_path() {
        let plan = testkit::sample_plan(2);
        let mut value: Value = serde_json::from_str(&serialize_plan(&plan).unwrap()).unwrap();
        value["weeks"][1]
            .as_object_mut()
            .unwrap()
            .remove("connections");
        let err = parse_plan_response(&value.to_string(), &stamp_for(&plan)).unwrap_err();
        let d = err.descriptor();
        assert_eq!(d.violations.len(), 1, "{d:?}");
        assert_eq!(d.violations[0].path, "weeks[1].connections");
        assert!(d.prompt_suffix().contains("weeks[1].connections"));
    }

    #[test]
    fn no_payload() {
        let plan = testkit::sample_plan(1);
        let err = parse_plan_response("I cannot help with that.", &stamp_for(&plan)).unwrap_err();
        assert_eq!(err, PlanParseError::NoPayload);
        let err =
            parse_plan_response("{\"summary\": \"no weeks\"}", &stamp_for(&plan)).unwrap_err();
        assert_eq!(err, PlanParseError::NoPayload);
    }

    #[test]
    fn model_status_is_not_trusted_and_minutes_recomputed() {
        let plan = testkit::sample_plan(1);
        let mut value: Value = serde_json::from_str(&serialize_plan(&plan).unwrap()).unwrap();
        value["weeks"][0]["days"][0]["estimated_minutes"] = Value::from(999);
        value["weeks"][0]["days"][0]["resources"][0]["status"] = Value::from("replaced");
        value["weeks"][0]["days"][0]["resources"][0]["provenance"] = Value::from("xyz");
        value["weeks"][0]["days"][0]["notes"] = Value::from("extra commentary");
        let parsed = parse_plan_response(&value.to_string(), &stamp_for(&plan)).unwrap();
        let day = &parsed.weeks[0].days[0];
        assert_eq!(
            day.estimated_minutes,
            plan.weeks[0].days[0].estimated_minutes
        );
        assert_eq!(day.resources[0].status, ResourceStatus::Invalid);
        assert_eq!(day.resources[0].provenance, None);
    }

    #[test]
    fn stamp_overrides_model_metadata() {
        let plan = testkit::sample_plan(1);
        let mut value: Value = serde_json::from_str(&serialize_plan(&plan).unwrap()).unwrap();
        value["plan_id"] = Value::from("model-made-this-up");
        value["version"] = Value::from(42);
        let parsed = parse_plan_response(&value.to_string(), &stamp_for(&plan)).unwrap();
        assert_eq!(parsed.plan_id, plan.plan_id);
        assert_eq!(parsed.version, plan.version);
    }

    #[test]
    fn truncated_json_is_no_payload() {
        let plan = testkit::sample_plan(1);
        let doc = serialize_plan(&plan).unwrap();
        let err = parse_plan_response(&doc[..doc.len() / 2], &stamp_for(&plan)).unwrap_err();
        assert_eq!(err, PlanParseError::NoPayload);
    }
}
