use std::fmt;

use serde::{Deserialize, Serialize};
use url::Url;

use super::{DayPlan, LearningObjective, Resource, ResourceStatus, StudyPlan, WeekPlan};

/// A broken structural rule, addressed by a dotted path into the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    fn prefixed(mut self, prefix: &str) -> Self {
        self.path = format!("{prefix}.{}", self.path);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every structural invariant of a plan. An empty result means valid.
///
/// Each rule reports at most one violation, at the path of the field it
/// constrains, so a single bad field yields a single violation.
pub fn validate_plan(plan: &StudyPlan) -> Vec<Violation> {
    let mut out = Vec::new();

    if plan.plan_id.as_str().trim().is_empty() {
        out.push(Violation::new("plan_id", "must be non-empty"));
    }
    if plan.version < 1 {
        out.push(Violation::new("version", "must be >= 1"));
    }
    if plan.days_per_week < 1 {
        out.push(Violation::new("days_per_week", "must be >= 1"));
    }
    out.extend(
        plan.profile
            .violations()
            .into_iter()
            .map(|v| v.prefixed("profile")),
    );

    if plan.weeks.len() != plan.profile.duration_weeks as usize {
        out.push(Violation::new(
            "weeks",
            format!(
                "expected {} weeks for profile.duration_weeks, found {}",
                plan.profile.duration_weeks,
                plan.weeks.len()
            ),
        ));
    }

    for (w, week) in plan.weeks.iter().enumerate() {
        check_week(
            &format!("weeks[{w}]"),
            w,
            week,
            plan.days_per_week,
            &mut out,
        );
    }
    out
}

fn check_week(
    path: &str,
    pos: usize,
    week: &WeekPlan,
    days_per_week: u32,
    out: &mut Vec<Violation>,
) {
    if week.index as usize != pos + 1 {
        out.push(Violation::new(
            format!("{path}.index"),
            format!("expected week index {}, found {}", pos + 1, week.index),
        ));
    }
    check_objectives(&format!("{path}.objectives"), &week.objectives, out);
    if week.content_rationale.trim().is_empty() {
        out.push(Violation::new(
            format!("{path}.content_rationale"),
            "must be non-empty",
        ));
    }
    if week.connections.trim().is_empty() {
        out.push(Violation::new(
            format!("{path}.connections"),
            "must be non-empty",
        ));
    }
    if week.days.len() != days_per_week as usize {
        out.push(Violation::new(
            format!("{path}.days"),
            format!("expected {days_per_week} days, found {}", week.days.len()),
        ));
    }
    for (d, day) in week.days.iter().enumerate() {
        check_day(&format!("{path}.days[{d}]"), d, day, out);
    }
}

fn check_day(path: &str, pos: usize, day: &DayPlan, out: &mut Vec<Violation>) {
    if day.index as usize != pos + 1 {
        out.push(Violation::new(
            format!("{path}.index"),
            format!("expected day index {}, found {}", pos + 1, day.index),
        ));
    }
    check_objectives(&format!("{path}.objectives"), &day.objectives, out);
    for (r, res) in day.resources.iter().enumerate() {
        check_resource(&format!("{path}.resources[{r}]"), res, out);
    }
    let expected = day.computed_minutes();
    if day.estimated_minutes != expected {
        out.push(Violation::new(
            format!("{path}.estimated_minutes"),
            format!(
                "must equal resource durations rounded up ({expected}), found {}",
                day.estimated_minutes
            ),
        ));
    }
}

fn check_objectives(path: &str, objectives: &[LearningObjective], out: &mut Vec<Violation>) {
    if objectives.is_empty() {
        out.push(Violation::new(path, "at least one objective required"));
    }
    for (i, obj) in objectives.iter().enumerate() {
        if obj.text.trim().is_empty() {
            out.push(Violation::new(
                format!("{path}[{i}].text"),
                "must be non-empty",
            ));
        }
    }
}

fn check_resource(path: &str, res: &Resource, out: &mut Vec<Violation>) {
    if res.external_id.trim().is_empty() {
        out.push(Violation::new(
            format!("{path}.external_id"),
            "must be non-empty",
        ));
    }
    if !is_absolute_url(&res.url) {
        out.push(Violation::new(
            format!("{path}.url"),
            format!("must be an absolute URL, found {:?}", res.url),
        ));
    }
    if res.status == ResourceStatus::Replaced && res.provenance.is_none() {
        out.push(Violation::new(
            format!("{path}.provenance"),
            "required when status is replaced",
        ));
    }
}

fn is_absolute_url(s: &str) -> bool {
    Url::parse(s).map(|u| u.has_host()).unwrap_or(false)
}
