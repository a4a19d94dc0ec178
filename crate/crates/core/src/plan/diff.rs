use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DayPlan, LearnerProfile, LearningObjective, StudyPlan, WeekPlan};

/// One changed leaf. `before`/`after` are `null` for added/removed elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub path: String,
    pub before: Value,
    pub after: Value,
}

/// Field-by-field comparison of two plans, ignoring `version` and timestamps.
///
/// Leaves are scalar fields, whole objectives' fields, and whole resources:
/// swapping a video yields one record at the resource path. A list element
/// present on only one side is a single record at that element's path.
pub fn diff_plans(a: &StudyPlan, b: &StudyPlan) -> Vec<ChangeRecord> {
    let mut d = Differ::default();
    d.leaf("plan_id", &a.plan_id, &b.plan_id);
    d.leaf("days_per_week", &a.days_per_week, &b.days_per_week);
    d.profile(&a.profile, &b.profile);
    d.list("weeks", &a.weeks, &b.weeks, |d, p, x, y| d.week(p, x, y));
    d.out
}

#[derive(Default)]
struct Differ {
    out: Vec<ChangeRecord>,
}

impl Differ {
    fn leaf<T: Serialize + PartialEq>(&mut self, path: &str, a: &T, b: &T) {
        if a != b {
            self.out.push(ChangeRecord {
                path: path.to_string(),
                before: to_value(a),
                after: to_value(b),
            });
        }
    }

    fn list<T: Serialize>(
        &mut self,
        path: &str,
        a: &[T],
        b: &[T],
        mut each: impl FnMut(&mut Self, &str, &T, &T),
    ) {
        for i in 0..a.len().max(b.len()) {
            let p = format!("{path}[{i}]");
            match (a.get(i), b.get(i)) {
                (Some(x), Some(y)) => each(self, &p, x, y),
                (x, y) => self.out.push(ChangeRecord {
                    path: p,
                    before: x.map(to_value).unwrap_or(Value::Null),
                    after: y.map(to_value).unwrap_or(Value::Null),
                }),
            }
        }
    }

    fn profile(&mut self, a: &LearnerProfile, b: &LearnerProfile) {
        self.leaf("profile.subject", &a.subject, &b.subject);
        self.leaf("profile.goal", &a.goal, &b.goal);
        self.leaf(
            "profile.background_level",
            &a.background_level,
            &b.background_level,
        );
        self.leaf(
            "profile.duration_weeks",
            &a.duration_weeks,
            &b.duration_weeks,
        );
        self.leaf("profile.daily_minutes", &a.daily_minutes, &b.daily_minutes);
        self.leaf(
            "profile.preferred_media",
            &a.preferred_media,
            &b.preferred_media,
        );
    }

    fn objectives(&mut self, path: &str, a: &[LearningObjective], b: &[LearningObjective]) {
        self.list(path, a, b, |d, p, x, y| {
            d.leaf(&format!("{p}.text"), &x.text, &y.text);
            d.leaf(&format!("{p}.bloom_level"), &x.bloom_level, &y.bloom_level);
        });
    }

    fn week(&mut self, p: &str, a: &WeekPlan, b: &WeekPlan) {
        self.leaf(&format!("{p}.index"), &a.index, &b.index);
        self.leaf(&format!("{p}.title"), &a.title, &b.title);
        self.objectives(&format!("{p}.objectives"), &a.objectives, &b.objectives);
        self.leaf(
            &format!("{p}.content_rationale"),
            &a.content_rationale,
            &b.content_rationale,
        );
        self.leaf(&format!("{p}.connections"), &a.connections, &b.connections);
        self.list(&format!("{p}.days"), &a.days, &b.days, |d, p, x, y| {
            d.day(p, x, y)
        });
    }

    fn day(&mut self, p: &str, a: &DayPlan, b: &DayPlan) {
        self.leaf(&format!("{p}.index"), &a.index, &b.index);
        self.leaf(&format!("{p}.topic"), &a.topic, &b.topic);
        self.leaf(
            &format!("{p}.topic_rationale"),
            &a.topic_rationale,
            &b.topic_rationale,
        );
        self.objectives(&format!("{p}.objectives"), &a.objectives, &b.objectives);
        self.list(
            &format!("{p}.resources"),
            &a.resources,
            &b.resources,
            |d, p, x, y| d.leaf(p, x, y),
        );
        self.leaf(
            &format!("{p}.estimated_minutes"),
            &a.estimated_minutes,
            &b.estimated_minutes,
        );
    }
}

fn to_value<T: Serialize + ?Sized>(v: &T) -> Value {
    serde_json::to_value(v).expect("plan fields serialize")
}
