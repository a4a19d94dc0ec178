//! Markdown rendering of a plan for reading outside the web client.

use std::fmt::Write;

use super::{LearningObjective, Resource, ResourceStatus, StudyPlan};

/// Renders headings per week and day, objectives, rationales and resource
/// links with validity markers. The first line is an HTML comment carrying
/// the plan id and version.
pub fn render_markdown(plan: &StudyPlan) -> String {
    let mut out = String::new();
    let p = &plan.profile;
    let _ = writeln!(
        out,
        "<!-- planglow plan_id={} version={} -->",
        plan.plan_id, plan.version
    );
    let _ = writeln!(out, "# Study plan: {}", p.subject);
    let _ = writeln!(out);
    let _ = writeln!(out, "- **Goal:** {}", p.goal);
    let _ = writeln!(
        out,
        "- **Background level:** {}",
        p.background_level.label()
    );
    let _ = writeln!(
        out,
        "- **Schedule:** {} week(s) x {} days, {} min/day",
        p.duration_weeks, plan.days_per_week, p.daily_minutes
    );

    for week in &plan.weeks {
        let _ = writeln!(out);
        let _ = writeln!(out, "## Week {}: {}", week.index, week.title);
        let _ = writeln!(out);
        objectives(&mut out, &week.objectives);
        let _ = writeln!(out, "**Why this content:** {}", week.content_rationale);
        let _ = writeln!(out);
        let _ = writeln!(out, "**Connections:** {}", week.connections);

        for day in &week.days {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "### Day {}: {} ({} min)",
                day.index, day.topic, day.estimated_minutes
            );
            let _ = writeln!(out);
            let _ = writeln!(out, "**Why this topic:** {}", day.topic_rationale);
            let _ = writeln!(out);
            objectives(&mut out, &day.objectives);
            if !day.resources.is_empty() {
                let _ = writeln!(out, "**Resources:**");
                let _ = writeln!(out);
                for r in &day.resources {
                    resource(&mut out, r);
                }
            }
        }
    }
    out
}

fn objectives(out: &mut String, objectives: &[LearningObjective]) {
    let _ = writeln!(out, "**Objectives:**");
    let _ = writeln!(out);
    for o in objectives {
        let _ = writeln!(out, "- _{}_: {}", o.bloom_level, o.text);
    }
    let _ = writeln!(out);
}

fn resource(out: &mut String, r: &Resource) {
    let marker = match r.status {
        ResourceStatus::Valid => "[valid]",
        ResourceStatus::Invalid => "[INVALID]",
        ResourceStatus::Replaced => "[replaced]",
    };
    let mins = r.duration_seconds.div_ceil(60);
    let _ = write!(
        out,
        "- {marker} [{}]({}) ({mins} min, {} views, {} likes)",
        r.title, r.url, r.views, r.likes
    );
    if let Some(orig) = &r.provenance {
        let _ = write!(out, " replaces `{orig}`");
    }
    let _ = writeln!(out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    #[test]
    fn renders_headings_and_markers() {
        let mut plan = testkit::sample_plan(2);
        plan.weeks[0].days[1].resources[0].status = ResourceStatus::Invalid;
        let md = render_markdown(&plan);
        assert!(md.starts_with(&format!(
            "<!-- planglow plan_id={} version=1 -->",
            plan.plan_id
        )));
        assert_eq!(md.matches("\n## Week ").count(), 2);
        assert_eq!(md.matches("\n### Day ").count(), 10);
        assert_eq!(md.matches("[INVALID]").count(), 1);
        assert_eq!(md.matches("[valid]").count(), 9);
    }

    #[test]
    fn different_versions_render_differently() {
        let a = testkit::sample_plan(1);
        let mut b = a.clone();
        b.version = 2;
        assert_ne!(render_markdown(&a), render_markdown(&b));
    }
}
