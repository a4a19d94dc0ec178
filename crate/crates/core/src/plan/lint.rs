//! Automated heuristics for the five-question plan quality matrix.
//!
//! | id | question                                                  |
//! |----|-----------------------------------------------------------|
//! | Q1 | clear and specific learning objectives                    |
//! | Q2 | timeline / estimated completion time                      |
//! | Q3 | practical activities backed by available resources        |
//! | Q4 | methods to monitor and measure progress                   |
//! | Q5 | pedagogically sound plan and explanations                 |
//!
//! Q4 can only warn: progress monitoring is detected lexically.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{validate_plan, BloomLevel, LearningObjective, StudyPlan, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Q1,
        Criterion::Q2,
        Criterion::Q3,
        Criterion::Q4,
        Criterion::Q5,
    ];

    pub fn question(self) -> &'static str {
        match self {
            Criterion::Q1 => "clear and specific learning objectives",
            Criterion::Q2 => "timeline or estimated completion time",
            Criterion::Q3 => "practical, well-supported activities using available resources",
            Criterion::Q4 => "methods to monitor and measure progress",
            Criterion::Q5 => "pedagogically sound plan and explanations",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub outcome: Outcome,
    pub findings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanQualityReport {
    pub criteria: BTreeMap<Criterion, CriterionResult>,
    pub score: u8,
}

impl PlanQualityReport {
    pub fn outcome(&self, c: Criterion) -> Outcome {
        self.criteria[&c].outcome
    }

    pub fn has_failure(&self) -> bool {
        self.criteria.values().any(|r| r.outcome == Outcome::Fail)
    }
}

impl fmt::Display for PlanQualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, r) in &self.criteria {
            let tag = match r.outcome {
                Outcome::Pass => "PASS",
                Outcome::Warn => "WARN",
                Outcome::Fail => "FAIL",
            };
            writeln!(f, "{c} {tag:<4} {}", c.question())?;
            for finding in &r.findings {
                writeln!(f, "     - {finding}")?;
            }
        }
        write!(f, "score: {}/5", self.score)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintConfig {
    /// Phrases that count as a progress check when found in rationale or
    /// connection text (case-insensitive substring match).
    pub progress_lexicon: Vec<String>,
}

impl Default for LintConfig {
    fn default() -> Self {
        let words = [
            "quiz",
            "self-assess",
            "self-check",
            "checkpoint",
            "check your understanding",
            "milestone",
            "assessment",
            "reflect",
            "review",
            "track your progress",
            "measure your progress",
        ];
        Self {
            progress_lexicon: words.iter().map(|w| w.to_string()).collect(),
        }
    }
}

/// Scores a structurally valid plan against Q1..Q5. Pure: same plan, same report.
pub fn lint_plan(
    plan: &StudyPlan,
    config: &LintConfig,
) -> Result<PlanQualityReport, Vec<Violation>> {
    let violations = validate_plan(plan);
    if !violations.is_empty() {
        return Err(violations);
    }
    let mut criteria = BTreeMap::new();
    criteria.insert(Criterion::Q1, objectives(plan));
    criteria.insert(Criterion::Q2, timeline(plan));
    criteria.insert(Criterion::Q3, resources(plan));
    criteria.insert(Criterion::Q4, progress(plan, config));
    criteria.insert(Criterion::Q5, explanations(plan));
    let score = criteria
        .values()
        .filter(|r| r.outcome == Outcome::Pass)
        .count() as u8;
    Ok(PlanQualityReport { criteria, score })
}

fn result(outcome_if_findings: Outcome, findings: Vec<String>) -> CriterionResult {
    CriterionResult {
        outcome: if findings.is_empty() {
            Outcome::Pass
        } else {
            outcome_if_findings
        },
        findings,
    }
}

fn all_objectives(plan: &StudyPlan) -> impl Iterator<Item = &LearningObjective> {
    plan.weeks.iter().flat_map(|w| {
        w.objectives
            .iter()
            .chain(w.days.iter().flat_map(|d| d.objectives.iter()))
    })
}

fn objectives(plan: &StudyPlan) -> CriterionResult {
    let mut missing = Vec::new();
    for (w, week) in plan.weeks.iter().enumerate() {
        if week.objectives.is_empty() {
            missing.push(format!("weeks[{w}].objectives is empty"));
        }
        for (d, day) in week.days.iter().enumerate() {
            if day.objectives.is_empty() {
                missing.push(format!("weeks[{w}].days[{d}].objectives is empty"));
            }
        }
    }
    if !missing.is_empty() {
        return result(Outcome::Fail, missing);
    }
    let mut findings = Vec::new();
    if !all_objectives(plan).any(|o| o.bloom_level.is_foundational()) {
        findings.push("no foundational (remember/understand) objective".to_string());
    }
    if !all_objectives(plan).any(|o| !o.bloom_level.is_foundational()) {
        findings.push("no higher-order (apply and above) objective".to_string());
    }
    result(Outcome::Warn, findings)
}

fn timeline(plan: &StudyPlan) -> CriterionResult {
    let mut findings = Vec::new();
    if plan.weeks.len() != plan.profile.duration_weeks as usize {
        findings.push(format!(
            "plan covers {} weeks but the learner asked for {}",
            plan.weeks.len(),
            plan.profile.duration_weeks
        ));
    }
    for (w, week) in plan.weeks.iter().enumerate() {
        for (d, day) in week.days.iter().enumerate() {
            if day.estimated_minutes > plan.profile.daily_minutes {
                findings.push(format!(
                    "weeks[{w}].days[{d}] needs {} min, over the {} min daily budget",
                    day.estimated_minutes, plan.profile.daily_minutes
                ));
            }
        }
    }
    result(Outcome::Fail, findings)
}

fn resources(plan: &StudyPlan) -> CriterionResult {
    let findings = plan
        .resources()
        .filter(|(_, r)| !r.status.is_usable())
        .map(|((w, d, r), res)| {
            format!(
                "{} ({}) is {}",
                super::resource_path(w, d, r),
                res.external_id,
                res.status.as_str()
            )
        })
        .collect();
    result(Outcome::Fail, findings)
}

fn progress(plan: &StudyPlan, config: &LintConfig) -> CriterionResult {
    if all_objectives(plan).any(|o| o.bloom_level >= BloomLevel::Evaluate) {
        return result(Outcome::Warn, vec![]);
    }
    let lexicon: Vec<String> = config
        .progress_lexicon
        .iter()
        .map(|w| w.to_lowercase())
        .collect();
    let texts = plan.weeks.iter().flat_map(|w| {
        [w.content_rationale.as_str(), w.connections.as_str()]
            .into_iter()
            .chain(w.days.iter().map(|d| d.topic_rationale.as_str()))
    });
    let mut found = false;
    for text in texts {
        let lower = text.to_lowercase();
        if lexicon
            .iter()
            .any(|w| !w.is_empty() && lower.contains(w.as_str()))
        {
            found = true;
            break;
        }
    }
    if found {
        result(Outcome::Warn, vec![])
    } else {
        result(
            Outcome::Warn,
            vec!["no evaluate/create objective and no progress-check wording found".into()],
        )
    }
}

fn explanations(plan: &StudyPlan) -> CriterionResult {
    let mut findings = Vec::new();
    for (w, week) in plan.weeks.iter().enumerate() {
        if week.content_rationale.trim().is_empty() {
            findings.push(format!("weeks[{w}].content_rationale is empty"));
        }
        if week.connections.trim().is_empty() {
            findings.push(format!("weeks[{w}].connections is empty"));
        }
        for (d, day) in week.days.iter().enumerate() {
            if day.topic_rationale.trim().is_empty() {
                findings.push(format!("weeks[{w}].days[{d}].topic_rationale is empty"));
            }
        }
    }
    result(Outcome::Fail, findings)
}
