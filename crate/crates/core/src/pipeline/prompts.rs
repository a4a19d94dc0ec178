use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PipelineError, PlanStage};
use crate::plan::codec::canonical_json;
use crate::plan::{LearnerProfile, DEFAULT_DAYS_PER_WEEK};
use crate::template::TemplateSet;

/// Output of earlier stages fed into a later one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prior {
    pub draft: String,
    pub critique: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

pub(crate) fn profile_vars(profile: &LearnerProfile) -> BTreeMap<&'static str, String> {
    let mut vars = BTreeMap::new();
    vars.insert("subject", profile.subject.trim().to_string());
    vars.insert("goal", profile.goal.trim().to_string());
    vars.insert("level", profile.background_level.as_str().to_string());
    vars.insert("level_label", profile.background_level.label().to_string());
    vars.insert("weeks", profile.duration_weeks.to_string());
    vars.insert("daily_minutes", profile.daily_minutes.to_string());
    vars.insert("days_per_week", DEFAULT_DAYS_PER_WEEK.to_string());
    vars.insert("profile_json", canonical_json(profile));
    vars
}

fn context_block(context: Option<&str>) -> String {
    match context.map(str::trim).filter(|c| !c.is_empty()) {
        Some(c) => format!(
            "\nThis is a revision of an existing plan. Take the following into account:\n{c}\n"
        ),
        None => String::new(),
    }
}

/// Renders the system and user prompts for one plan stage.
///
/// `critique` needs the draft; `improve` needs the draft and the critique.
/// `context` carries revision material (the current plan and the requested
/// change) into the initial and improve stages.
pub fn build_stage_prompt(
    templates: &TemplateSet,
    stage: PlanStage,
    profile: &LearnerProfile,
    prior: Option<&Prior>,
    context: Option<&str>,
) -> Result<RenderedPrompt, PipelineError> {
    let mut vars = profile_vars(profile);
    vars.insert("context", context_block(context));
    match stage {
        PlanStage::Initial => {}
        PlanStage::Critique => {
            let prior = prior.ok_or(PipelineError::MissingPrior(stage))?;
            vars.insert("draft", prior.draft.clone());
        }
        PlanStage::Improve => {
            let prior = prior.ok_or(PipelineError::MissingPrior(stage))?;
            let critique = prior
                .critique
                .as_ref()
                .ok_or(PipelineError::MissingPrior(stage))?;
            vars.insert("draft", prior.draft.clone());
            vars.insert("critique", critique.clone());
        }
    }
    let (system, user) = templates.stage(stage.tag())?.render(&vars)?;
    Ok(RenderedPrompt { system, user })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    #[test]
    fn initial_prompt_carries_profile_and_directives() {
        let profile = testkit::graphql_profile();
        let p = build_stage_prompt(
            &TemplateSet::builtin(),
            PlanStage::Initial,
            &profile,
            None,
            None,
        )
        .unwrap();
        for needle in [
            "GraphQL",
            "deploy a website",
            "novice",
            "2 week(s)",
            "60 minutes",
            "week-by-week structure",
        ] {
            assert!(p.user.contains(needle), "missing {needle:?}");
        }
        for needle in [
            "planning (what to aim for",
            "monitoring",
            "evaluating",
            "increase in complexity",
            "Bloom's Taxonomy",
            "Zone of Proximal Development",
            "schema theory",
            "\"weeks\"",
        ] {
            assert!(p.user.contains(needle), "missing directive {needle:?}");
        }
        assert!(p.system.contains("metacognitive"));
        assert!(!p.user.contains("revision of an existing plan"));
    }

    #[test]
    fn critique_requires_draft() {
        let profile = testkit::graphql_profile();
        let err = build_stage_prompt(
            &TemplateSet::builtin(),
            PlanStage::Critique,
            &profile,
            None,
            None,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PipelineError::MissingPrior(PlanStage::Critique)
        ));
        let draft_only = Prior {
            draft: "d".into(),
            critique: None,
        };
        let err = build_stage_prompt(
            &TemplateSet::builtin(),
            PlanStage::Improve,
            &profile,
            Some(&draft_only),
            None,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PipelineError::MissingPrior(PlanStage::Improve)
        ));
    }

    #[test]
    fn critique_applies_andragogy_rubric() {
        let profile = testkit::graphql_profile();
        let prior = Prior {
            draft: "{\"weeks\":[]}".into(),
            critique: None,
        };
        let p = build_stage_prompt(
            &TemplateSet::builtin(),
            PlanStage::Critique,
            &profile,
            Some(&prior),
            None,
        )
        .unwrap();
        assert!(p.system.contains("Five Assumptions of Adult Learners"));
        assert!(p.user.contains("clear, relevant and well organized"));
        assert!(p.user.contains("{\"weeks\":[]}"));
    }

    #[test]
    fn improve_embeds_both_priors_verbatim() {
        let profile = testkit::graphql_profile();
        let draft = "{\"weeks\": [{\"index\": 1, \"title\": \"Foundations  {{not a var}}\"}]}";
        let critique = "1. Week 1 lacks a self-check.\n2. Day 3 runs over budget.";
        let prior = Prior {
            draft: draft.into(),
            critique: Some(critique.into()),
        };
        let p = build_stage_prompt(
            &TemplateSet::builtin(),
            PlanStage::Improve,
            &profile,
            Some(&prior),
            None,
        )
        .unwrap();
        assert!(p.user.contains(draft));
        assert!(p.user.contains(critique));
    }

    #[test]
    fn context_is_rendered_when_present() {
        let profile = testkit::graphql_profile();
        let p = build_stage_prompt(
            &TemplateSet::builtin(),
            PlanStage::Initial,
            &profile,
            None,
            Some("Requested change: duration_weeks = 3"),
        )
        .unwrap();
        assert!(p.user.contains("revision of an existing plan"));
        assert!(p.user.contains("duration_weeks = 3"));
    }
}
