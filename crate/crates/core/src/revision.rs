//! Plan revision: inline profile edits and the chat channel.
//!
//! Every edit re-runs the full three-stage pipeline with the current plan
//! as context, keeps the plan id and creation time, re-validates resources
//! and produces exactly `version + 1`. Nothing is returned on failure, so
//! callers keep the previous version untouched.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{profile, ProfileName, ProviderRequest, StageTag, TextProvider};
use crate::pipeline::{
    call, weeks_document, GenerateOptions, GenerationFailure, GenerationTrace, Pipeline,
    PipelineError,
};
use crate::plan::codec::plan_document;
use crate::plan::{
    diff_plans, validate_plan, BackgroundLevel, ChangeRecord, LearnerProfile, StudyPlan, Violation,
};
use crate::resources::{resolve_resources, Catalog, ResourceError};

/// Words that mark a chat message as a request to change the plan.
pub const EDIT_LEXICON: [&str; 7] = [
    "change", "replace", "make it", "add", "remove", "shorten", "extend",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "field", content = "new_value", rename_all = "snake_case")]
pub enum InlineEdit {
    Subject(String),
    Goal(String),
    BackgroundLevel(BackgroundLevel),
    DurationWeeks(u32),
    DailyMinutes(u32),
}

impl InlineEdit {
    pub fn field(&self) -> &'static str {
        match self {
            InlineEdit::Subject(_) => "subject",
            InlineEdit::Goal(_) => "goal",
            InlineEdit::BackgroundLevel(_) => "background_level",
            InlineEdit::DurationWeeks(_) => "duration_weeks",
            InlineEdit::DailyMinutes(_) => "daily_minutes",
        }
    }

    pub fn value_text(&self) -> String {
        match self {
            InlineEdit::Subject(s) | InlineEdit::Goal(s) => s.clone(),
            InlineEdit::BackgroundLevel(l) => l.as_str().to_string(),
            InlineEdit::DurationWeeks(n) | InlineEdit::DailyMinutes(n) => n.to_string(),
        }
    }

    /// The profile with this edit applied, or the violations of the edited
    /// field.
    pub fn apply_to(&self, profile: &LearnerProfile) -> Result<LearnerProfile, Vec<Violation>> {
        let mut p = profile.clone();
        match self {
            InlineEdit::Subject(s) => p.subject = s.clone(),
            InlineEdit::Goal(s) => p.goal = s.clone(),
            InlineEdit::BackgroundLevel(l) => p.background_level = *l,
            InlineEdit::DurationWeeks(n) => p.duration_weeks = *n,
            InlineEdit::DailyMinutes(n) => p.daily_minutes = *n,
        }
        let bad: Vec<_> = p
            .violations()
            .into_iter()
            .filter(|v| v.path == self.field())
            .collect();
        if bad.is_empty() {
            Ok(p)
        } else {
            Err(bad)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Edit,
    Question,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatRole {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: ChatRole,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<Intent>,
    pub linked_plan_version: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RevisionError {
    #[error("invalid edit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidEdit(Vec<Violation>),
    #[error("plan is not valid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidPlan(Vec<Violation>),
    #[error("message must be non-empty")]
    EmptyMessage,
    #[error(transparent)]
    Generation(#[from] Box<GenerationFailure>),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

impl RevisionError {
    pub fn stage(&self) -> Option<StageTag> {
        match self {
            RevisionError::Generation(f) => f.error.stage(),
            RevisionError::Pipeline(e) => e.stage(),
            _ => None,
        }
    }
}

/// Result of one chat turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatOutcome {
    pub intent: Intent,
    pub reply: String,
    /// Present for edit turns only.
    pub plan: Option<StudyPlan>,
    pub trace: Option<GenerationTrace>,
    pub changes: Vec<ChangeRecord>,
}

/// Whole-word match against [`EDIT_LEXICON`].
pub fn looks_like_edit(message: &str) -> bool {
    let words: Vec<String> = message
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let padded = format!(" {} ", words.join(" "));
    EDIT_LEXICON
        .iter()
        .any(|w| padded.contains(&format!(" {w} ")))
}

/// Reads a forced-choice label; `None` when the answer is anything else.
pub fn parse_intent(answer: &str) -> Option<Intent> {
    let word = answer
        .trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    match word.as_str() {
        "edit" => Some(Intent::Edit),
        "question" => Some(Intent::Question),
        _ => None,
    }
}

fn check_message(message: &str) -> Result<&str, RevisionError> {
    let m = message.trim();
    if m.is_empty() {
        Err(RevisionError::EmptyMessage)
    } else {
        Ok(m)
    }
}

fn check_plan(plan: &StudyPlan) -> Result<(), RevisionError> {
    let violations = validate_plan(plan);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(RevisionError::InvalidPlan(violations))
    }
}

fn single_call_request(
    pipeline: &Pipeline,
    stage: StageTag,
    vars: BTreeMap<&'static str, String>,
) -> Result<ProviderRequest, PipelineError> {
    let (system, user) = pipeline.templates().stage(stage)?.render(&vars)?;
    Ok(ProviderRequest {
        request_id: format!("{stage}-{}", crate::fingerprint::prompt_fingerprint(&user)),
        system_prompt: system,
        user_prompt: user,
        params: profile(ProfileName::Background),
        stage_tag: stage,
    })
}

impl Pipeline {
    /// Applies a profile field edit by regenerating the plan.
    pub fn apply_inline_edit(
        &self,
        plan: &StudyPlan,
        edit: &InlineEdit,
        provider: &dyn TextProvider,
        catalog: &dyn Catalog,
    ) -> Result<(StudyPlan, GenerationTrace), RevisionError> {
        check_plan(plan)?;
        let profile = edit
            .apply_to(&plan.profile)
            .map_err(RevisionError::InvalidEdit)?;
        let context = format!(
            "Requested change: {} = {}\nCurrent plan:\n{}",
            edit.field(),
            edit.value_text(),
            weeks_document(&plan.weeks)
        );
        self.regenerate(plan, &profile, context, provider, catalog)
    }

    fn regenerate(
        &self,
        plan: &StudyPlan,
        profile: &LearnerProfile,
        context: String,
        provider: &dyn TextProvider,
        catalog: &dyn Catalog,
    ) -> Result<(StudyPlan, GenerationTrace), RevisionError> {
        let options = GenerateOptions {
            plan_id: Some(plan.plan_id.clone()),
            version: Some(plan.version + 1),
            created_at: Some(plan.created_at),
            context: Some(context),
        };
        let (fresh, trace) = self
            .generate(profile, provider, options)
            .map_err(Box::new)?;
        let (resolved, _, _) = resolve_resources(&fresh, catalog)?;
        Ok((resolved, trace))
    }

    /// Labels a chat message. Falls back to the edit lexicon when the
    /// provider fails or answers with anything but a label.
    pub fn classify_intent(
        &self,
        message: &str,
        provider: &dyn TextProvider,
    ) -> Result<Intent, RevisionError> {
        let message = check_message(message)?;
        let mut vars = BTreeMap::new();
        vars.insert("message", message.to_string());
        let request = single_call_request(self, StageTag::Intent, vars)?;
        let answered = call(provider, &request)
            .ok()
            .and_then(|r| parse_intent(&r.text));
        Ok(answered.unwrap_or_else(|| {
            tracing::debug!("intent answer unusable, using lexicon");
            if looks_like_edit(message) {
                Intent::Edit
            } else {
                Intent::Question
            }
        }))
    }

    /// Routes a chat message: questions are answered from the plan, edits
    /// regenerate it with the message as context.
    pub fn handle_chat(
        &self,
        plan: &StudyPlan,
        message: &str,
        provider: &dyn TextProvider,
        catalog: &dyn Catalog,
    ) -> Result<ChatOutcome, RevisionError> {
        let message = check_message(message)?;
        check_plan(plan)?;
        match self.classify_intent(message, provider)? {
            Intent::Question => {
                let mut vars = BTreeMap::new();
                vars.insert("subject", plan.profile.subject.trim().to_string());
                vars.insert("plan_document", plan_document(plan));
                vars.insert("message", message.to_string());
                let request = single_call_request(self, StageTag::ChatAnswer, vars)?;
                let response = call(provider, &request)?;
                Ok(ChatOutcome {
                    intent: Intent::Question,
                    reply: response.text.trim().to_string(),
                    plan: None,
                    trace: None,
                    changes: Vec::new(),
                })
            }
            Intent::Edit => {
                let context = format!(
                    "Requested change (from chat): {message}\nCurrent plan:\n{}",
                    weeks_document(&plan.weeks)
                );
                let (updated, trace) =
                    self.regenerate(plan, &plan.profile, context, provider, catalog)?;
                let changes = diff_plans(plan, &updated);
                Ok(ChatOutcome {
                    intent: Intent::Edit,
                    reply: summarize_changes(updated.version, &changes),
                    plan: Some(updated),
                    trace: Some(trace),
                    changes,
                })
            }
        }
    }
}

pub fn summarize_changes(version: u64, changes: &[ChangeRecord]) -> String {
    if changes.is_empty() {
        return format!("Regenerated the plan as version {version}; its content did not change.");
    }
    let paths: Vec<&str> = changes.iter().map(|c| c.path.as_str()).collect();
    format!(
        "Updated the plan to version {version}. Changed {} field(s): {}",
        changes.len(),
        paths.join(", ")
    )
}
