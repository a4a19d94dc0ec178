//! Three-stage plan generation: initial draft, critique, improvement.
//!
//! Each stage consumes the previous stage's output and every call uses the
//! PLAN parameter profile. The initial and improve stages must return a
//! plan document; when one cannot be used the stage is re-prompted once
//! with the list of problems, and the repair exchange is kept on that
//! stage's [`StageRecord`].

pub mod background;
pub mod parse;
pub mod prompts;

use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::fingerprint::fingerprint;
use crate::llm::{
    profile, FinishReason, ProfileName, ProviderError, ProviderRequest, ProviderResponse, StageTag,
    TextProvider,
};
use crate::plan::codec::canonical_json;
use crate::plan::{
    BackgroundLevel, LearnerProfile, PlanId, StudyPlan, Violation, WeekPlan, DEFAULT_DAYS_PER_WEEK,
};
use crate::template::{TemplateError, TemplateSet};

pub use background::{parse_level_descriptions, LevelDescriptionSet};
pub use parse::{
    extract_document, parse_plan_response, PlanParseError, PlanStamp, RepairDescriptor,
};
pub use prompts::{build_stage_prompt, Prior, RenderedPrompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStage {
    Initial,
    Critique,
    Improve,
}

impl PlanStage {
    pub const ORDER: [PlanStage; 3] = [PlanStage::Initial, PlanStage::Critique, PlanStage::Improve];

    pub fn tag(self) -> StageTag {
        match self {
            PlanStage::Initial => StageTag::Initial,
            PlanStage::Critique => StageTag::Critique,
            PlanStage::Improve => StageTag::Improve,
        }
    }
}

impl fmt::Display for PlanStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag().as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("learner profile is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidProfile(Vec<Violation>),
    #[error("subject must be non-empty")]
    EmptySubject,
    #[error("stage `{0}` needs the output of the previous stage")]
    MissingPrior(PlanStage),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("provider failed during `{stage}`: {source}")]
    Provider {
        stage: StageTag,
        source: ProviderError,
    },
    #[error("provider reported an error finish during `{0}`")]
    ProviderErrorFinish(StageTag),
    #[error("`{stage}` output unusable after repair: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Unparseable {
        stage: StageTag,
        violations: Vec<Violation>,
    },
    #[error("level descriptions incomplete after repair; missing: {}", .missing.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(", "))]
    IncompleteLevels { missing: Vec<BackgroundLevel> },
}

impl PipelineError {
    pub fn stage(&self) -> Option<StageTag> {
        match self {
            PipelineError::Provider { stage, .. }
            | PipelineError::Unparseable { stage, .. }
            | PipelineError::ProviderErrorFinish(stage) => Some(*stage),
            PipelineError::MissingPrior(s) => Some(s.tag()),
            _ => None,
        }
    }
}

/// A re-prompt issued after an unusable stage answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub violations: Vec<Violation>,
    pub request: ProviderRequest,
    pub response: ProviderResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: PlanStage,
    pub request: ProviderRequest,
    pub response: ProviderResponse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairRecord>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceOutcome {
    Plan { plan_id: PlanId, version: u64 },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub trace_id: String,
    pub template_version: String,
    pub stages: Vec<StageRecord>,
    pub repairs: u32,
    pub outcome: TraceOutcome,
}

impl GenerationTrace {
    pub fn stage_tags(&self) -> Vec<StageTag> {
        self.stages.iter().map(|s| s.request.stage_tag).collect()
    }

    /// Total provider calls made, repairs included.
    pub fn call_count(&self) -> usize {
        self.stages.len() + self.repairs as usize
    }

    /// The trace with timestamps and latencies zeroed, for comparisons.
    pub fn without_timing(&self) -> GenerationTrace {
        let mut t = self.clone();
        let zero = DateTime::<Utc>::UNIX_EPOCH;
        for s in &mut t.stages {
            s.started_at = zero;
            s.ended_at = zero;
            s.response.latency_ms = 0;
            if let Some(r) = &mut s.repair {
                r.response.latency_ms = 0;
            }
        }
        t
    }
}

/// A failed run together with whatever the trace recorded before failing.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct GenerationFailure {
    pub error: PipelineError,
    pub trace: GenerationTrace,
}

/// Engine-managed metadata for one generation run.
#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    /// Defaults to [`plan_id_for`]`(profile, 0)`.
    pub plan_id: Option<PlanId>,
    /// Defaults to 1.
    pub version: Option<u64>,
    /// Kept from the original plan on revisions; defaults to now.
    pub created_at: Option<DateTime<Utc>>,
    /// Revision context rendered into the initial and improve prompts.
    pub context: Option<String>,
}

/// Deterministic plan id: fingerprint of the canonical profile and a nonce.
pub fn plan_id_for(profile: &LearnerProfile, nonce: u64) -> PlanId {
    PlanId(format!(
        "plan-{}",
        fingerprint(&format!("{}#{nonce}", canonical_json(profile)))
    ))
}

pub struct Pipeline {
    templates: TemplateSet,
    clock: Arc<dyn Clock>,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::new(TemplateSet::builtin(), Arc::new(SystemClock))
    }
}

impl Pipeline {
    pub fn new(templates: TemplateSet, clock: Arc<dyn Clock>) -> Self {
        Self { templates, clock }
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn build_stage_prompt(
        &self,
        stage: PlanStage,
        profile: &LearnerProfile,
        prior: Option<&Prior>,
    ) -> Result<RenderedPrompt, PipelineError> {
        build_stage_prompt(&self.templates, stage, profile, prior, None)
    }

    /// Runs initial, critique and improve for a fresh plan (version 1).
    pub fn generate_plan(
        &self,
        profile: &LearnerProfile,
        provider: &dyn TextProvider,
    ) -> Result<(StudyPlan, GenerationTrace), GenerationFailure> {
        self.generate(profile, provider, GenerateOptions::default())
    }

    pub fn generate(
        &self,
        profile: &LearnerProfile,
        provider: &dyn TextProvider,
        options: GenerateOptions,
    ) -> Result<(StudyPlan, GenerationTrace), GenerationFailure> {
        let mut run = Run {
            pipeline: self,
            provider,
            trace: GenerationTrace {
                trace_id: String::new(),
                template_version: self.templates.version().to_string(),
                stages: Vec::with_capacity(3),
                repairs: 0,
                outcome: TraceOutcome::Error {
                    message: "not started".into(),
                },
            },
        };
        match run.execute(profile, options) {
            Ok(plan) => {
                run.trace.outcome = TraceOutcome::Plan {
                    plan_id: plan.plan_id.clone(),
                    version: plan.version,
                };
                Ok((plan, run.trace))
            }
            Err(error) => {
                run.trace.outcome = TraceOutcome::Error {
                    message: error.to_string(),
                };
                Err(GenerationFailure {
                    error,
                    trace: run.trace,
                })
            }
        }
    }
}

struct Run<'a> {
    pipeline: &'a Pipeline,
    provider: &'a dyn TextProvider,
    trace: GenerationTrace,
}

impl Run<'_> {
    fn execute(
        &mut self,
        profile: &LearnerProfile,
        options: GenerateOptions,
    ) -> Result<StudyPlan, PipelineError> {
        let violations = profile.violations();
        if !violations.is_empty() {
            return Err(PipelineError::InvalidProfile(violations));
        }
        let templates = &self.pipeline.templates;
        let context = options.context.as_deref();
        let now = self.pipeline.clock.now();
        let stamp = PlanStamp {
            plan_id: options
                .plan_id
                .clone()
                .unwrap_or_else(|| plan_id_for(profile, 0)),
            version: options.version.unwrap_or(1),
            profile: profile.clone(),
            days_per_week: DEFAULT_DAYS_PER_WEEK,
            created_at: options.created_at.unwrap_or(now),
            updated_at: now,
        };

        let initial = build_stage_prompt(templates, PlanStage::Initial, profile, None, context)?;
        self.trace.trace_id = format!(
            "trace-{}",
            crate::fingerprint::prompt_fingerprint(&initial.user)
        );
        let draft = self.plan_stage(PlanStage::Initial, initial, &stamp)?;
        let draft_text = weeks_document(&draft.weeks);

        let mut prior = Prior {
            draft: draft_text,
            critique: None,
        };
        let critique_prompt =
            build_stage_prompt(templates, PlanStage::Critique, profile, Some(&prior), None)?;
        let critique = self.text_stage(PlanStage::Critique, critique_prompt)?;

        prior.critique = Some(critique.trim().to_string());
        let improve = build_stage_prompt(
            templates,
            PlanStage::Improve,
            profile,
            Some(&prior),
            context,
        )?;
        self.plan_stage(PlanStage::Improve, improve, &stamp)
    }

    fn request(&self, stage: PlanStage, prompt: RenderedPrompt, suffix: &str) -> ProviderRequest {
        ProviderRequest {
            request_id: format!("{}-{}{suffix}", self.trace.trace_id, stage),
            system_prompt: prompt.system,
            user_prompt: prompt.user,
            params: profile(ProfileName::Plan),
            stage_tag: stage.tag(),
        }
    }

    fn text_stage(
        &mut self,
        stage: PlanStage,
        prompt: RenderedPrompt,
    ) -> Result<String, PipelineError> {
        let request = self.request(stage, prompt, "");
        let started_at = self.pipeline.clock.now();
        let response = call(self.provider, &request)?;
        let text = response.text.clone();
        self.trace.stages.push(StageRecord {
            stage,
            request,
            response,
            repair: None,
            started_at,
            ended_at: self.pipeline.clock.now(),
        });
        Ok(text)
    }

    fn plan_stage(
        &mut self,
        stage: PlanStage,
        prompt: RenderedPrompt,
        stamp: &PlanStamp,
    ) -> Result<StudyPlan, PipelineError> {
        let request = self.request(stage, prompt, "");
        let started_at = self.pipeline.clock.now();
        let response = call(self.provider, &request)?;
        let first = parse_plan_response(&response.text, stamp);
        let mut record = StageRecord {
            stage,
            request,
            response,
            repair: None,
            started_at,
            ended_at: started_at,
        };
        let result = match first {
            Ok(plan) => Ok(plan),
            Err(problem) => {
                let descriptor = problem.descriptor();
                let mut repair_req = record.request.clone();
                repair_req.request_id.push_str("-repair");
                repair_req.user_prompt.push_str(&descriptor.prompt_suffix());
                self.trace.repairs += 1;
                match call(self.provider, &repair_req) {
                    Ok(repair_resp) => {
                        let second = parse_plan_response(&repair_resp.text, stamp);
                        record.repair = Some(RepairRecord {
                            violations: descriptor.violations,
                            request: repair_req,
                            response: repair_resp,
                        });
                        second.map_err(|p| PipelineError::Unparseable {
                            stage: stage.tag(),
                            violations: p.descriptor().violations,
                        })
                    }
                    Err(e) => Err(e),
                }
            }
        };
        record.ended_at = self.pipeline.clock.now();
        self.trace.stages.push(record);
        result
    }
}

/// Sends one request; error finishes become pipeline errors with stage context.
pub(crate) fn call(
    provider: &dyn TextProvider,
    request: &ProviderRequest,
) -> Result<ProviderResponse, PipelineError> {
    let response = provider
        .complete(request)
        .map_err(|source| PipelineError::Provider {
            stage: request.stage_tag,
            source,
        })?;
    if response.finish_reason == FinishReason::Error {
        return Err(PipelineError::ProviderErrorFinish(request.stage_tag));
    }
    Ok(response)
}

/// Canonical `{"weeks": [...]}` document, the form drafts are shown in.
pub fn weeks_document(weeks: &[WeekPlan]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        weeks: &'a [WeekPlan],
    }
    canonical_json(&Doc { weeks })
}
