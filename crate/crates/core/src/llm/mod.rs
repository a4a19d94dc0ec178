//! Text-generation provider abstraction.
//!
//! The engine talks to a [`TextProvider`]; production uses the
//! [`live::ChatCompletionsProvider`] and tests use the fixture-backed
//! [`scripted::ScriptedProvider`]. Sampling parameters always come from one of
//! the two named [`ProfileName`] profiles via [`profile`].

pub mod live;
pub mod scripted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scripted::{
    load_transcript, record_transcript, FixtureEntry, RecordingProvider, ScriptedProvider,
    TranscriptError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    Background,
    Initial,
    Critique,
    Improve,
    ChatAnswer,
    Intent,
}

impl StageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StageTag::Background => "background",
            StageTag::Initial => "initial",
            StageTag::Critique => "critique",
            StageTag::Improve => "improve",
            StageTag::ChatAnswer => "chat_answer",
            StageTag::Intent => "intent",
        }
    }
}

impl fmt::Display for StageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl GenerationParams {
    pub fn is_in_range(&self) -> bool {
        (0.0..=2.0).contains(&self.temperature)
            && (0.0..=1.0).contains(&self.top_p)
            && (-2.0..=2.0).contains(&self.frequency_penalty)
            && (-2.0..=2.0).contains(&self.presence_penalty)
            && self.max_tokens > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProfileName {
    /// Background-level descriptions and other short factual calls.
    Background,
    /// Every stage of plan generation.
    Plan,
}

impl FromStr for ProfileName {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BACKGROUND" => Ok(ProfileName::Background),
            "PLAN" => Ok(ProfileName::Plan),
            other => Err(ProviderError::UnknownProfile(other.to_string())),
        }
    }
}

/// The tuned sampling parameters for a profile.
pub fn profile(name: ProfileName) -> GenerationParams {
    match name {
        ProfileName::Background => GenerationParams {
            temperature: 0.2,
            top_p: 0.6,
            frequency_penalty: 0.2,
            presence_penalty: 0.1,
            max_tokens: 1024,
        },
        ProfileName::Plan => GenerationParams {
            temperature: 0.0,
            top_p: 0.8,
            frequency_penalty: 0.2,
            presence_penalty: 0.1,
            max_tokens: 4096,
        },
    }
}

pub fn profile_by_name(name: &str) -> Result<GenerationParams, ProviderError> {
    name.parse().map(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub request_id: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub params: GenerationParams,
    pub stage_tag: StageTag,
}

impl ProviderRequest {
    pub fn check(&self) -> Result<(), ProviderError> {
        if self.system_prompt.trim().is_empty() || self.user_prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest(
                "prompts must be non-empty".into(),
            ));
        }
        if !self.params.is_in_range() {
            return Err(ProviderError::InvalidRequest(
                "generation params out of range".into(),
            ));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        crate::fingerprint::prompt_fingerprint(&self.user_prompt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Complete,
    Truncated,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("unknown parameter profile `{0}`")]
    UnknownProfile(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no fixture for stage `{stage}` with prompt fingerprint {fingerprint}")]
    MissingFixture {
        stage: StageTag,
        fingerprint: String,
    },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider reply: {0}")]
    Malformed(String),
    #[error(transparent)]
    Egress(#[from] crate::egress::EgressDenied),
}

/// A hosted text-generation endpoint. Implementations must be shareable
/// across threads; each call is independent.
pub trait TextProvider: Send + Sync {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

impl<T: TextProvider + ?Sized> TextProvider for std::sync::Arc<T> {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<T: TextProvider + ?Sized> TextProvider for &T {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_constants_exact() {
        let b = profile(ProfileName::Background);
        assert_eq!(
            (
                b.temperature,
                b.top_p,
                b.frequency_penalty,
                b.presence_penalty
            ),
            (0.2, 0.6, 0.2, 0.1)
        );
        let p = profile(ProfileName::Plan);
        assert_eq!(
            (
                p.temperature,
                p.top_p,
                p.frequency_penalty,
                p.presence_penalty
            ),
            (0.0, 0.8, 0.2, 0.1)
        );
        assert_eq!(b.max_tokens, 1024);
        assert_eq!(p.max_tokens, 4096);
    }

    #[test]
    fn profile_lookup_by_name() {
        assert_eq!(profile_by_name("PLAN").unwrap(), profile(ProfileName::Plan));
        assert_eq!(
            profile_by_name("BACKGROUND").unwrap(),
            profile(ProfileName::Background)
        );
        assert_eq!(
            profile_by_name("FOO").unwrap_err(),
            ProviderError::UnknownProfile("FOO".into())
        );
    }

    #[test]
    fn empty_prompt_rejected() {
        let req = ProviderRequest {
            request_id: "r".into(),
            system_prompt: "sys".into(),
            user_prompt: "  ".into(),
            params: profile(ProfileName::Plan),
            stage_tag: StageTag::Initial,
        };
        assert!(matches!(req.check(), Err(ProviderError::InvalidRequest(_))));
    }
}
