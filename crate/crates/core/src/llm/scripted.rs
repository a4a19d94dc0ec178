//! Record/replay for provider sessions.
//!
//! A transcript is a JSON array of `{stage_tag, prompt_fingerprint,
//! response_text}` entries. [`RecordingProvider`] captures one from any
//! provider; [`load_transcript`] turns it back into a [`ScriptedProvider`]
//! that answers only what was recorded.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    FinishReason, ProviderError, ProviderRequest, ProviderResponse, StageTag, TextProvider,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub stage_tag: StageTag,
    pub prompt_fingerprint: String,
    pub response_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("transcript parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate fixture key ({stage}, {fingerprint})")]
    DuplicateKey {
        stage: StageTag,
        fingerprint: String,
    },
    #[error("conflicting responses recorded for ({stage}, {fingerprint})")]
    Conflict {
        stage: StageTag,
        fingerprint: String,
    },
}

/// Read-only fixture table keyed by `(stage_tag, prompt fingerprint)`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    entries: HashMap<(StageTag, String), String>,
}

impl ScriptedProvider {
    pub fn from_entries(entries: Vec<FixtureEntry>) -> Result<Self, TranscriptError> {
        let mut map = HashMap::with_capacity(entries.len());
        for e in entries {
            let key = (e.stage_tag, e.prompt_fingerprint);
            if map.contains_key(&key) {
                return Err(TranscriptError::DuplicateKey {
                    stage: key.0,
                    fingerprint: key.1,
                });
            }
            map.insert(key, e.response_text);
        }
        Ok(Self { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops one entry; used to inject fixture gaps.
    pub fn without(mut self, stage: StageTag, fingerprint: &str) -> Self {
        self.entries.remove(&(stage, fingerprint.to_string()));
        self
    }

    pub fn without_stage(mut self, stage: StageTag) -> Self {
        self.entries.retain(|(s, _), _| *s != stage);
        self
    }
}

impl TextProvider for ScriptedProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        request.check()?;
        let fingerprint = request.fingerprint();
        match self.entries.get(&(request.stage_tag, fingerprint.clone())) {
            Some(text) => Ok(ProviderResponse {
                text: text.clone(),
                finish_reason: FinishReason::Complete,
                latency_ms: 0,
            }),
            None => Err(ProviderError::MissingFixture {
                stage: request.stage_tag,
                fingerprint,
            }),
        }
    }
}

/// Serializes entries as a transcript document (pretty JSON array).
pub fn record_transcript(entries: &[FixtureEntry]) -> String {
    let mut s = serde_json::to_string_pretty(entries).expect("fixture entries serialize");
    s.push('\n');
    s
}

pub fn load_transcript(text: &str) -> Result<ScriptedProvider, TranscriptError> {
    let entries: Vec<FixtureEntry> =
        serde_json::from_str(text).map_err(|e| TranscriptError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    ScriptedProvider::from_entries(entries)
}

/// Wraps a provider and captures every successful exchange in call order.
pub struct RecordingProvider<P> {
    inner: P,
    log: Mutex<Vec<FixtureEntry>>,
}

impl<P: TextProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn entries(&self) -> Vec<FixtureEntry> {
        self.log.lock().expect("recording log poisoned").clone()
    }

    /// Entries with identical repeats collapsed. A key recorded with two
    /// different responses cannot be replayed and is an error.
    pub fn transcript(&self) -> Result<Vec<FixtureEntry>, TranscriptError> {
        let mut out: Vec<FixtureEntry> = Vec::new();
        for e in self.entries() {
            match out.iter().find(|o| {
                o.stage_tag == e.stage_tag && o.prompt_fingerprint == e.prompt_fingerprint
            }) {
                Some(prev) if prev.response_text == e.response_text => {}
                Some(_) => {
                    return Err(TranscriptError::Conflict {
                        stage: e.stage_tag,
                        fingerprint: e.prompt_fingerprint,
                    })
                }
                None => out.push(e),
            }
        }
        Ok(out)
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: TextProvider> TextProvider for RecordingProvider<P> {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let response = self.inner.complete(request)?;
        if response.finish_reason != FinishReason::Error {
            self.log
                .lock()
                .expect("recording log poisoned")
                .push(FixtureEntry {
                    stage_tag: request.stage_tag,
                    prompt_fingerprint: request.fingerprint(),
                    response_text: response.text.clone(),
                });
        }
        Ok(response)
    }
}
