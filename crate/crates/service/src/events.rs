//! Append-only interaction-event log, one JSON object per line.
//!
//! Every occurrence counts: expanding the same week twice logs two
//! `viewed_week_explanation` events. Timestamps are clamped so they never
//! go backwards within a session.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    ViewedLevelDescriptions,
    SubmittedForm,
    InlineEdit,
    ChatMessage,
    ViewedWeekExplanation,
    ViewedDayExplanation,
    OpenedAlternatives,
    SelectedAlternative,
}

impl EventType {
    pub const ALL: [EventType; 8] = [
        EventType::ViewedLevelDescriptions,
        EventType::SubmittedForm,
        EventType::InlineEdit,
        EventType::ChatMessage,
        EventType::ViewedWeekExplanation,
        EventType::ViewedDayExplanation,
        EventType::OpenedAlternatives,
        EventType::SelectedAlternative,
    ];

    /// Events that only the client can observe; the server records the rest
    /// itself when it handles the matching request.
    pub fn is_client_reported(self) -> bool {
        matches!(
            self,
            EventType::ViewedWeekExplanation | EventType::ViewedDayExplanation
        )
    }
}

pub const MAX_PAYLOAD_ENTRIES: usize = 16;
pub const MAX_PAYLOAD_KEY_LEN: usize = 64;
pub const MAX_PAYLOAD_TEXT_LEN: usize = 256;

/// Small map of scalar values.
pub type Payload = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub session_id: String,
    pub event_type: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_id: Option<String>,
    #[serde(default)]
    pub payload: Payload,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum EventError {
    #[error("event log I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line} is corrupt: {message}")]
    Corrupt { line: usize, message: String },
    #[error("invalid payload: {0}")]
    Payload(String),
}

pub fn check_payload(payload: &Payload) -> Result<(), EventError> {
    if payload.len() > MAX_PAYLOAD_ENTRIES {
        return Err(EventError::Payload(format!(
            "at most {MAX_PAYLOAD_ENTRIES} entries allowed"
        )));
    }
    for (k, v) in payload {
        if k.is_empty() || k.len() > MAX_PAYLOAD_KEY_LEN {
            return Err(EventError::Payload(format!(
                "key `{k}` must be 1..={MAX_PAYLOAD_KEY_LEN} bytes"
            )));
        }
        match v {
            Value::Array(_) | Value::Object(_) => {
                return Err(EventError::Payload(format!(
                    "value of `{k}` must be a scalar"
                )));
            }
            Value::String(s) if s.len() > MAX_PAYLOAD_TEXT_LEN => {
                return Err(EventError::Payload(format!(
                    "value of `{k}` exceeds {MAX_PAYLOAD_TEXT_LEN} bytes"
                )));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Per-type counts for one session plus two derived totals.
///
/// `plans_created` counts submitted forms. `edits_applied` counts inline
/// edits, chat messages routed as edits, and selected alternatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub viewed_level_descriptions: u64,
    pub submitted_form: u64,
    pub inline_edit: u64,
    pub chat_message: u64,
    pub viewed_week_explanation: u64,
    pub viewed_day_explanation: u64,
    pub opened_alternatives: u64,
    pub selected_alternative: u64,
    pub plans_created: u64,
    pub edits_applied: u64,
}

impl SessionSummary {
    pub fn fold<'a>(events: impl IntoIterator<Item = &'a InteractionEvent>) -> Self {
        let mut s = SessionSummary::default();
        for e in events {
            *s.count_mut(e.event_type) += 1;
            match e.event_type {
                EventType::SubmittedForm => s.plans_created += 1,
                EventType::InlineEdit | EventType::SelectedAlternative => s.edits_applied += 1,
                EventType::ChatMessage
                    if e.payload.get("intent").and_then(Value::as_str) == Some("edit") =>
                {
                    s.edits_applied += 1
                }
                _ => {}
            }
        }
        s
    }

    pub fn count(&self, t: EventType) -> u64 {
        let mut copy = *self;
        *copy.count_mut(t)
    }

    fn count_mut(&mut self, t: EventType) -> &mut u64 {
        match t {
            EventType::ViewedLevelDescriptions => &mut self.viewed_level_descriptions,
            EventType::SubmittedForm => &mut self.submitted_form,
            EventType::InlineEdit => &mut self.inline_edit,
            EventType::ChatMessage => &mut self.chat_message,
            EventType::ViewedWeekExplanation => &mut self.viewed_week_explanation,
            EventType::ViewedDayExplanation => &mut self.viewed_day_explanation,
            EventType::OpenedAlternatives => &mut self.opened_alternatives,
            EventType::SelectedAlternative => &mut self.selected_alternative,
        }
    }
}

struct LogState {
    file: File,
    last_at: HashMap<String, DateTime<Utc>>,
}

pub struct EventLog {
    path: PathBuf,
    state: Mutex<LogState>,
}

impl EventLog {
    pub fn open(path: &Path) -> Result<Self, EventError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut last_at = HashMap::new();
        for e in read_events(path)? {
            let slot = last_at.entry(e.session_id).or_insert(e.at);
            *slot = (*slot).max(e.at);
        }
        Ok(Self {
            path: path.to_path_buf(),
            state: Mutex::new(LogState { file, last_at }),
        })
    }

    /// Appends one event and returns it as stored.
    pub fn append(&self, mut event: InteractionEvent) -> Result<InteractionEvent, EventError> {
        check_payload(&event.payload)?;
        let mut state = self.state.lock().expect("event log lock");
        if let Some(last) = state.last_at.get(&event.session_id) {
            event.at = event.at.max(*last);
        }
        let mut line = serde_json::to_string(&event).expect("event serializes");
        line.push('\n');
        state.file.write_all(line.as_bytes())?;
        state.file.flush()?;
        state.last_at.insert(event.session_id.clone(), event.at);
        Ok(event)
    }

    pub fn all(&self) -> Result<Vec<InteractionEvent>, EventError> {
        let _guard = self.state.lock().expect("event log lock");
        read_events(&self.path)
    }

    pub fn session(&self, session_id: &str) -> Result<Vec<InteractionEvent>, EventError> {
        Ok(self
            .all()?
            .into_iter()
            .filter(|e| e.session_id == session_id)
            .collect())
    }

    pub fn has_session(&self, session_id: &str) -> bool {
        self.state
            .lock()
            .expect("event log lock")
            .last_at
            .contains_key(session_id)
    }
}

pub fn read_events(path: &Path) -> Result<Vec<InteractionEvent>, EventError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| EventError::Corrupt {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(event);
    }
    Ok(out)
}
