//! Chat-completions adapter for a hosted model endpoint.
//!
//! Configuration comes from `PLANGLOW_LLM_API_KEY`, `PLANGLOW_LLM_BASE_URL`
//! and optionally `PLANGLOW_LLM_MODEL`. Transport-level failures (connection
//! errors, HTTP 429, HTTP 5xx) are retried; well-formed replies are never
//! retried, even if their text turns out to be unusable.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{FinishReason, ProviderError, ProviderRequest, ProviderResponse, TextProvider};
use crate::http::{
    HttpReply, HttpRequest, HttpTransport, Method, ReqwestTransport, TransportError,
};

pub const API_KEY_ENV: &str = "PLANGLOW_LLM_API_KEY";
pub const BASE_URL_ENV: &str = "PLANGLOW_LLM_BASE_URL";
pub const MODEL_ENV: &str = "PLANGLOW_LLM_MODEL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Sleep before each retry; its length is the retry count.
    pub delays: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            delays: vec![
                Duration::from_millis(500),
                Duration::from_secs(2),
                Duration::from_secs(8),
            ],
        }
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct ChatCompletionsProvider {
    base_url: String,
    api_key: String,
    model: String,
    transport: Arc<dyn HttpTransport>,
    retry: RetryPolicy,
    sleep: Sleeper,
}

impl ChatCompletionsProvider {
    pub fn new(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
    ) -> Result<Self, ProviderError> {
        let transport = ReqwestTransport::new(Duration::from_secs(180))
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self::with_transport(
            base_url,
            api_key,
            model,
            Arc::new(transport),
        ))
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| ProviderError::Auth(format!("{API_KEY_ENV} is not set")))?;
        let base_url = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        let model = std::env::var(MODEL_ENV).unwrap_or_else(|_| DEFAULT_MODEL.to_string());
        Self::new(base_url, api_key, model)
    }

    pub fn with_transport(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
        transport: Arc<dyn HttpTransport>,
    ) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
            transport,
            retry: RetryPolicy::default(),
            sleep: Arc::new(std::thread::sleep),
        }
    }

    pub fn with_retry(
        mut self,
        retry: RetryPolicy,
        sleep: impl Fn(Duration) + Send + Sync + 'static,
    ) -> Self {
        self.retry = retry;
        self.sleep = Arc::new(sleep);
        self
    }

    fn body(&self, request: &ProviderRequest) -> Value {
        let p = &request.params;
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": p.temperature,
            "top_p": p.top_p,
            "frequency_penalty": p.frequency_penalty,
            "presence_penalty": p.presence_penalty,
            "max_tokens": p.max_tokens,
        })
    }

    fn attempt(&self, http: &HttpRequest) -> Result<HttpReply, ProviderError> {
        let mut retries = self.retry.delays.iter();
        loop {
            let transient = match self.transport.send(http) {
                Ok(reply) if reply.status == 429 || reply.status >= 500 => ProviderError::Http {
                    status: reply.status,
                    body: truncate(&reply.body),
                },
                Ok(reply) => return Ok(reply),
                Err(TransportError::Egress(e)) => return Err(ProviderError::Egress(e)),
                Err(TransportError::Io(e)) => ProviderError::Transport(e),
            };
            match retries.next() {
                Some(delay) => {
                    tracing::warn!(error = %transient, ?delay, "retrying provider call");
                    (self.sleep)(*delay);
                }
                None => return Err(transient),
            }
        }
    }
}

impl TextProvider for ChatCompletionsProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        request.check()?;
        let http = HttpRequest {
            method: Method::Post,
            url: format!("{}/chat/completions", self.base_url),
            headers: vec![
                ("authorization".into(), format!("Bearer {}", self.api_key)),
                ("content-type".into(), "application/json".into()),
            ],
            body: Some(self.body(request).to_string()),
        };
        let started = Instant::now();
        let reply = self.attempt(&http)?;
        let latency_ms = started.elapsed().as_millis() as u64;
        match reply.status {
            200..=299 => parse_completion(&reply.body, latency_ms),
            401 | 403 => Err(ProviderError::Auth(truncate(&reply.body))),
            status => Err(ProviderError::Http {
                status,
                body: truncate(&reply.body),
            }),
        }
    }
}

/// Extracts the first choice from a chat-completions reply body.
pub fn parse_completion(body: &str, latency_ms: u64) -> Result<ProviderResponse, ProviderError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| ProviderError::Malformed(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ProviderError::Malformed("no choices in reply".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("stop") | None => FinishReason::Complete,
        Some("length") => FinishReason::Truncated,
        Some(_) => FinishReason::Error,
    };
    Ok(ProviderResponse {
        text,
        finish_reason,
        latency_ms,
    })
}

fn truncate(s: &str) -> String {
    const MAX: usize = 300;
    if s.len() <= MAX {
        return s.to_string();
    }
    let mut end = MAX;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &s[..end])
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::llm::{profile, ProfileName, StageTag};

    struct FakeTransport {
        replies: Mutex<Vec<Result<HttpReply, TransportError>>>,
        seen: Mutex<Vec<HttpRequest>>,
    }

    impl FakeTransport {
        fn new(mut replies: Vec<Result<HttpReply, TransportError>>) -> Arc<Self> {
            replies.reverse();
            Arc::new(Self {
                replies: Mutex::new(replies),
                seen: Mutex::new(vec![]),
            })
        }
    }

    impl HttpTransport for FakeTransport {
        fn send(&self, request: &HttpRequest) -> Result<HttpReply, TransportError> {
            self.seen.lock().unwrap().push(request.clone());
            self.replies
                .lock()
                .unwrap()
                .pop()
                .expect("unexpected extra call")
        }
    }

    fn ok(text: &str, finish: &str) -> Result<HttpReply, TransportError> {
        Ok(HttpReply {
            status: 200,
            body: json!({"choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": finish}]})
                .to_string(),
        })
    }

    fn request() -> ProviderRequest {
        ProviderRequest {
            request_id: "r1".into(),
            system_prompt: "system".into(),
            user_prompt: "user".into(),
            params: profile(ProfileName::Plan),
            stage_tag: StageTag::Initial,
        }
    }

    fn provider(
        t: Arc<FakeTransport>,
        slept: Arc<Mutex<Vec<Duration>>>,
    ) -> ChatCompletionsProvider {
        ChatCompletionsProvider::with_transport("https://llm.example/v1/", "k", "m", t)
            .with_retry(RetryPolicy::default(), move |d| {
                slept.lock().unwrap().push(d)
            })
    }

    #[test]
    fn sends_profile_params() {
        let t = FakeTransport::new(vec![ok("hello", "stop")]);
        let slept = Arc::new(Mutex::new(vec![]));
        let resp = provider(t.clone(), slept).complete(&request()).unwrap();
        assert_eq!(resp.text, "hello");
        let seen = t.seen.lock().unwrap();
        assert_eq!(seen[0].url, "https://llm.example/v1/chat/completions");
        let body: Value = serde_json::from_str(seen[0].body.as_ref().unwrap()).unwrap();
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["top_p"], 0.8);
        assert_eq!(body["frequency_penalty"], 0.2);
        assert_eq!(body["presence_penalty"], 0.1);
        assert_eq!(body["max_tokens"], 4096);
        assert_eq!(body["messages"][1]["content"], "user");
    }

    #[test]
    fn retries_transient_failures_with_backoff() {
        let t = FakeTransport::new(vec![
            Err(TransportError::Io("reset".into())),
            Ok(HttpReply {
                status: 503,
                body: "busy".into(),
            }),
            ok("done", "stop"),
        ]);
        let slept = Arc::new(Mutex::new(vec![]));
        let resp = provider(t.clone(), slept.clone())
            .complete(&request())
            .unwrap();
        assert_eq!(resp.text, "done");
        assert_eq!(
            *slept.lock().unwrap(),
            [Duration::from_millis(500), Duration::from_secs(2)]
        );
    }

    #[test]
    fn gives_up_after_three_retries() {
        let t = FakeTransport::new(
            (0..4)
                .map(|_| Err(TransportError::Io("down".into())))
                .collect(),
        );
        let slept = Arc::new(Mutex::new(vec![]));
        let err = provider(t.clone(), slept.clone())
            .complete(&request())
            .unwrap_err();
        assert!(matches!(err, ProviderError::Transport(_)));
        assert_eq!(t.seen.lock().unwrap().len(), 4);
        assert_eq!(slept.lock().unwrap().len(), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let t = FakeTransport::new(vec![Ok(HttpReply {
            status: 401,
            body: "bad key".into(),
        })]);
        let err = provider(t.clone(), Arc::new(Mutex::new(vec![])))
            .complete(&request())
            .unwrap_err();
        assert!(matches!(err, ProviderError::Auth(_)));
        assert_eq!(t.seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn truncation_surfaces_in_finish_reason() {
        let t = FakeTransport::new(vec![ok("{\"weeks\": [", "length")]);
        let resp = provider(t, Arc::new(Mutex::new(vec![])))
            .complete(&request())
            .unwrap();
        assert_eq!(resp.finish_reason, FinishReason::Truncated);
    }

    #[test]
    fn egress_denial_is_not_retried() {
        let t = FakeTransport::new(vec![Err(TransportError::Egress(
            crate::egress::EgressDenied {
                host: "llm.example".into(),
            },
        ))]);
        let err = provider(t.clone(), Arc::new(Mutex::new(vec![])))
            .complete(&request())
            .unwrap_err();
        assert!(matches!(err, ProviderError::Egress(_)));
        assert_eq!(t.seen.lock().unwrap().len(), 1);
    }
}
