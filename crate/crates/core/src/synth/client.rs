//! LLM clients and the retrying `generate` call.

use std::collections::BTreeMap;
use std::thread;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::parse_event_line;

pub const API_KEY_ENV: &str = "TRACEFORGE_LLM_API_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("unusable response: {0}")]
    Response(String),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub prompt: String,
    /// Stable label for the request (model id and attempt); replay and mock
    /// clients key on it.
    pub tag: String,
}

pub trait LlmClient: Send + Sync {
    fn id(&self) -> &str;

    /// Returns the completion text. Implementations must give up after
    /// `timeout` with [`LlmError::Timeout`].
    fn complete(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff: Duration,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub text: String,
    pub elapsed: Duration,
    pub attempts: u32,
}

/// Sends one request, retrying transport failures with exponential backoff.
pub fn generate(request: &CompletionRequest, client: &dyn LlmClient, options: &GenerateOptions) -> Result<Generated, LlmError> {
    let started = Instant::now();
    let mut attempt = 0;
    loop {
        attempt += 1;
        match client.complete(request, options.timeout) {
            Ok(text) => {
                return Ok(Generated {
                    text,
                    elapsed: started.elapsed(),
                    attempts: attempt,
                })
            }
            Err(err) if err.is_retryable() && attempt <= options.max_retries => {
                thread::sleep(options.backoff * 2u32.saturating_pow(attempt - 1));
            }
            Err(err) => return Err(err),
        }
    }
}

pub(crate) fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Offline stand-in for an LLM.
///
/// Reads the demonstration traces out of the prompt and answers with a
/// perturbed copy of one of them: neighbouring operations swapped, some
/// dropped or repeated, some lines with sloppy spacing and casing, all wrapped in
/// a code fence and a line of chatter. Output depends only on the seed and
/// the request tag.
#[derive(Debug, Clone)]
pub struct MockClient {
    pub seed: u64,
    pub latency: Duration,
    /// Tags for which the mock answers with prose instead of a trace.
    pub garbage_tags: Vec<String>,
}

impl MockClient {
    pub fn new(seed: u64) -> Self {
        MockClient {
            seed,
            latency: Duration::ZERO,
            garbage_tags: Vec::new(),
        }
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    pub fn with_garbage_for(mut self, tag: impl Into<String>) -> Self {
        self.garbage_tags.push(tag.into());
        self
    }

    fn demonstrations(prompt: &str) -> Vec<Vec<String>> {
        let mut blocks: Vec<Vec<String>> = Vec::new();
        let mut current: Option<Vec<String>> = None;
        for line in prompt.lines() {
            if line.starts_with("MODEL:") {
                if let Some(block) = current.take().filter(|b| !b.is_empty()) {
                    blocks.push(block);
                }
                current = Some(Vec::new());
            } else if let Some(block) = current.as_mut() {
                if let Ok(event) = parse_event_line(line) {
                    block.push(event.render());
                }
            }
        }
        if let Some(block) = current.filter(|b| !b.is_empty()) {
            blocks.push(block);
        }
        blocks
    }

    fn respond(&self, request: &CompletionRequest) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(&request.tag));
        if self.garbage_tags.iter().any(|t| request.tag.starts_with(t.as_str())) {
            return "I am sorry, I cannot produce modeling operations for this system.\nPlease provide more details.\n".into();
        }
        let blocks = Self::demonstrations(&request.prompt);
        let Some(source) = blocks.choose(&mut rng) else {
            return "No demonstrations were provided.\n".into();
        };
        let mut lines: Vec<String> = Vec::with_capacity(source.len() + 4);
        for line in source {
            let roll: f64 = rng.gen();
            if roll < 0.08 {
                continue;
            }
            lines.push(line.clone());
            if roll > 0.92 {
                lines.push(line.clone());
            }
        }
        for i in 1..lines.len() {
            if rng.gen_bool(0.15) {
                lines.swap(i - 1, i);
            }
        }
        if lines.is_empty() {
            lines.push(source[0].clone());
        }
        for line in lines.iter_mut() {
            if rng.gen_bool(0.1) {
                let tokens: Vec<&str> = line.split(' ').collect();
                *line = format!("Event  {} {}  {}", tokens[1], tokens[2], tokens[3].to_lowercase());
            }
        }
        format!("Here are the modeling operations:\n```\n{}\n```\nHope this helps!\n", lines.join("\n"))
    }
}

impl LlmClient for MockClient {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, LlmError> {
        if self.latency > timeout {
            thread::sleep(timeout);
            return Err(LlmError::Timeout(timeout));
        }
        if !self.latency.is_zero() {
            thread::sleep(self.latency);
        }
        Ok(self.respond(request))
    }
}

/// Replays recorded responses keyed by request tag.
///
/// Tags are matched exactly first, then by the part before `#` (the model id)
/// so a fixture recorded for the first attempt also serves retries.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReplayClient {
    pub responses: BTreeMap<String, String>,
}

impl ReplayClient {
    pub fn new(responses: BTreeMap<String, String>) -> Self {
        ReplayClient { responses }
    }
}

impl LlmClient for ReplayClient {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &CompletionRequest, _timeout: Duration) -> Result<String, LlmError> {
        let base = request.tag.split('#').next().unwrap_or_default();
        self.responses
            .get(&request.tag)
            .or_else(|| self.responses.get(base))
            .cloned()
            .ok_or_else(|| LlmError::Response(format!("no recorded response for `{}`", request.tag)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RequestStyle {
    /// `{"messages": [{"role": "user", "content": prompt}]}`
    #[default]
    Chat,
    /// `{"prompt": prompt}`
    Completion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpClientConfig {
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Dotted path (`choices.0.message.content`) or JSON pointer to the
    /// completion text in the response body.
    pub json_response_path: String,
    pub request_style: RequestStyle,
}

impl Default for HttpClientConfig {
    fn default() -> Self {
        HttpClientConfig {
            endpoint: "http://localhost:8080/v1/chat/completions".into(),
            model_name: "gpt-4".into(),
            temperature: 0.2,
            max_tokens: 2048,
            json_response_path: "choices.0.message.content".into(),
            request_style: RequestStyle::Chat,
        }
    }
}

/// JSON-over-HTTP completion client. The bearer token is read from
/// `TRACEFORGE_LLM_API_KEY` when present.
#[derive(Debug, Clone)]
pub struct HttpClient {
    config: HttpClientConfig,
    api_key: Option<String>,
}

impl HttpClient {
    pub fn new(config: HttpClientConfig) -> Self {
        HttpClient {
            config,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn request_body(&self, prompt: &str) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        match self.config.request_style {
            RequestStyle::Chat => {
                body["messages"] = serde_json::json!([{ "role": "user", "content": prompt }]);
            }
            RequestStyle::Completion => body["prompt"] = serde_json::Value::String(prompt.to_string()),
        }
        body
    }
}

/// Resolves a dotted path or JSON pointer to a string value.
pub fn extract_text(body: &serde_json::Value, path: &str) -> Option<String> {
    let pointer = if path.starts_with('/') || path.is_empty() {
        path.to_string()
    } else {
        path.split('.').fold(String::new(), |mut acc, part| {
            acc.push('/');
            acc.push_str(&part.replace('~', "~0").replace('/', "~1"));
            acc
        })
    };
    body.pointer(&pointer)?.as_str().map(str::to_string)
}

impl LlmClient for HttpClient {
    fn id(&self) -> &str {
        &self.config.model_name
    }

    fn complete(&self, request: &CompletionRequest, timeout: Duration) -> Result<String, LlmError> {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        let mut call = agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let started = Instant::now();
        let response = match call.send_json(self.request_body(&request.prompt)) {
            Ok(response) => response,
            Err(ureq::Error::Status(code, _)) if code == 401 || code == 403 => {
                return Err(LlmError::Auth(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, _)) if code == 408 || code == 429 || code >= 500 => {
                return Err(LlmError::Transport(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, _)) => return Err(LlmError::Response(format!("HTTP {code}"))),
            Err(ureq::Error::Transport(t)) => {
                let text = t.to_string();
                if started.elapsed() >= timeout || text.contains("timed out") {
                    return Err(LlmError::Timeout(timeout));
                }
                return Err(LlmError::Transport(text));
            }
        };
        let body: serde_json::Value = response
            .into_json()
            .map_err(|e| LlmError::Response(format!("invalid JSON: {e}")))?;
        extract_text(&body, &self.config.json_response_path)
            .ok_or_else(|| LlmError::Response(format!("no string at `{}`", self.config.json_response_path)))
    }
}
