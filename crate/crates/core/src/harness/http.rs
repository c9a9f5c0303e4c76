//! OpenAI-compatible chat-completions client and the function-calling adapter.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::*;
use crate::endpoint::CompletionEndpoint;

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "PLANCHECK_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    /// Base URL up to and including the version segment, e.g. `https://host/v1`.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Bearer token. Read from [`API_KEY_ENV`] when absent.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub request_timeout_secs: u64,
    /// Minimum spacing between requests sharing one client.
    pub min_interval_ms: u64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            model: "gpt-4o-mini".to_string(),
            temperature: 0.0,
            api_key: None,
            request_timeout_secs: 120,
            min_interval_ms: 0,
        }
    }
}

/// Spaces out requests from every adapter sharing it.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration) -> Self {
        RateLimiter {
            min_interval,
            next: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().expect("poisoned");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.min_interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

pub struct HttpChatClient {
    config: ChatConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl HttpChatClient {
    pub fn new(config: ChatConfig) -> Result<Self, EndpointError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs))
            .build()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let api_key = config
            .api_key
            .clone()
            .or_else(|| std::env::var(API_KEY_ENV).ok())
            .filter(|k| !k.is_empty());
        Ok(HttpChatClient {
            limiter: RateLimiter::new(Duration::from_millis(config.min_interval_ms)),
            config,
            api_key,
            http,
        })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    /// One chat-completions round trip; returns the first choice's message.
    pub fn chat(&self, messages: &[Value], tools: &[ToolManifest]) -> Result<Value, EndpointError> {
        let mut body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        if !tools.is_empty() {
            body["tools"] = tools
                .iter()
                .map(|t| {
                    json!({
                        "type": "function",
                        "function": {
                            "name": t.name,
                            "description": t.description,
                            "parameters": t.parameters,
                        }
                    })
                })
                .collect();
        }
        self.limiter.acquire();
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = self.http.post(url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(EndpointError::Auth(text));
        }
        if !status.is_success() {
            return Err(EndpointError::Status {
                code: status.as_u16(),
                body: text,
            });
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| EndpointError::Malformed(e.to_string()))?;
        v.pointer("/choices/0/message")
            .cloned()
            .ok_or_else(|| EndpointError::Malformed("response has no choices[0].message".into()))
    }
}

impl CompletionEndpoint for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        let msg = self.chat(&[json!({"role": "user", "content": prompt})], &[])?;
        msg.get("content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| EndpointError::Malformed("message has no text content".into()))
    }
}

/// Function-calling agent: tools are offered as functions and results are fed
/// back as tool messages.
pub struct HttpChatAdapter {
    client: Arc<HttpChatClient>,
    messages: Vec<Value>,
    pending: VecDeque<AgentStep>,
    awaiting: Vec<String>,
    seen_entries: usize,
}

impl HttpChatAdapter {
    pub fn new(client: Arc<HttpChatClient>) -> Self {
        HttpChatAdapter {
            client,
            messages: Vec::new(),
            pending: VecDeque::new(),
            awaiting: Vec::new(),
            seen_entries: 0,
        }
    }

    fn absorb_results(&mut self, transcript: &Transcript) {
        for entry in &transcript.entries[self.seen_entries.min(transcript.entries.len())..] {
            if let TranscriptEntry::ToolResult {
                call_id: Some(id),
                content,
                ..
            } = entry
            {
                if let Some(i) = self.awaiting.iter().position(|x| x == id) {
                    self.awaiting.remove(i);
                    self.messages.push(json!({
                        "role": "tool",
                        "tool_call_id": id,
                        "content": content,
                    }));
                }
            }
        }
        self.seen_entries = transcript.entries.len();
    }
}

impl AgentAdapter for HttpChatAdapter {
    fn next_step(&mut self, transcript: &Transcript) -> Result<AgentStep, AdapterError> {
        if self.messages.is_empty() {
            self.messages
                .push(json!({"role": "user", "content": transcript.query}));
        }
        self.absorb_results(transcript);
        if let Some(step) = self.pending.pop_front() {
            return Ok(step);
        }
        let mut msg = self.client.chat(&self.messages, &transcript.tools)?;
        if msg.get("role").is_none() {
            msg["role"] = json!("assistant");
        }
        self.messages.push(msg.clone());
        let calls = msg
            .get("tool_calls")
            .and_then(Value::as_array)
            .cloned()
            .unwrap_or_default();
        if calls.is_empty() {
            let text = msg
                .get("content")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            return Ok(final_or_halt(text));
        }
        for call in calls {
            let id = call.get("id").and_then(Value::as_str).map(str::to_string);
            let name = call.pointer("/function/name").and_then(Value::as_str);
            let raw = call
                .pointer("/function/arguments")
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .unwrap_or_default();
            let args = if raw.trim().is_empty() {
                Ok(json!({}))
            } else {
                serde_json::from_str::<Value>(&raw)
            };
            match (name, args) {
                (Some(name), Ok(args)) => {
                    if let Some(id) = &id {
                        self.awaiting.push(id.clone());
                    }
                    self.pending.push_back(AgentStep::ToolCall(ToolCall {
                        id,
                        name: name.to_string(),
                        args,
                    }));
                }
                (name, args) => {
                    let detail = match (name, args) {
                        (None, _) => "tool call without a function name".to_string(),
                        (_, Err(e)) => format!("arguments are not valid JSON: {e}"),
                        _ => unreachable!(),
                    };
                    if let Some(id) = id {
                        self.messages.push(json!({
                            "role": "tool",
                            "tool_call_id": id,
                            "content": format!("Error: {detail}"),
                        }));
                    }
                    self.pending.push_back(AgentStep::Malformed { detail });
                }
            }
        }
        Ok(self.pending.pop_front().expect("at least one call"))
    }
}

/// One function-calling adapter per run, all sharing a client and its rate limiter.
pub struct HttpAgentFactory {
    client: Arc<HttpChatClient>,
}

impl HttpAgentFactory {
    pub fn new(client: Arc<HttpChatClient>) -> Self {
        HttpAgentFactory { client }
    }
}

impl AgentFactory for HttpAgentFactory {
    fn label(&self) -> String {
        format!("http:{}", self.client.config().model)
    }

    fn create(&self, _case: &QueryCase, _run_seed: u64) -> Box<dyn AgentAdapter> {
        Box::new(HttpChatAdapter::new(self.client.clone()))
    }
}

/// A final message announcing an early halt is read as a halt.
pub(crate) fn final_or_halt(text: String) -> AgentStep {
    if text.to_lowercase().contains("early halt") {
        AgentStep::Halt { reason: text }
    } else {
        AgentStep::FinalAnswer { text }
    }
}
