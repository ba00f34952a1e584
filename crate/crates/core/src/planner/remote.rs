//! Chat-completion style HTTP provider.

use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::memory::{heuristic_summarize, ActionSequence, Summarizer, Summary};

use super::parse::parse_action_list;
use super::prompt::{render_summary_query, summary_instruction};
use super::{Message, PlanProvider, PlanRequest, Role};

pub const ENV_URL: &str = "PROVIDER_URL";
pub const ENV_KEY: &str = "PROVIDER_KEY";
pub const ENV_MODEL: &str = "PROVIDER_MODEL";

#[derive(Clone, Debug)]
pub struct RemoteProvider {
    url: String,
    key: Option<String>,
    model: String,
    retries: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(RemoteProvider {
            url: url.into(),
            key,
            model: model.into(),
            retries: 3,
            backoff: Duration::from_millis(500),
            client,
        })
    }

    /// Reads `PROVIDER_URL`, `PROVIDER_KEY` and `PROVIDER_MODEL`.
    pub fn from_env() -> Result<Self> {
        let url = std::env::var(ENV_URL).map_err(|_| Error::Provider(format!("{ENV_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into());
        RemoteProvider::new(url, std::env::var(ENV_KEY).ok(), model)
    }

    /// First delay between attempts; doubled after each retry.
    pub fn with_backoff(mut self, d: Duration) -> Self {
        self.backoff = d;
        self
    }

    pub fn with_retries(mut self, n: u32) -> Self {
        self.retries = n;
        self
    }

    fn attempt(&self, body: &Value) -> std::result::Result<String, (bool, String)> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((retry, format!("HTTP {status}")));
        }
        let v: Value = resp.json().map_err(|e| (false, format!("bad response body: {e}")))?;
        extract_content(&v).ok_or_else(|| (false, "response has no text content".into()))
    }

    /// Sends a role-tagged message list and returns the reply text.
    pub fn chat(&self, messages: &[Message]) -> Result<String> {
        let body = json!({ "model": self.model, "messages": messages });
        let mut delay = self.backoff;
        let mut last = String::new();
        for attempt in 0..=self.retries {
            match self.attempt(&body) {
                Ok(t) => return Ok(t),
                Err((retry, msg)) => {
                    log::warn!("provider attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                    if !retry || attempt == self.retries {
                        break;
                    }
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        Err(Error::Provider(last))
    }
}

/// Accepts `{content}` or the `choices[0].message.content` shape.
fn extract_content(v: &Value) -> Option<String> {
    if let Some(s) = v.get("content").and_then(Value::as_str) {
        return Some(s.to_string());
    }
    v.pointer("/choices/0/message/content").and_then(Value::as_str).map(str::to_string)
}

impl PlanProvider for RemoteProvider {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, req: &PlanRequest) -> Result<String> {
        let mut messages = Vec::with_capacity(req.messages.len() + 1);
        messages.push(Message { role: Role::System, content: req.instruction.to_string() });
        messages.extend_from_slice(req.messages);
        self.chat(&messages)
    }
}

/// Summarizes through the provider, falling back to the LCS core when the
/// call or its parsing fails.
#[derive(Clone, Debug)]
pub struct RemoteSummarizer(pub RemoteProvider);

impl Summarizer for RemoteSummarizer {
    fn summarize(&self, key: &str, seqs: &[ActionSequence]) -> Summary {
        let lists: Vec<_> = seqs.iter().map(|s| s.actions.clone()).collect();
        let messages = [
            Message { role: Role::System, content: summary_instruction() },
            Message { role: Role::User, content: render_summary_query(key, &lists) },
        ];
        let seed = seqs.first().map(|s| s.seed).unwrap_or(0);
        match self.0.chat(&messages).map(|t| parse_action_list(&t)) {
            Ok(Ok(actions)) if !actions.is_empty() => Summary {
                sequence: ActionSequence::new(actions, "summary", seed),
                warning: false,
            },
            other => {
                log::warn!("remote summary unusable ({other:?}); using the common core");
                heuristic_summarize(seqs)
            }
        }
    }
}
