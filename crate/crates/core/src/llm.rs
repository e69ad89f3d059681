//! Minimal chat-completions client used by the live extractor and generator.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::http::{self, PostError, RetryPolicy};

pub const LLM_URL_ENV: &str = "EXTRACTBENCH_LLM_URL";
pub const LLM_KEY_ENV: &str = "EXTRACTBENCH_LLM_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("LLM endpoint unavailable after {attempts} attempt(s): {message}")]
    Unavailable { attempts: u32, message: String },
    #[error("LLM endpoint rejected the request (HTTP {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("unexpected LLM response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: usize,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 532,
        }
    }
}

pub struct ChatClient {
    url: String,
    model: String,
    api_key: Option<String>,
    params: DecodingParams,
    policy: RetryPolicy,
    agent: ureq::Agent,
}

impl ChatClient {
    /// `url` is the full chat-completions endpoint.
    pub fn new(url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let policy = RetryPolicy::default();
        ChatClient {
            url: url.into(),
            model: model.into(),
            api_key,
            params: DecodingParams::default(),
            agent: http::agent(&policy),
            policy,
        }
    }

    /// Endpoint and key from `EXTRACTBENCH_LLM_URL` / `EXTRACTBENCH_LLM_KEY`.
    pub fn from_env(model: impl Into<String>) -> Option<Self> {
        let url = std::env::var(LLM_URL_ENV).ok().filter(|u| !u.trim().is_empty())?;
        let key = std::env::var(LLM_KEY_ENV).ok().filter(|k| !k.is_empty());
        Some(Self::new(url.trim(), model, key))
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.agent = http::agent(&policy);
        self.policy = policy;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn params(&self) -> &DecodingParams {
        &self.params
    }

    pub fn complete(&self, system: Option<&str>, user: &str) -> Result<String, LlmError> {
        let mut messages = Vec::new();
        if let Some(system) = system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": user}));
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.params.temperature,
            "top_p": self.params.top_p,
            "max_tokens": self.params.max_tokens,
        });
        let value = http::post_json(&self.agent, &self.url, self.api_key.as_deref(), &body, &self.policy)
            .map_err(|e| match e {
                PostError::Unavailable { attempts, message } => LlmError::Unavailable { attempts, message },
                PostError::Rejected { status, message } => LlmError::Rejected { status, message },
                PostError::BadBody(m) => LlmError::Protocol(m),
            })?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::Protocol("missing choices[0].message.content".into()))
    }
}
