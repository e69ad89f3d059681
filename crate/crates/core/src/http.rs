//! Blocking JSON POST with bounded retries, shared by the HTTP clients.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    /// Three attempts, 200 ms initial backoff doubling each retry.
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug)]
pub(crate) enum PostError {
    /// Transport failures or 5xx on every attempt.
    Unavailable { attempts: u32, message: String },
    /// 4xx responses are not retried.
    Rejected { status: u16, message: String },
    /// 2xx with a body that is not JSON.
    BadBody(String),
}

pub(crate) fn agent(policy: &RetryPolicy) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(policy.timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn error_message(body: &str) -> String {
    serde_json::from_str::<Value>(body)
        .ok()
        .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_else(|| body.chars().take(200).collect())
}

pub(crate) fn post_json<B: Serialize>(
    agent: &ureq::Agent,
    url: &str,
    bearer: Option<&str>,
    body: &B,
    policy: &RetryPolicy,
) -> Result<Value, PostError> {
    let attempts = policy.attempts.max(1);
    let mut backoff = policy.initial_backoff;
    let mut last = String::new();
    for attempt in 1..=attempts {
        let mut request = agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = bearer {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        match request.send_json(body) {
            Ok(mut response) => {
                let status = response.status().as_u16();
                let text = response.body_mut().read_to_string().unwrap_or_default();
                if (200..300).contains(&status) {
                    return serde_json::from_str(&text).map_err(|e| PostError::BadBody(e.to_string()));
                }
                if (400..500).contains(&status) {
                    return Err(PostError::Rejected {
                        status,
                        message: error_message(&text),
                    });
                }
                last = format!("HTTP {status}: {}", error_message(&text));
            }
            Err(e) => last = e.to_string(),
        }
        if attempt < attempts {
            std::thread::sleep(backoff);
            backoff *= 2;
        }
    }
    Err(PostError::Unavailable {
        attempts,
        message: last,
    })
}
