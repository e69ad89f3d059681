use serde::{Deserialize, Serialize};

use super::{BackendKind, EmbeddingBackend, EmbeddingError};
use crate::http::{self, PostError};

pub use crate::http::RetryPolicy;

/// Texts per `/embed` request.
pub const REMOTE_BATCH_SIZE: usize = 64;

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    #[allow(dead_code)]
    model: String,
    dimension: usize,
    vectors: Vec<Vec<f64>>,
}

/// Client for the `/embed` wire protocol:
/// `POST {"texts": [...]}` → `{"model", "dimension", "vectors"}`.
pub struct RemoteBackend {
    url: String,
    dimension: usize,
    batch_size: usize,
    policy: RetryPolicy,
    agent: ureq::Agent,
}

impl RemoteBackend {
    /// `endpoint` is the service base URL; `/embed` is appended unless
    /// already present.
    pub fn new(endpoint: impl Into<String>, dimension: usize) -> Self {
        Self::with_policy(endpoint, dimension, RetryPolicy::default())
    }

    pub fn with_policy(endpoint: impl Into<String>, dimension: usize, policy: RetryPolicy) -> Self {
        let endpoint = endpoint.into();
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/embed") {
            base.to_string()
        } else {
            format!("{base}/embed")
        };
        RemoteBackend {
            url,
            dimension,
            batch_size: REMOTE_BATCH_SIZE,
            agent: http::agent(&policy),
            policy,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        let value = http::post_json(&self.agent, &self.url, None, &EmbedRequest { texts }, &self.policy)
            .map_err(|e| match e {
                PostError::Unavailable { attempts, message } => {
                    EmbeddingError::RemoteUnavailable { attempts, message }
                }
                PostError::Rejected { status, message } => {
                    EmbeddingError::Protocol(format!("HTTP {status}: {message}"))
                }
                PostError::BadBody(m) => EmbeddingError::Protocol(m),
            })?;
        let response: EmbedResponse =
            serde_json::from_value(value).map_err(|e| EmbeddingError::Protocol(e.to_string()))?;
        if response.dimension != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dimension,
                actual: response.dimension,
            });
        }
        if response.vectors.len() != texts.len() {
            return Err(EmbeddingError::Protocol(format!(
                "expected {} vectors, got {}",
                texts.len(),
                response.vectors.len()
            )));
        }
        if let Some(bad) = response.vectors.iter().find(|v| v.len() != self.dimension) {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dimension,
                actual: bad.len(),
            });
        }
        Ok(response.vectors)
    }
}

impl EmbeddingBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn endpoint(&self) -> Option<String> {
        Some(self.url.clone())
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            out.extend(self.embed_batch(batch)?);
        }
        Ok(out)
    }
}
