//! Sentence embeddings behind a single provider interface.
//!
//! Two backends exist: an in-process trigram-hashing embedder that needs no
//! model or network, and an HTTP client for an `/embed` service. Both are
//! wrapped by [`Embedder`], which normalizes vectors and memoizes them by
//! exact text.

mod deterministic;
mod remote;

pub use deterministic::DeterministicBackend;
pub use remote::{RemoteBackend, RetryPolicy};

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable naming the embedding service; unset means the
/// deterministic backend is used.
pub const EMBED_URL_ENV: &str = "EXTRACTBENCH_EMBED_URL";
pub const DEFAULT_DIMENSION: usize = 384;
pub const DEFAULT_CACHE_CAPACITY: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding service unavailable after {attempts} attempt(s): {message}")]
    RemoteUnavailable { attempts: u32, message: String },
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("embedding protocol error: {0}")]
    Protocol(String),
}

/// An L2-normalized embedding. Cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Arc<[f64]>);

impl EmbeddingVector {
    /// Normalizes `components`; `None` if the vector is empty, has a
    /// non-finite entry, or has zero norm.
    pub fn normalized(components: Vec<f64>) -> Option<Self> {
        if components.is_empty() || components.iter().any(|c| !c.is_finite()) {
            return None;
        }
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        Some(EmbeddingVector(
            components.into_iter().map(|c| c / norm).collect(),
        ))
    }

    /// Standard basis vector `e_index`.
    pub fn basis(dimension: usize, index: usize) -> Self {
        let mut v = vec![0.0; dimension];
        v[index] = 1.0;
        EmbeddingVector(v.into())
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl std::ops::Neg for &EmbeddingVector {
    type Output = EmbeddingVector;

    fn neg(self) -> EmbeddingVector {
        EmbeddingVector(self.0.iter().map(|c| -c).collect())
    }
}

/// Cosine similarity of two normalized vectors, in `[-1, 1]`.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if u.dimension() != v.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: u.dimension(),
            actual: v.dimension(),
        });
    }
    let dot: f64 = u.0.iter().zip(v.0.iter()).map(|(a, b)| a * b).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Deterministic,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" => Ok(BackendKind::Deterministic),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!(
                "unknown embedder `{other}` (expected deterministic|remote)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub backend: BackendKind,
    pub dimension: usize,
    pub endpoint: Option<String>,
    pub cache_capacity: usize,
}

/// Anything that can turn texts into normalized vectors.
///
/// Implementations must be callable from many threads at once and must be
/// pure: the same text always yields the same vector within a run.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError>;

    fn descriptor(&self) -> ProviderDescriptor;
}

/// Raw vector source used by [`Embedder`].
pub trait EmbeddingBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn dimension(&self) -> usize;

    fn endpoint(&self) -> Option<String> {
        None
    }

    /// One vector per text, same order. Vectors need not be normalized.
    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError>;
}

/// A backend plus an optional LRU memo keyed by exact text.
pub struct Embedder {
    backend: Box<dyn EmbeddingBackend>,
    cache: Option<Mutex<LruCache<String, EmbeddingVector>>>,
    cache_capacity: usize,
}

impl Embedder {
    pub fn new(backend: Box<dyn EmbeddingBackend>, cache_capacity: usize) -> Self {
        let cache = NonZeroUsize::new(cache_capacity).map(|cap| Mutex::new(LruCache::new(cap)));
        Embedder {
            backend,
            cache,
            cache_capacity,
        }
    }

    pub fn deterministic() -> Self {
        Self::new(Box::new(DeterministicBackend::default()), DEFAULT_CACHE_CAPACITY)
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self::new(
            Box::new(RemoteBackend::new(endpoint, DEFAULT_DIMENSION)),
            DEFAULT_CACHE_CAPACITY,
        )
    }

    /// Remote backend when [`EMBED_URL_ENV`] is set, deterministic otherwise.
    pub fn from_env() -> Self {
        match std::env::var(EMBED_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Self::remote(url.trim()),
            _ => Self::deterministic(),
        }
    }

    fn cached(&self, text: &str) -> Option<EmbeddingVector> {
        let cache = self.cache.as_ref()?;
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.get(text).cloned()
    }

    fn store(&self, text: &str, vector: &EmbeddingVector) {
        if let Some(cache) = &self.cache {
            let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
            guard.put(text.to_string(), vector.clone());
        }
    }

    fn finish(&self, raw: Vec<f64>) -> Result<EmbeddingVector, EmbeddingError> {
        let dimension = self.backend.dimension();
        if raw.len() != dimension {
            return Err(EmbeddingError::DimensionMismatch {
                expected: dimension,
                actual: raw.len(),
            });
        }
        // zero vectors get a fixed unit fallback
        Ok(EmbeddingVector::normalized(raw).unwrap_or_else(|| EmbeddingVector::basis(dimension, 0)))
    }
}

impl EmbeddingProvider for Embedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let mut results: Vec<Option<EmbeddingVector>> = texts.iter().map(|t| self.cached(t)).collect();

        let mut misses: Vec<&str> = Vec::new();
        for (text, slot) in texts.iter().zip(&results) {
            if slot.is_none() && !misses.contains(text) {
                misses.push(text);
            }
        }
        if !misses.is_empty() {
            let raw = self.backend.embed_raw(&misses)?;
            if raw.len() != misses.len() {
                return Err(EmbeddingError::Protocol(format!(
                    "backend returned {} vectors for {} texts",
                    raw.len(),
                    misses.len()
                )));
            }
            let mut fresh = Vec::with_capacity(misses.len());
            for (text, components) in misses.iter().zip(raw) {
                let vector = self.finish(components)?;
                self.store(text, &vector);
                fresh.push(vector);
            }
            for (text, slot) in texts.iter().zip(results.iter_mut()) {
                if slot.is_none() {
                    let pos = misses.iter().position(|m| m == text).expect("miss recorded");
                    *slot = Some(fresh[pos].clone());
                }
            }
        }
        Ok(results.into_iter().map(|v| v.expect("filled")).collect())
    }

    fn descriptor(&self) -> ProviderDescriptor {
        ProviderDescriptor {
            backend: self.backend.kind(),
            dimension: self.backend.dimension(),
            endpoint: self.backend.endpoint(),
            cache_capacity: self.cache_capacity,
        }
    }
}
