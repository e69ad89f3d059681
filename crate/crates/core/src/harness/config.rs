use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::embedding::{BackendKind, DeterministicBackend, Embedder, RemoteBackend, DEFAULT_CACHE_CAPACITY, DEFAULT_DIMENSION, EMBED_URL_ENV};
use crate::llm::{ChatClient, DecodingParams, LLM_KEY_ENV, LLM_URL_ENV};
use crate::pipeline::{AugmentationConfig, ChunkingConfig};
use crate::reward::SimilarityConfig;
use crate::schema::ParseMode;

/// Run configuration, read from TOML. Every key is optional.
///
/// ```toml
/// model_name = "my-model"
/// workers = 8
/// parse_mode = "lenient"
/// embedder = "deterministic"
///
/// [similarity]
/// tau = 0.35
///
/// [llm]
/// url = "http://localhost:8000/v1/chat/completions"
/// model = "extractor"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model_name: String,
    pub seed: u64,
    pub workers: usize,
    pub parse_mode: ParseMode,
    pub embedder: BackendKind,
    pub embed_url: Option<String>,
    pub embed_dimension: usize,
    pub cache_capacity: usize,
    pub holdout: usize,
    pub draws_per_doc: usize,
    pub similarity: SimilarityConfig,
    pub chunking: ChunkingConfig,
    pub augmentation: AugmentationConfig,
    pub llm: LlmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model_name: "model".into(),
            seed: 0,
            workers: 4,
            parse_mode: ParseMode::Lenient,
            embedder: BackendKind::Deterministic,
            embed_url: None,
            embed_dimension: DEFAULT_DIMENSION,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            holdout: 1000,
            draws_per_doc: 4,
            similarity: SimilarityConfig::default(),
            chunking: ChunkingConfig::default(),
            augmentation: AugmentationConfig::default(),
            llm: LlmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub url: Option<String>,
    pub model: String,
    pub api_key: Option<String>,
    #[serde(flatten)]
    pub decoding: DecodingParams,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.similarity.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// The configured embedder; `embed_url` falls back to the environment.
    pub fn build_embedder(&self) -> Result<Embedder, HarnessError> {
        match self.embedder {
            BackendKind::Deterministic => Ok(Embedder::new(
                Box::new(DeterministicBackend::new(self.embed_dimension)),
                self.cache_capacity,
            )),
            BackendKind::Remote => {
                let url = self
                    .embed_url
                    .clone()
                    .or_else(|| std::env::var(EMBED_URL_ENV).ok())
                    .filter(|u| !u.trim().is_empty())
                    .ok_or_else(|| {
                        HarnessError::Config(format!("remote embedder needs `embed_url` or {EMBED_URL_ENV}"))
                    })?;
                Ok(Embedder::new(
                    Box::new(RemoteBackend::new(url.trim(), self.embed_dimension)),
                    self.cache_capacity,
                ))
            }
        }
    }

    /// Chat client from `[llm]`, with the environment overriding url and key.
    pub fn build_chat_client(&self) -> Result<ChatClient, HarnessError> {
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let url = env(LLM_URL_ENV)
            .or_else(|| self.llm.url.clone())
            .ok_or_else(|| HarnessError::Config(format!("live generation needs [llm].url or {LLM_URL_ENV}")))?;
        let key = env(LLM_KEY_ENV).or_else(|| self.llm.api_key.clone());
        let model = if self.llm.model.is_empty() {
            self.model_name.clone()
        } else {
            self.llm.model.clone()
        };
        Ok(ChatClient::new(url.trim(), model, key).with_params(self.llm.decoding.clone()))
    }
}
