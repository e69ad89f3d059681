use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{HarnessError, TaskRecord};
use crate::llm::{ChatClient, DecodingParams};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("generation failed for task `{task_id}`: {message}")]
pub struct GenerationError {
    pub task_id: String,
    pub message: String,
}

pub trait GenerationClient: Send + Sync {
    /// Raw model text for `task`, given the rendered prompt.
    fn generate(&self, task: &TaskRecord, prompt: &str) -> Result<String, GenerationError>;

    /// Decoding parameters, when the client samples from a model.
    fn decoding(&self) -> Option<DecodingParams> {
        None
    }
}

/// Canned predictions keyed by task id.
#[derive(Debug, Clone, Default)]
pub struct ReplayGenerator {
    predictions: HashMap<String, String>,
}

#[derive(Deserialize)]
struct ReplayLine {
    task_id: String,
    prediction: String,
}

impl ReplayGenerator {
    pub fn new(predictions: HashMap<String, String>) -> Self {
        ReplayGenerator { predictions }
    }

    /// Reads JSONL lines of `{"task_id", "prediction"}`.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut predictions = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ReplayLine = serde_json::from_str(line).map_err(|e| HarnessError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
            if predictions.insert(rec.task_id.clone(), rec.prediction).is_some() {
                return Err(HarnessError::MalformedRecord {
                    line: i + 1,
                    message: format!("duplicate task_id `{}`", rec.task_id),
                });
            }
        }
        Ok(ReplayGenerator { predictions })
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

impl GenerationClient for ReplayGenerator {
    fn generate(&self, task: &TaskRecord, _prompt: &str) -> Result<String, GenerationError> {
        self.predictions.get(&task.task_id).cloned().ok_or_else(|| GenerationError {
            task_id: task.task_id.clone(),
            message: "no replayed prediction".into(),
        })
    }
}

/// Live generation through a chat-completions endpoint.
pub struct ChatGenerator {
    client: ChatClient,
}

impl ChatGenerator {
    pub fn new(client: ChatClient) -> Self {
        ChatGenerator { client }
    }
}

impl GenerationClient for ChatGenerator {
    fn generate(&self, task: &TaskRecord, prompt: &str) -> Result<String, GenerationError> {
        self.client.complete(None, prompt).map_err(|e| GenerationError {
            task_id: task.task_id.clone(),
            message: e.to_string(),
        })
    }

    fn decoding(&self) -> Option<DecodingParams> {
        Some(self.client.params().clone())
    }
}
