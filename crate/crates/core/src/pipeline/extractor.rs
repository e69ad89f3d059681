//! Chunk extractor clients.
//!
//! Every backend answers with the same text format: a JSON object whose
//! `schema` member declares the fields found (schema dialect) and whose
//! `output` member holds their values.
//!
//! ```json
//! {"schema": {"type": "object", "properties": {"name": {"type": "string"}}},
//!  "output": {"name": "Acme"}}
//! ```
//!
//! The object may be wrapped in prose or a code fence. Declared fields
//! missing from `output` are treated as not found; values without a
//! declaration are a protocol error.

use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use super::DocumentChunk;
use crate::llm::{ChatClient, LlmError};
use crate::schema::{extract_json_object, ExtractionSchema, FieldSpec, FieldValue};

pub const EXTRACTOR_INSTRUCTIONS: &str = "You extract structured facts from one chunk of a longer document. \
You are given the chunk and a JSON list of facts already extracted from earlier chunks. \
Report only new facts. Answer with a single JSON object with two members: \
\"schema\", a JSON schema (type object, with properties typed string, number, boolean, array or object, \
each carrying an extraction_instruction), and \"output\", an object holding the value of every declared property.";

pub struct ExtractionRequest<'a> {
    pub doc_id: &'a str,
    pub chunk: &'a DocumentChunk,
    /// Memory so far as a JSON list of `{field, value, chunk}`.
    pub memory_json: String,
}

impl ExtractionRequest<'_> {
    pub fn user_message(&self) -> String {
        format!(
            "Document: {}\nChunk {}:\n{}\n\nAlready extracted:\n{}",
            self.doc_id, self.chunk.index, self.chunk.text, self.memory_json
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedField {
    pub spec: FieldSpec,
    pub value: FieldValue,
}

#[derive(Debug, Error)]
pub enum ExtractorError {
    #[error("extractor backend error: {0}")]
    Backend(String),
    #[error("malformed extractor response: {0}")]
    Malformed(String),
    #[error("no canned response at {0}")]
    MissingFixture(PathBuf),
}

impl From<LlmError> for ExtractorError {
    fn from(e: LlmError) -> Self {
        ExtractorError::Backend(e.to_string())
    }
}

pub trait ChunkExtractor: Send + Sync {
    fn extract(&self, request: &ExtractionRequest<'_>) -> Result<Vec<ExtractedField>, ExtractorError>;
}

pub fn parse_extractor_response(text: &str) -> Result<Vec<ExtractedField>, ExtractorError> {
    let object = extract_json_object(text).map_err(|r| ExtractorError::Malformed(r.to_string()))?;
    let value: Value = serde_json::from_str(object).map_err(|e| ExtractorError::Malformed(e.to_string()))?;
    let schema_json = value
        .get("schema")
        .ok_or_else(|| ExtractorError::Malformed("missing `schema`".into()))?;
    let schema = ExtractionSchema::from_json(schema_json).map_err(|e| ExtractorError::Malformed(e.to_string()))?;
    let output = value
        .get("output")
        .and_then(Value::as_object)
        .ok_or_else(|| ExtractorError::Malformed("missing or non-object `output`".into()))?;
    if let Some(stray) = output.keys().find(|k| schema.property(k).is_none()) {
        return Err(ExtractorError::Malformed(format!("output field `{stray}` is not declared in the schema")));
    }
    Ok(schema
        .properties
        .into_iter()
        .filter_map(|spec| {
            let value = FieldValue::from_json(output.get(&spec.name)?);
            Some(ExtractedField { spec, value })
        })
        .collect())
}

/// Replays canned responses from `{dir}/{doc_id}/{chunk index}.json`.
pub struct MockExtractor {
    dir: PathBuf,
}

impl MockExtractor {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        MockExtractor { dir: dir.into() }
    }

    pub fn response_path(&self, doc_id: &str, chunk: usize) -> PathBuf {
        self.dir.join(doc_id).join(format!("{chunk}.json"))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl ChunkExtractor for MockExtractor {
    fn extract(&self, request: &ExtractionRequest<'_>) -> Result<Vec<ExtractedField>, ExtractorError> {
        let path = self.response_path(request.doc_id, request.chunk.index);
        let text = std::fs::read_to_string(&path).map_err(|_| ExtractorError::MissingFixture(path))?;
        parse_extractor_response(&text)
    }
}

pub struct ChatExtractor {
    client: ChatClient,
}

impl ChatExtractor {
    pub fn new(client: ChatClient) -> Self {
        ChatExtractor { client }
    }
}

impl ChunkExtractor for ChatExtractor {
    fn extract(&self, request: &ExtractionRequest<'_>) -> Result<Vec<ExtractedField>, ExtractorError> {
        let reply = self.client.complete(Some(EXTRACTOR_INSTRUCTIONS), &request.user_message())?;
        parse_extractor_response(&reply)
    }
}
