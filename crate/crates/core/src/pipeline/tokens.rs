use thiserror::Error;

use super::DocumentChunk;
use crate::schema::{ExtractionOutput, ExtractionSchema};
use crate::template::PromptTemplate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("tokenizer unavailable: {0}")]
pub struct TokenizerError(pub String);

pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> Result<usize, TokenizerError>;

    /// Token count of the concatenation of `parts`.
    fn count_concat(&self, parts: &[&str]) -> Result<usize, TokenizerError> {
        self.count(&parts.concat())
    }
}

/// `ceil(chars / 4)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxTokenCounter;

impl TokenCounter for ApproxTokenCounter {
    fn count(&self, text: &str) -> Result<usize, TokenizerError> {
        Ok(text.chars().count().div_ceil(4))
    }

    fn count_concat(&self, parts: &[&str]) -> Result<usize, TokenizerError> {
        Ok(parts.iter().map(|p| p.chars().count()).sum::<usize>().div_ceil(4))
    }
}

/// Tokens in template text ∥ schema JSON ∥ chunk texts ∥ gold JSON.
pub fn count_tokens<'a>(
    schema: &ExtractionSchema,
    chunks: impl IntoIterator<Item = &'a DocumentChunk>,
    gold: &ExtractionOutput,
    template: &PromptTemplate,
    counter: &dyn TokenCounter,
) -> Result<usize, TokenizerError> {
    let prompt = template.literal_text();
    let schema_json = schema.to_json_string();
    let gold_json = gold.to_json_string();
    let mut parts: Vec<&str> = vec![&prompt, &schema_json];
    parts.extend(chunks.into_iter().map(|c| c.text.as_str()));
    parts.push(&gold_json);
    counter.count_concat(&parts)
}
