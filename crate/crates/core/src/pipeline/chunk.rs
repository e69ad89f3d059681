use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkingConfig {
    /// Maximum chunk length in Unicode scalar values.
    pub size: usize,
    pub overlap: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            size: 2000,
            overlap: 200,
        }
    }
}

impl ChunkingConfig {
    pub fn stride(&self) -> usize {
        self.size - self.overlap
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.overlap == 0 || self.overlap >= self.size {
            return Err(PipelineError::InvalidConfig(format!(
                "chunk overlap must satisfy 0 < overlap < size (got size {}, overlap {})",
                self.size, self.overlap
            )));
        }
        Ok(())
    }
}

/// A window `[start, end)` of a document, in character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl DocumentChunk {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Chunk `k` covers `[k·stride, min(k·stride + size, len))`; chunking stops
/// at the first chunk that reaches the end of the document.
pub fn chunk_document(
    doc_id: &str,
    text: &str,
    cfg: &ChunkingConfig,
) -> Result<Vec<DocumentChunk>, PipelineError> {
    cfg.validate()?;
    if text.is_empty() {
        return Err(PipelineError::EmptyDocument(doc_id.to_string()));
    }
    // byte offset of every char boundary, plus the end
    let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    let len = boundaries.len();
    boundaries.push(text.len());

    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + cfg.size).min(len);
        chunks.push(DocumentChunk {
            doc_id: doc_id.to_string(),
            index: chunks.len(),
            text: text[boundaries[start]..boundaries[end]].to_string(),
            start,
            end,
        });
        if end == len {
            return Ok(chunks);
        }
        start += cfg.stride();
    }
}
