//! Chunking, memory-preserving extraction, augmentation and splitting.

mod augment;
mod chunk;
mod corpus;
pub mod extractor;
mod memory;
mod split;
mod tokens;

use thiserror::Error;

pub use augment::{
    augment, augment_corpus, draw_plan, AugmentOutcome, AugmentSource, AugmentationConfig, AugmentedExample, FieldPool,
    SamplingPlan,
};
pub use chunk::{chunk_document, ChunkingConfig, DocumentChunk};
pub use corpus::{load_corpus, Document};
pub use extractor::{ChatExtractor, ChunkExtractor, ExtractedField, ExtractionRequest, ExtractorError, MockExtractor};
pub use memory::{extract_corpus, merge_memory, sequential_extract, DocumentExtraction, ExtractionMemory, MemoryRecord};
pub use split::holdout_split;
pub use tokens::{count_tokens, ApproxTokenCounter, TokenCounter, TokenizerError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("document `{0}` is empty")]
    EmptyDocument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("extractor failed on document `{doc_id}`, chunk {chunk}: {message}")]
    ExtractorFailure {
        doc_id: String,
        chunk: usize,
        message: String,
    },
    #[error(transparent)]
    TokenizerUnavailable(#[from] TokenizerError),
    #[error("need more than {holdout} examples for the holdout split, got {available}")]
    InsufficientExamples { holdout: usize, available: usize },
    #[error("document `{0}` has no extracted fields to sample")]
    NoFields(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    MalformedCorpus { path: String, line: usize, message: String },
}
