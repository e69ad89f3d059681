use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::extractor::{ChunkExtractor, ExtractionRequest};
use super::{chunk_document, ChunkingConfig, Document, DocumentChunk, PipelineError};
use crate::schema::{FieldSpec, FieldValue};

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRecord {
    pub field: String,
    pub value: FieldValue,
    pub source_chunk: usize,
    /// Spec the extractor declared for this field.
    pub spec: FieldSpec,
}

impl MemoryRecord {
    /// `(field, canonical value text)` with whitespace runs collapsed.
    pub fn identity(&self) -> (String, String) {
        let text = self.value.to_json().to_string();
        (self.field.clone(), text.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

/// Accumulated, deduplicated extractions of one document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractionMemory {
    records: Vec<MemoryRecord>,
    seen: HashSet<(String, String)>,
}

impl ExtractionMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, record: &MemoryRecord) -> bool {
        self.seen.contains(&record.identity())
    }

    /// JSON list of `{field, value, chunk}` handed to the extractor.
    pub fn to_json_string(&self) -> String {
        let items: Vec<_> = self
            .records
            .iter()
            .map(|r| json!({"field": r.field, "value": r.value.to_json(), "chunk": r.source_chunk}))
            .collect();
        serde_json::Value::Array(items).to_string()
    }

    /// Records grouped by the chunk that first produced them.
    pub fn by_chunk(&self, chunk_count: usize) -> Vec<Vec<&MemoryRecord>> {
        let mut out = vec![Vec::new(); chunk_count];
        for r in &self.records {
            if let Some(slot) = out.get_mut(r.source_chunk) {
                slot.push(r);
            }
        }
        out
    }
}

/// Ordered set union: records whose identity is already present are
/// dropped, the rest are appended in order.
pub fn merge_memory(mut memory: ExtractionMemory, new_records: impl IntoIterator<Item = MemoryRecord>) -> ExtractionMemory {
    for record in new_records {
        if memory.seen.insert(record.identity()) {
            memory.records.push(record);
        }
    }
    memory
}

/// Runs the extractor over one document's chunks in order, feeding each
/// call the memory accumulated from the previous chunks.
pub fn sequential_extract(
    doc_id: &str,
    chunks: &[DocumentChunk],
    extractor: &dyn ChunkExtractor,
) -> Result<ExtractionMemory, PipelineError> {
    let mut memory = ExtractionMemory::new();
    for chunk in chunks {
        let request = ExtractionRequest {
            doc_id,
            chunk,
            memory_json: memory.to_json_string(),
        };
        let fields = extractor
            .extract(&request)
            .map_err(|e| PipelineError::ExtractorFailure {
                doc_id: doc_id.to_string(),
                chunk: chunk.index,
                message: e.to_string(),
            })?;
        let records = fields.into_iter().map(|f| MemoryRecord {
            field: f.spec.name.clone(),
            value: f.value,
            source_chunk: chunk.index,
            spec: f.spec,
        });
        memory = merge_memory(memory, records);
    }
    Ok(memory)
}

#[derive(Debug, Serialize)]
pub struct DocumentExtraction {
    pub doc_id: String,
    #[serde(skip)]
    pub chunks: Vec<DocumentChunk>,
    #[serde(skip)]
    pub result: Result<ExtractionMemory, PipelineError>,
}

/// Chunks and extracts every document. Documents run in parallel on a pool
/// of `workers` threads; chunks within a document never do. Output order
/// follows input order.
pub fn extract_corpus(
    documents: &[Document],
    chunking: &ChunkingConfig,
    extractor: &dyn ChunkExtractor,
    workers: usize,
) -> Result<Vec<DocumentExtraction>, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    let run = |doc: &Document| {
        let (chunks, result) = match chunk_document(&doc.doc_id, &doc.text, chunking) {
            Ok(chunks) => {
                let result = sequential_extract(&doc.doc_id, &chunks, extractor);
                (chunks, result)
            }
            Err(e) => (Vec::new(), Err(e)),
        };
        DocumentExtraction {
            doc_id: doc.doc_id.clone(),
            chunks,
            result,
        }
    };
    Ok(pool.install(|| documents.par_iter().map(run).collect()))
}
