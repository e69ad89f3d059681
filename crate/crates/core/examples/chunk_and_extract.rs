//! Chunks the bundled mock corpus and extracts it chunk by chunk, printing
//! the memory after each document.
//!
//!     cargo run --example chunk_and_extract

use std::path::PathBuf;

use extractbench::pipeline::{extract_corpus, load_corpus, ChunkingConfig, MockExtractor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mock");
    let docs = load_corpus(&fixtures.join("corpus"))?;
    let extractor = MockExtractor::new(fixtures.join("responses"));
    let cfg = ChunkingConfig::default();

    for doc in extract_corpus(&docs, &cfg, &extractor, 2)? {
        println!("{} ({} chunks)", doc.doc_id, doc.chunks.len());
        for c in &doc.chunks {
            println!("  chunk {}: chars {}..{}", c.index, c.start, c.end);
        }
        match doc.result {
            Ok(memory) => {
                for r in memory.records() {
                    println!("  [{}] {} = {}", r.source_chunk, r.field, r.value.to_json());
                }
            }
            Err(e) => println!("  failed: {e}"),
        }
    }
    Ok(())
}
