//! Builds token-budgeted training examples from extracted memories.
//!
//!     cargo run --example augment_corpus

use std::path::PathBuf;

use extractbench::pipeline::{
    augment_corpus, extract_corpus, load_corpus, ApproxTokenCounter, AugmentSource, AugmentationConfig,
    ChunkingConfig, FieldPool, MockExtractor,
};
use extractbench::template::PromptTemplate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mock");
    let docs = load_corpus(&fixtures.join("corpus"))?;
    let extracted = extract_corpus(
        &docs,
        &ChunkingConfig::default(),
        &MockExtractor::new(fixtures.join("responses")),
        2,
    )?;
    let sources: Vec<AugmentSource> = extracted
        .into_iter()
        .filter_map(|d| {
            let memory = d.result.ok()?;
            Some(AugmentSource {
                pool: FieldPool::from_memory(&memory, d.chunks.len()),
                doc_id: d.doc_id,
                chunks: d.chunks,
            })
        })
        .collect();

    // the mock documents are short, so widen the lower bound
    let cfg = AugmentationConfig {
        token_min: 300,
        rng_seed: 17,
        ..Default::default()
    };
    let outcomes = augment_corpus(&sources, 4, &cfg, &PromptTemplate::v1(), &ApproxTokenCounter, 2)?;
    for o in &outcomes {
        match o.example() {
            Some(ex) => {
                let chunks: Vec<_> = ex.chunks.iter().map(|c| c.index).collect();
                let fields: Vec<_> = ex.schema.property_names().collect();
                println!("{:<8} chunks {chunks:?} fields {fields:?} ~{} tokens", ex.example_id, ex.token_count);
            }
            None => println!("skipped draw (planned {} chunk(s))", o.plan().chunk_count),
        }
    }
    Ok(())
}
