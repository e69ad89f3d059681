//! Scoring and data tooling for schema-guided document extraction.
//!
//! * [`schema`]: the extraction-schema dialect, typed values, and the
//!   JSON-validity / required-fields gate.
//! * [`reward`]: the semantic reward with type-aware field similarity and
//!   optimal list matching.
//! * [`embedding`]: sentence-embedding providers (offline trigram hashing or
//!   an HTTP `/embed` service) with an LRU memo.
//! * [`pipeline`]: chunking, memory-preserving sequential extraction, and
//!   token-budgeted augmentation.
//! * [`training`]: the fine-tuning and policy-optimization formulas as pure
//!   functions.
//! * [`harness`]: task loading, replayed or live generation, evaluation
//!   reports, and report comparison.

pub mod dates;
pub mod embedding;
pub mod harness;
mod http;
pub mod llm;
pub mod pipeline;
pub mod reward;
pub mod rng;
pub mod schema;
pub mod template;
pub mod training;
