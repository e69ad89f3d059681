//! Task loading, generation, evaluation reports and report comparison.

mod config;
mod generate;
mod report;
mod tasks;

use thiserror::Error;

pub use config::{LlmConfig, RunConfig};
pub use generate::{ChatGenerator, GenerationClient, GenerationError, ReplayGenerator};
pub use report::{
    compare_reports, config_fingerprint, evaluate, format_relative, score_single, Comparison, ComparisonRow,
    EvalSettings, EvaluationReport, TaskScore,
};
pub use tasks::{load_tasks, parse_tasks, TaskRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: gold does not conform to schema: {message}")]
    GoldSchemaMismatch { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("scoring task `{task_id}` failed: {message}")]
    Scoring { task_id: String, message: String },
    #[error("report `{model_name}` has fingerprint {found}, expected {expected}; scores from different configurations are not comparable")]
    FingerprintMismatch {
        expected: String,
        found: String,
        model_name: String,
    },
}
