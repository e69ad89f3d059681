use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use super::{GenerationClient, HarnessError, TaskRecord};
use crate::embedding::{EmbeddingProvider, ProviderDescriptor};
use crate::llm::DecodingParams;
use crate::reward::{compute_reward_with_mode, Gate, RewardBreakdown, SimilarityConfig};
use crate::schema::{parse_schema, ExtractionOutput, ParseMode};
use crate::template::PromptTemplate;

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub model_name: String,
    pub similarity: SimilarityConfig,
    pub parse_mode: ParseMode,
    pub template: PromptTemplate,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            model_name: "model".into(),
            similarity: SimilarityConfig::default(),
            parse_mode: ParseMode::Lenient,
            template: PromptTemplate::v1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task_id: String,
    pub reward: f64,
    pub gate: Gate,
    pub per_field: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_name: String,
    pub task_count: usize,
    pub mean_reward: f64,
    pub json_validity: f64,
    pub failures: usize,
    pub config_fingerprint: String,
    pub template_version: String,
    pub decoding: Option<DecodingParams>,
    pub per_task: Vec<TaskScore>,
}

impl EvaluationReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    similarity: &'a SimilarityConfig,
    embedder: &'a ProviderDescriptor,
    parse_mode: ParseMode,
    template_version: &'a str,
}

/// XXH64 (seed 0), as 16 hex digits, of the compact JSON of the similarity
/// config, embedder descriptor, parse mode and template version.
pub fn config_fingerprint(
    similarity: &SimilarityConfig,
    embedder: &ProviderDescriptor,
    parse_mode: ParseMode,
    template_version: &str,
) -> String {
    let canonical = serde_json::to_string(&FingerprintInput {
        similarity,
        embedder,
        parse_mode,
        template_version,
    })
    .expect("fingerprint input serializes");
    format!("{:016x}", xxh64(canonical.as_bytes(), 0))
}

/// Generates and scores every task on a pool of `workers` threads.
///
/// A failed generation scores 0 with gate `InvalidJson` and is counted in
/// `failures`. Embedder errors abort the run.
pub fn evaluate(
    tasks: &[TaskRecord],
    generator: &dyn GenerationClient,
    settings: &EvalSettings,
    embedder: &dyn EmbeddingProvider,
    workers: usize,
) -> Result<EvaluationReport, HarnessError> {
    settings
        .similarity
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let score_task = |task: &TaskRecord| -> Result<TaskScore, HarnessError> {
        let prompt = settings.template.render(&task.schema.to_json_string(), &task.document);
        match generator.generate(task, &prompt) {
            Ok(raw) => {
                let b = compute_reward_with_mode(
                    &raw,
                    settings.parse_mode,
                    &task.gold,
                    &task.schema,
                    &settings.similarity,
                    embedder,
                )
                .map_err(|e| HarnessError::Scoring {
                    task_id: task.task_id.clone(),
                    message: e.to_string(),
                })?;
                Ok(TaskScore {
                    task_id: task.task_id.clone(),
                    reward: b.total,
                    gate: b.gate,
                    per_field: b.per_field,
                    error: None,
                })
            }
            Err(e) => Ok(TaskScore {
                task_id: task.task_id.clone(),
                reward: 0.0,
                gate: Gate::InvalidJson,
                per_field: IndexMap::new(),
                error: Some(e.message),
            }),
        }
    };
    let mut per_task = pool.install(|| tasks.par_iter().map(score_task).collect::<Result<Vec<_>, _>>())?;
    per_task.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    let n = per_task.len();
    let (mean_reward, json_validity) = if n == 0 {
        (0.0, 0.0)
    } else {
        let sum: f64 = per_task.iter().map(|t| t.reward).sum();
        let valid = per_task.iter().filter(|t| t.gate.json_valid()).count();
        (sum / n as f64, valid as f64 / n as f64)
    };
    Ok(EvaluationReport {
        model_name: settings.model_name.clone(),
        task_count: n,
        mean_reward,
        json_validity,
        failures: per_task.iter().filter(|t| t.error.is_some()).count(),
        config_fingerprint: config_fingerprint(
            &settings.similarity,
            &embedder.descriptor(),
            settings.parse_mode,
            settings.template.version(),
        ),
        template_version: settings.template.version().to_string(),
        decoding: generator.decoding(),
        per_task,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model_name: String,
    pub mean_reward: f64,
    pub json_validity: f64,
    /// Mean reward minus the baseline's.
    pub delta: f64,
    /// `(mean − baseline) / baseline`; `None` for a zero baseline.
    pub relative_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub config_fingerprint: String,
    /// The first row is the baseline.
    pub rows: Vec<ComparisonRow>,
}

pub fn format_relative(rel: Option<f64>) -> String {
    match rel {
        Some(r) => format!("{:+.1}%", r * 100.0),
        None => "n/a".into(),
    }
}

impl Comparison {
    /// Aligned plain-text table.
    pub fn render(&self) -> String {
        let header = ["model", "mean_reward", "json_validity", "delta", "relative"];
        let mut cells: Vec<[String; 5]> = vec![header.map(String::from)];
        for r in &self.rows {
            cells.push([
                r.model_name.clone(),
                format!("{:.3}", r.mean_reward),
                format!("{:.1}%", r.json_validity * 100.0),
                format!("{:+.3}", r.delta),
                format_relative(r.relative_improvement),
            ]);
        }
        let widths: Vec<usize> = (0..5)
            .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(line, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(line, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

/// Compares reports against the first one. All must share a fingerprint.
pub fn compare_reports(reports: &[EvaluationReport]) -> Result<Comparison, HarnessError> {
    let Some(base) = reports.first() else {
        return Err(HarnessError::Config("compare needs at least two reports".into()));
    };
    if reports.len() < 2 {
        return Err(HarnessError::Config("compare needs at least two reports".into()));
    }
    if let Some(other) = reports.iter().find(|r| r.config_fingerprint != base.config_fingerprint) {
        return Err(HarnessError::FingerprintMismatch {
            expected: base.config_fingerprint.clone(),
            found: other.config_fingerprint.clone(),
            model_name: other.model_name.clone(),
        });
    }
    let rows = reports
        .iter()
        .map(|r| {
            let delta = r.mean_reward - base.mean_reward;
            ComparisonRow {
                model_name: r.model_name.clone(),
                mean_reward: r.mean_reward,
                json_validity: r.json_validity,
                delta,
                relative_improvement: (base.mean_reward != 0.0).then(|| delta / base.mean_reward),
            }
        })
        .collect();
    Ok(Comparison {
        config_fingerprint: base.config_fingerprint.clone(),
        rows,
    })
}

/// Scores one prediction file against a schema file and a gold file.
pub fn score_single(
    schema_path: &Path,
    gold_path: &Path,
    prediction_path: &Path,
    similarity: &SimilarityConfig,
    parse_mode: ParseMode,
    embedder: &dyn EmbeddingProvider,
) -> Result<RewardBreakdown, HarnessError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| HarnessError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })
    };
    let schema = parse_schema(&read(schema_path)?).map_err(|e| HarnessError::Input(format!("{}: {e}", schema_path.display())))?;
    let gold_value: serde_json::Value = serde_json::from_str(&read(gold_path)?)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", gold_path.display())))?;
    let gold = ExtractionOutput::from_json(&gold_value)
        .ok_or_else(|| HarnessError::Input(format!("{}: gold must be a JSON object", gold_path.display())))?;
    let prediction = read(prediction_path)?;
    compute_reward_with_mode(&prediction, parse_mode, &gold, &schema, similarity, embedder).map_err(|e| {
        HarnessError::Scoring {
            task_id: prediction_path.display().to_string(),
            message: e.to_string(),
        }
    })
}
