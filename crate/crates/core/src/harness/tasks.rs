use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::schema::{validate_output, ExtractionOutput, ExtractionSchema};

/// One benchmark task. On disk, one JSONL line:
/// `{"task_id", "schema", "document", "gold", "domain"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub schema: ExtractionSchema,
    pub document: String,
    pub gold: ExtractionOutput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

pub fn load_tasks(path: &Path) -> Result<Vec<TaskRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_tasks(&text)
}

/// Parses task JSONL. Blank lines are skipped; line numbers are 1-based.
pub fn parse_tasks(text: &str) -> Result<Vec<TaskRecord>, HarnessError> {
    let mut tasks = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| HarnessError::MalformedRecord { line: line_no, message };
        let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let task: TaskRecord = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
        if !ids.insert(task.task_id.clone()) {
            return Err(malformed(format!("duplicate task_id `{}`", task.task_id)));
        }
        check_gold(&task).map_err(|message| HarnessError::GoldSchemaMismatch { line: line_no, message })?;
        tasks.push(task);
    }
    Ok(tasks)
}

fn check_gold(task: &TaskRecord) -> Result<(), String> {
    let report = validate_output(&task.gold, &task.schema);
    if let Some(field) = report.missing_required.first() {
        return Err(format!("gold lacks schema field `{field}`"));
    }
    if let Some(m) = report.type_mismatches.first() {
        return Err(format!("gold field `{}` should be {}, found {}", m.field, m.expected, m.observed.as_str()));
    }
    if let Some(extra) = task.gold.values.keys().find(|k| task.schema.property(k).is_none()) {
        return Err(format!("gold field `{extra}` is not in the schema"));
    }
    Ok(())
}
