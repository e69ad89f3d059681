#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::Value;

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(path)
}

/// Oracle scores for the golden fixture, keyed by task id.
pub fn golden_oracle_scores() -> BTreeMap<String, oracle::OracleScore> {
    let tasks = std::fs::read_to_string(fixture("golden/tasks.jsonl")).unwrap();
    let preds = std::fs::read_to_string(fixture("golden/predictions.jsonl")).unwrap();
    let preds: BTreeMap<String, String> = preds
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (v["task_id"].as_str().unwrap().to_string(), v["prediction"].as_str().unwrap().to_string())
        })
        .collect();
    tasks
        .lines()
        .map(|l| {
            let t: Value = serde_json::from_str(l).unwrap();
            let id = t["task_id"].as_str().unwrap().to_string();
            let s = oracle::score(&preds[&id], &t["schema"], &t["gold"]);
            (id, s)
        })
        .collect()
}
