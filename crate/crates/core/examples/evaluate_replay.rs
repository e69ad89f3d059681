//! Evaluates recorded predictions on the golden task set and compares the
//! result with a weaker baseline.
//!
//!     cargo run --example evaluate_replay

use std::path::PathBuf;

use extractbench::embedding::Embedder;
use extractbench::harness::{compare_reports, evaluate, load_tasks, EvalSettings, ReplayGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    let tasks = load_tasks(&fixtures.join("tasks.jsonl"))?;
    let replay = ReplayGenerator::load(&fixtures.join("predictions.jsonl"))?;
    let settings = EvalSettings {
        model_name: "tuned".into(),
        ..Default::default()
    };
    let report = evaluate(&tasks, &replay, &settings, &Embedder::deterministic(), 4)?;
    println!(
        "{} tasks, mean reward {:.4}, JSON validity {:.0}%, fingerprint {}",
        report.task_count,
        report.mean_reward,
        report.json_validity * 100.0,
        report.config_fingerprint
    );
    let worst = report
        .per_task
        .iter()
        .min_by(|a, b| a.reward.total_cmp(&b.reward))
        .expect("non-empty");
    println!("lowest: {} ({:?}, {:.3})", worst.task_id, worst.gate, worst.reward);

    let mut baseline = report.clone();
    baseline.model_name = "baseline".into();
    baseline.mean_reward = 0.25;
    print!("{}", compare_reports(&[baseline, report])?.render());
    Ok(())
}
