//! Scores a model response against a gold extraction.
//!
//!     cargo run --example score_extraction

use extractbench::embedding::Embedder;
use extractbench::reward::{compute_reward, SimilarityConfig};
use extractbench::schema::{parse_schema, ExtractionOutput};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = parse_schema(
        r#"{
            "type": "object",
            "properties": {
                "issuer": {"type": "string", "extraction_instruction": "Company issuing the notes"},
                "principal": {"type": "number"},
                "maturity": {"type": "string"},
                "secured": {"type": "boolean"},
                "underwriters": {"type": "array", "items": {"type": "string"}}
            }
        }"#,
    )?;
    let gold = ExtractionOutput::from_json(&json!({
        "issuer": "Northwind Holdings Inc.",
        "principal": 500.0,
        "maturity": "2031-06-15",
        "secured": false,
        "underwriters": ["Morgan Stanley", "Barclays", "BNP Paribas"]
    }))
    .expect("gold is an object");

    let response = r#"Here is the extraction:
```json
{
  "issuer": "Northwind Holdings",
  "principal": 450,
  "maturity": "June 15, 2032",
  "secured": "false",
  "underwriters": ["Barclays", "Morgan Stanley"]
}
```"#;

    let embedder = Embedder::deterministic();
    let breakdown = compute_reward(response, &gold, &schema, &SimilarityConfig::default(), &embedder)?;
    println!("gate: {:?}", breakdown.gate);
    for (field, s) in &breakdown.per_field {
        println!("  {field:<14} {s:.4}");
    }
    println!("reward: {:.4}", breakdown.total);

    let truncated = r#"{"issuer": "Northwind Holdings", "principal": 450"#;
    let gated = compute_reward(truncated, &gold, &schema, &SimilarityConfig::default(), &embedder)?;
    println!("truncated response: gate {:?}, reward {}", gated.gate, gated.total);
    Ok(())
}
