//! The semantic reward: mean type-aware field similarity over the schema's
//! properties, gated on the output parsing to a JSON object that carries
//! every property.

mod matching;
mod scalar;

pub use matching::{optimal_matching, MatchPair, MatchSet, TIE_EPSILON};
pub use scalar::{boolean_similarity, date_similarity, numeric_similarity};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dates;
use crate::embedding::{cosine, EmbeddingError, EmbeddingProvider};
use crate::schema::{
    parse_model_output, validate_output, ExtractionOutput, ExtractionSchema, FieldValue, ParseMode,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(#[from] EmbeddingError),
    #[error("non-finite number in comparison")]
    NonFiniteNumber,
    #[error("gold output lacks schema property `{0}`")]
    GoldMissingField(String),
    #[error("invalid similarity config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    /// List items pair up only when their similarity is strictly above this.
    pub tau: f64,
    pub date_half_life_days: f64,
    /// Relative deviation at which numeric similarity reaches zero.
    pub numeric_rel_cap: f64,
    /// Lower bound on the numeric denominator `|gold|`.
    pub numeric_floor_epsilon: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            tau: 0.35,
            date_half_life_days: 365.0,
            numeric_rel_cap: 1.0,
            numeric_floor_epsilon: 1e-9,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |m: &str| Err(RewardError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(self.date_half_life_days > 0.0) {
            return bad("date_half_life_days must be positive");
        }
        if !(self.numeric_rel_cap > 0.0) {
            return bad("numeric_rel_cap must be positive");
        }
        if !(self.numeric_floor_epsilon > 0.0) {
            return bad("numeric_floor_epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    Passed,
    InvalidJson,
    MissingRequired,
}

impl Gate {
    /// True when the output parsed to a JSON object.
    pub fn json_valid(self) -> bool {
        self != Gate::InvalidJson
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub total: f64,
    pub per_field: IndexMap<String, f64>,
    pub gate: Gate,
}

impl RewardBreakdown {
    pub fn failed(gate: Gate) -> Self {
        RewardBreakdown {
            total: 0.0,
            per_field: IndexMap::new(),
            gate,
        }
    }
}

/// Scores a raw model response against the gold output, parsing leniently.
pub fn compute_reward(
    raw_prediction: &str,
    gold: &ExtractionOutput,
    schema: &ExtractionSchema,
    cfg: &SimilarityConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<RewardBreakdown, RewardError> {
    compute_reward_with_mode(raw_prediction, ParseMode::Lenient, gold, schema, cfg, embedder)
}

pub fn compute_reward_with_mode(
    raw_prediction: &str,
    mode: ParseMode,
    gold: &ExtractionOutput,
    schema: &ExtractionSchema,
    cfg: &SimilarityConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<RewardBreakdown, RewardError> {
    let Ok(prediction) = parse_model_output(raw_prediction, mode) else {
        return Ok(RewardBreakdown::failed(Gate::InvalidJson));
    };
    score_output(&prediction, gold, schema, cfg, embedder)
}

/// Scores an already parsed prediction; applies the required-fields gate.
///
/// With zero schema properties a passing output scores 1.0.
pub fn score_output(
    prediction: &ExtractionOutput,
    gold: &ExtractionOutput,
    schema: &ExtractionSchema,
    cfg: &SimilarityConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<RewardBreakdown, RewardError> {
    if !validate_output(prediction, schema).passes_gate() {
        return Ok(RewardBreakdown::failed(Gate::MissingRequired));
    }
    if embedder.descriptor().cache_capacity > 0 {
        prefetch_embeddings(prediction, gold, schema, embedder)?;
    }
    let mut per_field = IndexMap::with_capacity(schema.len());
    for spec in &schema.properties {
        let gold_value = gold
            .get(&spec.name)
            .ok_or_else(|| RewardError::GoldMissingField(spec.name.clone()))?;
        let score = field_similarity(prediction.get(&spec.name), gold_value, cfg, embedder)?;
        per_field.insert(spec.name.clone(), score);
    }
    let total = if per_field.is_empty() {
        1.0
    } else {
        per_field.values().sum::<f64>() / per_field.len() as f64
    };
    Ok(RewardBreakdown {
        total,
        per_field,
        gate: Gate::Passed,
    })
}

// Warms the embedder's memo with every string leaf in one batched call.
fn prefetch_embeddings(
    prediction: &ExtractionOutput,
    gold: &ExtractionOutput,
    schema: &ExtractionSchema,
    embedder: &dyn EmbeddingProvider,
) -> Result<(), RewardError> {
    let mut texts: Vec<&str> = Vec::new();
    for name in schema.property_names() {
        for out in [prediction, gold] {
            if let Some(v) = out.get(name) {
                collect_strings(v, &mut texts);
            }
        }
    }
    texts.sort_unstable();
    texts.dedup();
    if !texts.is_empty() {
        embedder.embed(&texts)?;
    }
    Ok(())
}

fn collect_strings<'a>(value: &'a FieldValue, out: &mut Vec<&'a str>) {
    match value {
        FieldValue::Text(s) => out.push(s),
        FieldValue::List(items) => items.iter().for_each(|v| collect_strings(v, out)),
        FieldValue::Object(map) => map.values().for_each(|v| collect_strings(v, out)),
        _ => {}
    }
}

/// Type-aware similarity of a predicted value to a gold value, in `[0, 1]`.
///
/// Dispatch, in order: absent or null prediction scores 0 (1 if gold is
/// also null); if either side is a list the other is promoted to a
/// singleton and the lists are matched; two numbers use relative
/// difference; a boolean matches a boolean or its own `true`/`false`
/// spelling; two date strings use exponential decay; two objects average
/// over the gold object's keys; everything else is compared as text.
pub fn field_similarity(
    pred: Option<&FieldValue>,
    gold: &FieldValue,
    cfg: &SimilarityConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<f64, RewardError> {
    let Some(pred) = pred else {
        return Ok(0.0);
    };
    use FieldValue as V;
    match (pred, gold) {
        (V::Null, V::Null) => Ok(1.0),
        (V::Null, _) | (_, V::Null) => Ok(0.0),
        (V::List(p), V::List(g)) => list_similarity(p, g, cfg, embedder),
        (V::List(p), g) => list_similarity(p, std::slice::from_ref(g), cfg, embedder),
        (p, V::List(g)) => list_similarity(std::slice::from_ref(p), g, cfg, embedder),
        (V::Number(p), V::Number(g)) => numeric_similarity(*p, *g, cfg),
        (V::Boolean(p), V::Boolean(g)) => Ok(boolean_similarity(*p, *g)),
        (V::Boolean(b), other) | (other, V::Boolean(b)) => {
            let spelled = matches!(other, V::Text(t) if t.trim().eq_ignore_ascii_case(if *b { "true" } else { "false" }));
            Ok(if spelled { 1.0 } else { 0.0 })
        }
        (V::Text(p), V::Text(g)) => match (dates::parse_date(p), dates::parse_date(g)) {
            (Some(pd), Some(gd)) => Ok(date_similarity(pd, gd, cfg)),
            _ => string_similarity(p, g, embedder),
        },
        (V::Object(p), V::Object(g)) => {
            if g.is_empty() {
                return Ok(1.0);
            }
            let mut sum = 0.0;
            for (key, gv) in g {
                sum += field_similarity(p.get(key), gv, cfg, embedder)?;
            }
            Ok(sum / g.len() as f64)
        }
        (p, g) => string_similarity(&p.canonical_text(), &g.canonical_text(), embedder),
    }
}

/// `2·Σ s_ij / (|P| + |G|)` over the optimal matching of items scoring
/// strictly above `tau`. Two empty lists score 1, one empty list scores 0.
pub fn list_similarity(
    predicted: &[FieldValue],
    gold: &[FieldValue],
    cfg: &SimilarityConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<f64, RewardError> {
    match (predicted.is_empty(), gold.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let mut sim = Vec::with_capacity(predicted.len());
    for p in predicted {
        let row = gold
            .iter()
            .map(|g| field_similarity(Some(p), g, cfg, embedder))
            .collect::<Result<Vec<_>, _>>()?;
        sim.push(row);
    }
    Ok(list_score(&sim, cfg.tau))
}

/// List score from a precomputed similarity matrix.
pub fn list_score(sim: &[Vec<f64>], tau: f64) -> f64 {
    let rows = sim.len();
    let cols = sim.first().map_or(0, Vec::len);
    if rows == 0 && cols == 0 {
        return 1.0;
    }
    let matched = optimal_matching(sim, tau).total();
    (2.0 * matched / (rows + cols) as f64).clamp(0.0, 1.0)
}

/// Cosine similarity of the two texts' embeddings clamped to `[0, 1]`;
/// identical strings score 1 without touching the embedder.
pub fn string_similarity(
    predicted: &str,
    gold: &str,
    embedder: &dyn EmbeddingProvider,
) -> Result<f64, RewardError> {
    if predicted == gold {
        return Ok(1.0);
    }
    let vectors = embedder.embed(&[predicted, gold])?;
    let c = cosine(&vectors[0], &vectors[1])?;
    Ok(c.clamp(0.0, 1.0))
}
