use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DocumentChunk, ExtractionMemory, PipelineError, TokenCounter};
use crate::rng::{self, Rng};
use crate::schema::{combine_schemas, ExtractionOutput, ExtractionSchema, FieldSpec, FieldValue};
use crate::template::PromptTemplate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub cross_chunk_probability: f64,
    /// `(chunk count, weight)` pairs for cross-chunk draws.
    pub chunk_count_weights: Vec<(usize, f64)>,
    pub fields_per_chunk: (usize, usize),
    pub token_min: usize,
    pub token_max: usize,
    /// Resampling attempts after the first when the budget is missed.
    pub max_retries: usize,
    pub rng_seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            cross_chunk_probability: 0.7,
            chunk_count_weights: vec![(2, 0.5), (3, 0.3), (4, 0.2)],
            fields_per_chunk: (1, 3),
            token_min: 532,
            token_max: 1900,
            max_retries: 8,
            rng_seed: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.cross_chunk_probability) {
            return bad(format!("cross_chunk_probability {} outside [0, 1]", self.cross_chunk_probability));
        }
        let total: f64 = self.chunk_count_weights.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 || self.chunk_count_weights.iter().any(|&(n, w)| n == 0 || w < 0.0) {
            return bad("chunk_count_weights must be non-negative, for counts >= 1, and sum to 1".into());
        }
        let (lo, hi) = self.fields_per_chunk;
        if lo == 0 || lo > hi {
            return bad(format!("fields_per_chunk ({lo}, {hi}) must satisfy 1 <= min <= max"));
        }
        if self.token_min >= self.token_max {
            return bad(format!("token_min {} must be below token_max {}", self.token_min, self.token_max));
        }
        Ok(())
    }
}

/// Fields available for sampling, indexed like the document's chunks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldPool {
    pub per_chunk: Vec<Vec<(FieldSpec, FieldValue)>>,
}

impl FieldPool {
    pub fn from_memory(memory: &ExtractionMemory, chunk_count: usize) -> Self {
        FieldPool {
            per_chunk: memory
                .by_chunk(chunk_count)
                .into_iter()
                .map(|records| records.into_iter().map(|r| (r.spec.clone(), r.value.clone())).collect())
                .collect(),
        }
    }

    fn eligible(&self) -> Vec<usize> {
        (0..self.per_chunk.len()).filter(|&i| !self.per_chunk[i].is_empty()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub cross_chunk_drawn: bool,
    pub chunk_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub example_id: String,
    pub doc_id: String,
    pub schema: ExtractionSchema,
    pub chunks: Vec<DocumentChunk>,
    pub gold: ExtractionOutput,
    pub token_count: usize,
    pub cross_chunk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AugmentOutcome {
    Example { example: AugmentedExample, plan: SamplingPlan },
    Skip { plan: SamplingPlan, attempts: usize },
}

impl AugmentOutcome {
    pub fn plan(&self) -> SamplingPlan {
        match self {
            AugmentOutcome::Example { plan, .. } | AugmentOutcome::Skip { plan, .. } => *plan,
        }
    }

    pub fn example(&self) -> Option<&AugmentedExample> {
        match self {
            AugmentOutcome::Example { example, .. } => Some(example),
            AugmentOutcome::Skip { .. } => None,
        }
    }
}

/// Draws the cross-chunk coin and the chunk count. Counts above `available`
/// are dropped and the remaining weights renormalized; with nothing left the
/// draw degrades to a single chunk.
pub fn draw_plan(available: usize, cfg: &AugmentationConfig, rng: &mut Rng) -> SamplingPlan {
    let cross_chunk_drawn = rng.gen::<f64>() < cfg.cross_chunk_probability;
    if !cross_chunk_drawn {
        return SamplingPlan {
            cross_chunk_drawn,
            chunk_count: 1,
        };
    }
    let options: Vec<(usize, f64)> = cfg
        .chunk_count_weights
        .iter()
        .copied()
        .filter(|&(n, w)| n <= available && w > 0.0)
        .collect();
    let chunk_count = match WeightedIndex::new(options.iter().map(|&(_, w)| w)) {
        Ok(dist) => options[dist.sample(rng)].0,
        Err(_) => 1,
    };
    SamplingPlan {
        cross_chunk_drawn,
        chunk_count,
    }
}

/// One augmentation draw for a document.
#[allow(clippy::too_many_arguments)]
pub fn augment(
    example_id: &str,
    doc_id: &str,
    chunks: &[DocumentChunk],
    pool: &FieldPool,
    cfg: &AugmentationConfig,
    template: &PromptTemplate,
    counter: &dyn TokenCounter,
    rng: &mut Rng,
) -> Result<AugmentOutcome, PipelineError> {
    let eligible = pool.eligible();
    if eligible.is_empty() || pool.per_chunk.len() != chunks.len() {
        return Err(PipelineError::NoFields(doc_id.to_string()));
    }
    let plan = draw_plan(eligible.len(), cfg, rng);
    let attempts = 1 + cfg.max_retries;
    for _ in 0..attempts {
        let mut picked: Vec<usize> = sample(rng, eligible.len(), plan.chunk_count)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        picked.sort_unstable();

        let mut parts = Vec::new();
        let mut values = Vec::new();
        for &c in &picked {
            let available = &pool.per_chunk[c];
            let (lo, hi) = cfg.fields_per_chunk;
            let hi = hi.min(available.len());
            let take = if lo >= hi { hi } else { rng.gen_range(lo..=hi) };
            let mut fields: Vec<usize> = sample(rng, available.len(), take).into_vec();
            fields.sort_unstable();
            for f in fields {
                let (spec, value) = &available[f];
                parts.push(ExtractionSchema {
                    properties: vec![spec.clone()],
                });
                values.push((spec.name.clone(), value.clone()));
            }
        }
        let schema = combine_schemas(&parts).schema;
        let mut gold = ExtractionOutput::new();
        for (name, value) in values {
            if gold.get(&name).is_none() {
                gold.insert(name, value);
            }
        }
        let selected: Vec<DocumentChunk> = picked.iter().map(|&c| chunks[c].clone()).collect();
        let token_count = super::count_tokens(&schema, &selected, &gold, template, counter)?;
        if (cfg.token_min..=cfg.token_max).contains(&token_count) {
            return Ok(AugmentOutcome::Example {
                example: AugmentedExample {
                    example_id: example_id.to_string(),
                    doc_id: doc_id.to_string(),
                    schema,
                    chunks: selected,
                    gold,
                    token_count,
                    cross_chunk: plan.chunk_count > 1,
                },
                plan,
            });
        }
    }
    Ok(AugmentOutcome::Skip { plan, attempts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSource {
    pub doc_id: String,
    pub chunks: Vec<DocumentChunk>,
    pub pool: FieldPool,
}

/// `draws_per_doc` draws for every document that has at least one field,
/// in document order. Each document uses its own stream derived from the
/// seed and its id, so the result does not depend on `workers`.
pub fn augment_corpus(
    sources: &[AugmentSource],
    draws_per_doc: usize,
    cfg: &AugmentationConfig,
    template: &PromptTemplate,
    counter: &dyn TokenCounter,
    workers: usize,
) -> Result<Vec<AugmentOutcome>, PipelineError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    let per_doc: Vec<Result<Vec<AugmentOutcome>, PipelineError>> = pool.install(|| {
        sources
            .par_iter()
            .filter(|s| !s.pool.eligible().is_empty())
            .map(|s| {
                let mut rng = rng::stream(cfg.rng_seed, &s.doc_id);
                (0..draws_per_doc)
                    .map(|i| {
                        let id = format!("{}#{i}", s.doc_id);
                        augment(&id, &s.doc_id, &s.chunks, &s.pool, cfg, template, counter, &mut rng)
                    })
                    .collect()
            })
            .collect()
    });
    let mut out = Vec::new();
    for outcomes in per_doc {
        out.extend(outcomes?);
    }
    Ok(out)
}
