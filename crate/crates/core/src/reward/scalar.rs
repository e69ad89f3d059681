use chrono::NaiveDate;

use super::{RewardError, SimilarityConfig};
use crate::dates::days_between;

/// `max(0, 1 − |p − g| / max(|g|, ε))`, and 0 once the relative deviation
/// reaches `numeric_rel_cap`. The gold value is the reference.
pub fn numeric_similarity(pred: f64, gold: f64, cfg: &SimilarityConfig) -> Result<f64, RewardError> {
    if !pred.is_finite() || !gold.is_finite() {
        return Err(RewardError::NonFiniteNumber);
    }
    let deviation = (pred - gold).abs() / gold.abs().max(cfg.numeric_floor_epsilon);
    if deviation >= cfg.numeric_rel_cap {
        return Ok(0.0);
    }
    Ok((1.0 - deviation).max(0.0))
}

/// `2^(−|Δdays| / half_life)`.
pub fn date_similarity(pred: NaiveDate, gold: NaiveDate, cfg: &SimilarityConfig) -> f64 {
    let delta = days_between(pred, gold) as f64;
    (-delta / cfg.date_half_life_days).exp2()
}

pub fn boolean_similarity(pred: bool, gold: bool) -> f64 {
    if pred == gold {
        1.0
    } else {
        0.0
    }
}
