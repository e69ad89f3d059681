use rand::seq::SliceRandom;

use super::PipelineError;
use crate::rng;

/// Seeded shuffle; the first `holdout` items become the test set.
/// Returns `(train, test)`.
pub fn holdout_split<T>(mut items: Vec<T>, holdout: usize, seed: u64) -> Result<(Vec<T>, Vec<T>), PipelineError> {
    if items.len() <= holdout {
        return Err(PipelineError::InsufficientExamples {
            holdout,
            available: items.len(),
        });
    }
    items.shuffle(&mut rng::seeded(seed));
    let train = items.split_off(holdout);
    Ok((train, items))
}
