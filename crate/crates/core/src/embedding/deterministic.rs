use xxhash_rust::xxh64::xxh64;

use super::{BackendKind, EmbeddingBackend, EmbeddingError, DEFAULT_DIMENSION};

/// Seed for the feature hash. Changing it changes every vector.
pub const TRIGRAM_HASH_SEED: u64 = 0x6578_7472_6163_7430;

/// Character-trigram feature hashing.
///
/// Each trigram of Unicode scalar values is hashed with XXH64 under
/// [`TRIGRAM_HASH_SEED`]; the hash picks a bucket (`hash % dimension`) and a
/// sign (top bit). Texts shorter than three characters, including the empty
/// string, contribute their whole-text hash as a single feature. Strings
/// sharing trigrams get positively correlated vectors.
#[derive(Debug, Clone)]
pub struct DeterministicBackend {
    dimension: usize,
    seed: u64,
}

impl Default for DeterministicBackend {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl DeterministicBackend {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        DeterministicBackend {
            dimension,
            seed: TRIGRAM_HASH_SEED,
        }
    }

    fn add_feature(&self, acc: &mut [f64], bytes: &[u8]) {
        let h = xxh64(bytes, self.seed);
        let index = (h % self.dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[index] += sign;
    }

    pub fn features(&self, text: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dimension];
        let chars: Vec<char> = text.chars().collect();
        if chars.len() < 3 {
            self.add_feature(&mut acc, text.as_bytes());
            return acc;
        }
        let mut buf = String::with_capacity(12);
        for window in chars.windows(3) {
            buf.clear();
            buf.extend(window);
            self.add_feature(&mut acc, buf.as_bytes());
        }
        acc
    }
}

impl EmbeddingBackend for DeterministicBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Deterministic
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.features(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{cosine, Embedder, EmbeddingProvider};

    #[test]
    fn trigram_count_matches_length() {
        let b = DeterministicBackend::default();
        let f = b.features("abcdef");
        // four trigrams, each contributing a unit of mass (possibly cancelling)
        let mass: f64 = f.iter().map(|x| x.abs()).sum();
        assert!(mass <= 4.0 && mass > 0.0);
        assert_eq!(b.features("ab").iter().map(|x| x.abs()).sum::<f64>(), 1.0);
    }

    #[test]
    fn stable_across_instances() {
        let a = DeterministicBackend::default().features("Financial Conduct Authority");
        let b = DeterministicBackend::default().features("Financial Conduct Authority");
        assert_eq!(a, b);
    }

    #[test]
    fn graded_similarity() {
        let e = Embedder::deterministic();
        let v = e
            .embed(&["John Smith", "John P. Smith", "Quarterly revenue grew"])
            .unwrap();
        let near = cosine(&v[0], &v[1]).unwrap();
        let far = cosine(&v[0], &v[2]).unwrap();
        assert!(near > 0.5 && near < 1.0, "{near}");
        assert!(far < near);
    }
}
