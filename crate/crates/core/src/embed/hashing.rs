use super::{EmbedError, Embedder, EmbeddingVector};

/// Deterministic signed feature-hashing bag-of-words embedder.
///
/// Each lowercased alphanumeric word adds ±1 to one coordinate chosen by an
/// FNV-1a hash; the result is L2-normalized. Texts without words map to the
/// first basis vector so cosine stays defined.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            let h = fnv1a(&word.to_lowercase());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            acc[(h % self.dim as u64) as usize] += sign;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let values = if norm == 0.0 {
            let mut unit = vec![0.0f32; self.dim];
            unit[0] = 1.0;
            unit
        } else {
            acc.iter().map(|v| (v / norm) as f32).collect()
        };
        EmbeddingVector::new(values).expect("finite by construction")
    }
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}
