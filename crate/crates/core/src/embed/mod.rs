//! Embedding gateway: text to fixed-dimension vectors, plus token accounting.
//!
//! [`HttpEmbedder`] talks to any service exposing the common embeddings
//! endpoint shape; [`HashingEmbedder`] is a deterministic local stand-in used
//! for offline runs and tests.

mod hashing;
mod http;
mod tokens;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hashing::HashingEmbedder;
pub use http::HttpEmbedder;
pub use tokens::{heuristic_tokens, token_count, TokenError, Tokenizer, TokenizerConfig, TokenizerMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("no texts to embed")]
    EmptyInput,
    #[error("embedding service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("embedding service returned {expected}-dim vectors expected, got {got} (input {index})")]
    DimensionMismatch { expected: usize, got: usize, index: usize },
    #[error("{} of the inputs failed to embed: {message}", failed.len())]
    PartialFailure { failed: Vec<usize>, message: String },
    #[error("invalid embedding response: {0}")]
    InvalidResponse(String),
    #[error("embedding vector is empty or has non-finite values")]
    InvalidVector,
    #[error("embedding configuration: {0}")]
    Config(String),
}

/// A finite, non-empty embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidVector);
        }
        Ok(Self { values })
    }

    /// Narrows wire values to `f32`; values overflowing `f32` are rejected.
    pub fn from_f64(values: &[f64]) -> Result<Self, EmbedError> {
        Self::new(values.iter().map(|&v| v as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(values: Vec<f32>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

/// Anything that turns texts into vectors, one per input, in input order.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed(&[text.to_owned()])?;
        out.pop()
            .ok_or_else(|| EmbedError::InvalidResponse("no vector returned".into()))
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed(texts)
    }
}

impl<E: Embedder + ?Sized> Embedder for std::sync::Arc<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed(texts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingProvider {
    #[default]
    Http,
    Hashing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingProvider,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub expected_dim: usize,
    /// Input token limit of the embedding model, independent of `expected_dim`.
    pub em_token_limit: usize,
    pub batch_size: usize,
    pub max_parallel_requests: usize,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: EmbeddingProvider::Http,
            endpoint_url: None,
            model_name: "BAAI/bge-base-en-v1.5".to_owned(),
            expected_dim: 768,
            em_token_limit: 768,
            batch_size: 32,
            max_parallel_requests: 4,
            retry_backoff_ms: 500,
            timeout_secs: 120,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.expected_dim == 0 {
            return Err("expected_dim must be positive".into());
        }
        if self.em_token_limit == 0 {
            return Err("em_token_limit must be positive".into());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be positive".into());
        }
        if self.max_parallel_requests == 0 {
            return Err("max_parallel_requests must be positive".into());
        }
        Ok(())
    }

    /// Builds the configured embedder.
    pub fn build(&self) -> Result<Box<dyn Embedder>, EmbedError> {
        self.validate().map_err(EmbedError::Config)?;
        Ok(match self.provider {
            EmbeddingProvider::Http => Box::new(HttpEmbedder::new(self.clone())?),
            EmbeddingProvider::Hashing => Box::new(HashingEmbedder::new(self.expected_dim)),
        })
    }
}

/// Embeds with the HTTP gateway described by `config`.
pub fn embed_texts(texts: &[String], config: &EmbeddingConfig) -> Result<Vec<EmbeddingVector>, EmbedError> {
    HttpEmbedder::new(config.clone())?.embed(texts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_rejects_nan_and_empty() {
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f32::NAN]).is_err());
        assert!(EmbeddingVector::from_f64(&[1e300]).is_err());
        assert_eq!(EmbeddingVector::new(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn vector_serde_validates() {
        let v: EmbeddingVector = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert_eq!(v.dim(), 2);
        assert!(serde_json::from_str::<EmbeddingVector>("[]").is_err());
    }
}
