use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use super::{heuristic_tokens, EmbedError, Embedder, EmbeddingConfig, EmbeddingVector, Tokenizer};

/// Client for a JSON embeddings endpoint.
///
/// Request: `{"model": name, "input": [text, ...]}`.
/// Response: `{"data": [{"index": i, "embedding": [f64, ...]}, ...]}`.
///
/// Inputs are sent in batches of `batch_size` with at most
/// `max_parallel_requests` batches in flight. A failed batch is retried once
/// after `retry_backoff_ms`.
#[derive(Debug)]
pub struct HttpEmbedder {
    config: EmbeddingConfig,
    url: String,
    agent: ureq::Agent,
    tokenizer: Option<Tokenizer>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f64>,
}

type BatchResult = Result<Vec<EmbeddingVector>, BatchError>;

enum BatchError {
    Transport(String),
    Status(u16),
    Invalid(String),
    Dimension { got: usize, offset: usize },
}

impl HttpEmbedder {
    pub fn new(config: EmbeddingConfig) -> Result<Self, EmbedError> {
        config.validate().map_err(EmbedError::Config)?;
        let url = config
            .endpoint_url
            .clone()
            .ok_or_else(|| EmbedError::Config("embedding.endpoint_url is not set".into()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            config,
            url,
            agent,
            tokenizer: None,
        })
    }

    /// Uses `tokenizer` for the over-length warnings instead of the 4 chars/token heuristic.
    pub fn with_tokenizer(mut self, tokenizer: Tokenizer) -> Self {
        self.tokenizer = Some(tokenizer);
        self
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    /// Indexes of texts whose token count exceeds the embedding model limit.
    ///
    /// These are still sent; the service truncates them.
    pub fn over_limit(&self, texts: &[String]) -> Vec<usize> {
        let limit = self.config.em_token_limit;
        texts
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let n = match &self.tokenizer {
                    Some(tok) => tok.count(t).unwrap_or(0),
                    None => heuristic_tokens(t.chars().count(), 4.0),
                };
                n > limit
            })
            .map(|(i, _)| i)
            .collect()
    }

    fn post_batch(&self, batch: &[String]) -> Result<Vec<EmbeddingVector>, BatchError> {
        let body = serde_json::json!({ "model": self.config.model_name, "input": batch });
        let mut response = self.agent.post(&self.url).send_json(body).map_err(|e| match e {
            ureq::Error::StatusCode(code) => BatchError::Status(code),
            other => BatchError::Transport(other.to_string()),
        })?;
        let parsed: EmbeddingResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| BatchError::Invalid(e.to_string()))?;
        if parsed.data.len() != batch.len() {
            return Err(BatchError::Invalid(format!(
                "expected {} embeddings, got {}",
                batch.len(),
                parsed.data.len()
            )));
        }
        let mut slots: Vec<Option<EmbeddingVector>> = vec![None; batch.len()];
        for item in parsed.data {
            if item.embedding.len() != self.config.expected_dim {
                return Err(BatchError::Dimension {
                    got: item.embedding.len(),
                    offset: item.index,
                });
            }
            let slot = slots
                .get_mut(item.index)
                .ok_or_else(|| BatchError::Invalid(format!("index {} out of range", item.index)))?;
            *slot = Some(EmbeddingVector::from_f64(&item.embedding).map_err(|e| BatchError::Invalid(e.to_string()))?);
        }
        slots
            .into_iter()
            .map(|s| s.ok_or_else(|| BatchError::Invalid("missing index in response".into())))
            .collect()
    }

    fn post_with_retry(&self, batch: &[String]) -> Result<Vec<EmbeddingVector>, BatchError> {
        match self.post_batch(batch) {
            Err(BatchError::Transport(_) | BatchError::Status(_) | BatchError::Invalid(_)) => {
                std::thread::sleep(Duration::from_millis(self.config.retry_backoff_ms));
                self.post_batch(batch)
            }
            other => other,
        }
    }
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.config.expected_dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        for index in self.over_limit(texts) {
            log::warn!(
                "input {index} exceeds the embedding token limit of {}; the service will truncate it",
                self.config.em_token_limit
            );
        }

        let batches: Vec<&[String]> = texts.chunks(self.config.batch_size).collect();
        let results: Mutex<Vec<Option<BatchResult>>> = Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.max_parallel_requests.min(batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(batch) = batches.get(i) else { break };
                    let outcome = self.post_with_retry(batch);
                    results.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(outcome);
                });
            }
        });

        let results = results.into_inner().unwrap_or_else(|p| p.into_inner());
        let mut vectors = Vec::with_capacity(texts.len());
        let mut failed = Vec::new();
        let mut transport_only = true;
        let mut last_message = String::new();
        for (i, outcome) in results.into_iter().enumerate() {
            let base = i * self.config.batch_size;
            match outcome {
                Some(Ok(vs)) => vectors.extend(vs),
                Some(Err(BatchError::Dimension { got, offset })) => {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.config.expected_dim,
                        got,
                        index: base + offset,
                    })
                }
                Some(Err(err)) => {
                    let (message, transport) = match err {
                        BatchError::Transport(m) => (m, true),
                        BatchError::Status(code) => (format!("HTTP status {code}"), false),
                        BatchError::Invalid(m) => (m, false),
                        BatchError::Dimension { .. } => unreachable!(),
                    };
                    transport_only &= transport;
                    last_message = message;
                    failed.extend(base..base + batches[i].len());
                }
                None => {
                    transport_only = false;
                    last_message = "batch was not processed".into();
                    failed.extend(base..base + batches[i].len());
                }
            }
        }
        if failed.is_empty() {
            return Ok(vectors);
        }
        if failed.len() == texts.len() && transport_only {
            return Err(EmbedError::ServiceUnreachable(last_message));
        }
        Err(EmbedError::PartialFailure {
            failed,
            message: last_message,
        })
    }
}
