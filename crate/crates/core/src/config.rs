//! Engine configuration, stored as TOML.
//!
//! Every section and key is optional; missing values take the defaults below.
//!
//! | key | default |
//! |-----|---------|
//! | `split.chunk_size` | 700 |
//! | `split.chunk_overlap` | 200 |
//! | `retrieval.k` | 4 |
//! | `retrieval.use_mmr` | true |
//! | `retrieval.lambda` | 0.7 |
//! | `retrieval.fetch_n` | 4 × k |
//! | `retrieval.sim1`, `retrieval.sim2` | cosine |
//! | `chat.model_name` | llama-2-7b-chat |
//! | `chat.llm_token_limit` | 4096 |
//! | `chat.temperature` | 0.1 |
//! | `chat.reserved_for_answer` | 1024 |
//! | `chat.timeout_secs` | 300 |
//! | `embedding.provider` | http |
//! | `embedding.expected_dim` | 768 |
//! | `embedding.em_token_limit` | 768 |
//! | `embedding.batch_size` | 32 |
//! | `tokenizer.mode` | heuristic |
//! | `tokenizer.chars_per_token` | 4.0 |
//! | `store_path` | litrag-store |
//! | `template_name` | custom_citation |
//! | `mode` | mode2 |
//! | `max_subqueries` | 4 |
//!
//! `LITRAG_EMBEDDING_URL`, `LITRAG_CHAT_URL` and `LITRAG_TOKENIZER_URL`
//! override the endpoint URLs and nothing else.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainConfig, ChatConfig, Mode, RetrievalConfig, TemplateName, DEFAULT_MAX_SUBQUERIES};
use crate::embed::{EmbeddingConfig, TokenizerConfig};
use crate::ingest::SplitParams;

pub const DEFAULT_CONFIG_FILE: &str = "engine.conf";
pub const ENV_EMBEDDING_URL: &str = "LITRAG_EMBEDDING_URL";
pub const ENV_CHAT_URL: &str = "LITRAG_CHAT_URL";
pub const ENV_TOKENIZER_URL: &str = "LITRAG_TOKENIZER_URL";

/// Overlap band, in percent of the chunk size, that raises no advisory.
pub const OVERLAP_ADVISORY_BAND: (f64, f64) = (20.0, 40.0);

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub store_path: PathBuf,
    pub template_name: TemplateName,
    pub mode: Mode,
    pub max_subqueries: usize,
    /// Command for non-text files, e.g. `pdftotext {path} -`.
    pub extractor: Option<String>,
    pub embedding: EmbeddingConfig,
    pub tokenizer: TokenizerConfig,
    pub chat: ChatConfig,
    pub split: SplitParams,
    pub retrieval: RetrievalConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            store_path: PathBuf::from("litrag-store"),
            template_name: TemplateName::CustomCitation,
            mode: Mode::Mode2,
            max_subqueries: DEFAULT_MAX_SUBQUERIES,
            extractor: None,
            embedding: EmbeddingConfig::default(),
            tokenizer: TokenizerConfig::default(),
            chat: ChatConfig::default(),
            split: SplitParams::default(),
            retrieval: RetrievalConfig::default(),
        }
    }
}

/// A non-fatal remark about a loaded configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Advisory {
    pub field: String,
    pub message: String,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_owned(),
        message: message.into(),
    }
}

/// Sub-config validators report "name must ..." messages; the leading word is the key.
fn nested(section: &str, message: String) -> ConfigError {
    let key = message.split_whitespace().next().unwrap_or_default();
    invalid(&format!("{section}.{key}"), message)
}

impl EngineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.split.chunk_size == 0 {
            return Err(invalid("split.chunk_size", "must be positive"));
        }
        if self.split.chunk_overlap >= self.split.chunk_size {
            return Err(invalid(
                "split.chunk_overlap",
                format!(
                    "{} must be smaller than chunk_size {}",
                    self.split.chunk_overlap, self.split.chunk_size
                ),
            ));
        }
        self.split
            .validate()
            .map_err(|e| invalid("split.separators", e.to_string()))?;
        if self.chat.llm_token_limit == 0 {
            return Err(invalid("chat.llm_token_limit", "must be positive"));
        }
        if self.chat.reserved_for_answer >= self.chat.llm_token_limit {
            return Err(invalid(
                "chat.reserved_for_answer",
                "must be below chat.llm_token_limit",
            ));
        }
        if !(self.chat.temperature.is_finite() && self.chat.temperature >= 0.0) {
            return Err(invalid("chat.temperature", "must be a non-negative number"));
        }
        if self.retrieval.k == 0 {
            return Err(invalid("retrieval.k", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.retrieval.lambda) {
            return Err(invalid(
                "retrieval.lambda",
                format!("{} is outside [0, 1]", self.retrieval.lambda),
            ));
        }
        if self.retrieval.fetch_n.is_some_and(|n| n < self.retrieval.k) {
            return Err(invalid("retrieval.fetch_n", "must be at least retrieval.k"));
        }
        self.retrieval
            .sim1
            .validate()
            .map_err(|e| invalid("retrieval.sim1", e.to_string()))?;
        self.retrieval
            .sim2
            .validate()
            .map_err(|e| invalid("retrieval.sim2", e.to_string()))?;
        if self.max_subqueries == 0 {
            return Err(invalid("max_subqueries", "must be positive"));
        }
        self.embedding.validate().map_err(|m| nested("embedding", m))?;
        self.tokenizer.validate().map_err(|m| nested("tokenizer", m))?;
        Ok(())
    }

    pub fn advisories(&self) -> Vec<Advisory> {
        let mut out = Vec::new();
        let pct = self.split.overlap_ratio_pct();
        let (lo, hi) = OVERLAP_ADVISORY_BAND;
        if !(lo..=hi).contains(&pct) {
            out.push(Advisory {
                field: "split.chunk_overlap".into(),
                message: format!(
                    "overlap is {pct:.1}% of chunk_size; {lo}-{hi}% usually keeps context across chunk boundaries"
                ),
            });
        }
        out
    }

    /// Replaces endpoint URLs with values from `lookup`, e.g. `std::env::var`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(url) = lookup(ENV_EMBEDDING_URL) {
            self.embedding.endpoint_url = Some(url);
        }
        if let Some(url) = lookup(ENV_CHAT_URL) {
            self.chat.endpoint_url = Some(url);
        }
        if let Some(url) = lookup(ENV_TOKENIZER_URL) {
            self.tokenizer.external_url = Some(url);
        }
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            retrieval: self.retrieval.clone(),
            template: self.template_name,
            mode: self.mode,
            temperature: self.chat.temperature,
            llm_token_limit: self.chat.llm_token_limit,
            reserved_for_answer: self.chat.reserved_for_answer,
            max_subqueries: self.max_subqueries,
        }
    }
}

/// Reads, applies environment overrides, validates and logs advisories.
pub fn load_config(path: &Path) -> Result<EngineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let mut cfg: EngineConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.apply_env(|k| std::env::var(k).ok());
    cfg.validate()?;
    for a in cfg.advisories() {
        log::warn!("{}: {}", a.field, a.message);
    }
    Ok(cfg)
}

pub fn save_config(cfg: &EngineConfig, path: &Path) -> Result<(), ConfigError> {
    let text = cfg.to_toml_string()?;
    std::fs::write(path, text).map_err(|e| ConfigError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    })
}
