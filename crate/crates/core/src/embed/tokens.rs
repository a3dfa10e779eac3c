use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TokenError {
    #[error("tokenizer service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("invalid tokenizer response: {0}")]
    InvalidResponse(String),
    #[error("tokenizer configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    #[default]
    Heuristic,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    pub chars_per_token: f64,
    /// Endpoint taking `{"input": text}` and answering `{"count": n}`.
    pub external_url: Option<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            mode: TokenizerMode::Heuristic,
            chars_per_token: 4.0,
            external_url: None,
        }
    }
}

impl TokenizerConfig {
    pub fn heuristic(chars_per_token: f64) -> Self {
        Self {
            chars_per_token,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.mode {
            TokenizerMode::Heuristic if !(self.chars_per_token > 0.0 && self.chars_per_token.is_finite()) => {
                Err("chars_per_token must be a positive number".into())
            }
            TokenizerMode::External if self.external_url.is_none() => {
                Err("external tokenizer mode needs external_url".into())
            }
            _ => Ok(()),
        }
    }
}

/// `ceil(chars / chars_per_token)`.
pub fn heuristic_tokens(chars: usize, chars_per_token: f64) -> usize {
    (chars as f64 / chars_per_token).ceil() as usize
}

#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    config: TokenizerConfig,
    agent: Option<ureq::Agent>,
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Result<Self, TokenError> {
        config.validate().map_err(TokenError::Config)?;
        let agent = (config.mode == TokenizerMode::External).then(|| {
            ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(30)))
                .build()
                .into()
        });
        Ok(Self { config, agent })
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn count(&self, text: &str) -> Result<usize, TokenError> {
        match (&self.agent, &self.config.external_url) {
            (Some(agent), Some(url)) => count_external(agent, url, text),
            _ => Ok(heuristic_tokens(text.chars().count(), self.config.chars_per_token)),
        }
    }
}

#[derive(Deserialize)]
struct CountResponse {
    count: usize,
}

fn count_external(agent: &ureq::Agent, url: &str, text: &str) -> Result<usize, TokenError> {
    let mut response = agent
        .post(url)
        .send_json(serde_json::json!({ "input": text }))
        .map_err(|e| TokenError::ServiceUnreachable(e.to_string()))?;
    let body: CountResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| TokenError::InvalidResponse(e.to_string()))?;
    Ok(body.count)
}

/// Counts tokens of `text` under `tok`.
pub fn token_count(text: &str, tok: &TokenizerConfig) -> Result<usize, TokenError> {
    Tokenizer::new(tok.clone())?.count(text)
}
