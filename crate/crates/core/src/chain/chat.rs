//! Chat-completion clients.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChatError {
    #[error("chat service unreachable: {0}")]
    Unreachable(String),
    #[error("chat service returned HTTP {0}")]
    Status(u16),
    #[error("invalid chat response: {0}")]
    InvalidResponse(String),
    #[error("chat configuration: {0}")]
    Config(String),
}

/// Anything that completes a single-turn prompt.
pub trait ChatModel: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ChatError>;
}

impl<C: ChatModel + ?Sized> ChatModel for Box<C> {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ChatError> {
        (**self).complete(prompt, temperature)
    }
}

impl<C: ChatModel + ?Sized> ChatModel for std::sync::Arc<C> {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ChatError> {
        (**self).complete(prompt, temperature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChatConfig {
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub llm_token_limit: usize,
    pub temperature: f64,
    /// Tokens kept free for the model's answer.
    pub reserved_for_answer: usize,
    pub timeout_secs: u64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            endpoint_url: None,
            model_name: "llama-2-7b-chat".to_owned(),
            llm_token_limit: super::DEFAULT_LLM_TOKEN_LIMIT,
            temperature: 0.1,
            reserved_for_answer: super::DEFAULT_RESERVED_FOR_ANSWER,
            timeout_secs: 300,
        }
    }
}

/// Client for the common chat-completions endpoint shape.
///
/// Request: `{"model", "messages": [{"role": "user", "content"}], "temperature"}`.
/// Response: `{"choices": [{"message": {"content"}}]}`.
#[derive(Debug)]
pub struct HttpChat {
    url: String,
    model: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl HttpChat {
    pub fn new(config: &ChatConfig) -> Result<Self, ChatError> {
        let url = config
            .endpoint_url
            .clone()
            .ok_or_else(|| ChatError::Config("chat.endpoint_url is not set".into()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            url,
            model: config.model_name.clone(),
            agent,
        })
    }
}

impl ChatModel for HttpChat {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ChatError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": temperature,
        });
        let mut response = self.agent.post(&self.url).send_json(body).map_err(|e| match e {
            ureq::Error::StatusCode(code) => ChatError::Status(code),
            other => ChatError::Unreachable(other.to_string()),
        })?;
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ChatError::InvalidResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ChatError::InvalidResponse("no choices".into()))
    }
}
