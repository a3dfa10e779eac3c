//! Token accounting for a rendered prompt.

use serde::{Deserialize, Serialize};

use crate::embed::{TokenError, Tokenizer};

pub const DEFAULT_LLM_TOKEN_LIMIT: usize = 4096;
pub const DEFAULT_RESERVED_FOR_ANSWER: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub prompt_tokens: usize,
    pub llm_token_limit: usize,
    pub reserved_for_answer: usize,
    /// `prompt_tokens + reserved_for_answer <= llm_token_limit`.
    pub fits: bool,
}

impl TokenBudget {
    pub fn new(prompt_tokens: usize, llm_token_limit: usize, reserved_for_answer: usize) -> Self {
        Self {
            prompt_tokens,
            llm_token_limit,
            reserved_for_answer,
            fits: prompt_tokens.saturating_add(reserved_for_answer) <= llm_token_limit,
        }
    }

    /// Tokens left for the prompt once the answer reserve is set aside.
    pub fn headroom(&self) -> isize {
        self.llm_token_limit as isize - self.reserved_for_answer as isize - self.prompt_tokens as isize
    }
}

/// Counts `prompt` and reports whether it leaves `reserve` tokens for the answer.
pub fn budget_check(prompt: &str, tok: &Tokenizer, limit: usize, reserve: usize) -> Result<TokenBudget, TokenError> {
    Ok(TokenBudget::new(tok.count(prompt)?, limit, reserve))
}
