//! Text-generation providers: an OpenAI-compatible HTTP client and a
//! scripted mock.

mod http;
mod mock;

use std::time::Duration;

use crate::prompt::Prompt;

pub use http::HttpProvider;
pub use mock::{FnProvider, MockProvider};

pub const DEFAULT_API_KEY_ENV: &str = "KEYINST_API_KEY";
pub const BASE_URL_ENV: &str = "KEYINST_BASE_URL";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("mock script exhausted after {calls} call(s)")]
    ScriptExhausted { calls: usize },
    #[error("mock has no response for prompt {hash}")]
    UnknownPrompt { hash: String },
    #[error("mock script is empty")]
    EmptyScript,
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

impl LlmError {
    /// Whether this is a transport-level failure (as opposed to a scripting
    /// or response-content problem).
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            LlmError::Auth(_) | LlmError::RateLimited { .. } | LlmError::Transport { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    pub retries: u32,
    pub base_url: String,
    pub api_key_env: String,
    /// First retry delay; doubles per attempt, with ±20% jitter.
    pub backoff_base: Duration,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            model: "gpt-4o".to_string(),
            temperature: 0.0,
            max_tokens: 512,
            timeout: Duration::from_secs(60),
            retries: 3,
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            backoff_base: Duration::from_secs(1),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.timeout.is_zero() {
            return Err(LlmError::InvalidConfig("timeout must be > 0".into()));
        }
        if self.model.is_empty() {
            return Err(LlmError::InvalidConfig("model is empty".into()));
        }
        Ok(())
    }

    /// `KEYINST_BASE_URL` if set, else the configured URL.
    pub fn effective_base_url(&self) -> String {
        std::env::var(BASE_URL_ENV)
            .ok()
            .filter(|v| !v.is_empty())
            .unwrap_or_else(|| self.base_url.clone())
    }
}

/// Anything that turns a prompt into text. Implementations are shared
/// across worker threads.
pub trait TextGenerator: Send + Sync {
    fn generate(&self, prompt: &Prompt, config: &GenerationConfig) -> Result<String, LlmError>;
}

impl<T: TextGenerator + ?Sized> TextGenerator for std::sync::Arc<T> {
    fn generate(&self, prompt: &Prompt, config: &GenerationConfig) -> Result<String, LlmError> {
        (**self).generate(prompt, config)
    }
}

impl<T: TextGenerator + ?Sized> TextGenerator for &T {
    fn generate(&self, prompt: &Prompt, config: &GenerationConfig) -> Result<String, LlmError> {
        (**self).generate(prompt, config)
    }
}
