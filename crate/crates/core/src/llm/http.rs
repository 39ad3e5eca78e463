use std::thread;
use std::time::Duration;

use rand::Rng;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{GenerationConfig, LlmError, TextGenerator};
use crate::prompt::{Prompt, Segment};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Segment],
    temperature: f64,
    max_tokens: u32,
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
    content: Option<String>,
}

enum Failure {
    Retry { rate_limited: bool, message: String },
    Fatal(LlmError),
}

/// Chat-completions client for OpenAI-compatible endpoints.
#[derive(Debug, Clone, Default)]
pub struct HttpProvider {
    client: Client,
}

impl HttpProvider {
    pub fn new() -> Self {
        Self::default()
    }

    fn attempt(
        &self,
        url: &str,
        key: &str,
        body: &ChatRequest<'_>,
        timeout: Duration,
    ) -> Result<String, Failure> {
        let response = self
            .client
            .post(url)
            .bearer_auth(key)
            .timeout(timeout)
            .json(body)
            .send()
            .map_err(|e| Failure::Retry {
                rate_limited: false,
                message: e.to_string(),
            })?;
        let status = response.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(Failure::Fatal(LlmError::Auth(format!("HTTP {status}"))));
        }
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(Failure::Retry {
                rate_limited: status == StatusCode::TOO_MANY_REQUESTS,
                message: format!("HTTP {status}"),
            });
        }
        let text = response.text().map_err(|e| Failure::Retry {
            rate_limited: false,
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(Failure::Fatal(LlmError::BadResponse(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            ))));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(LlmError::BadResponse(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| {
                Failure::Fatal(LlmError::BadResponse("no completion in response".into()))
            })
    }
}

fn backoff(base: Duration, retry: u32) -> Duration {
    let factor = 2f64.powi(retry as i32) * rand::thread_rng().gen_range(0.8..=1.2);
    base.mul_f64(factor)
}

impl TextGenerator for HttpProvider {
    fn generate(&self, prompt: &Prompt, config: &GenerationConfig) -> Result<String, LlmError> {
        config.validate()?;
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| {
                LlmError::Auth(format!(
                    "environment variable {} is not set",
                    config.api_key_env
                ))
            })?;
        let url = format!(
            "{}/chat/completions",
            config.effective_base_url().trim_end_matches('/')
        );
        let body = ChatRequest {
            model: &config.model,
            messages: prompt.segments(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
        };

        let attempts = config.retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(backoff(config.backoff_base, attempt - 1));
            }
            match self.attempt(&url, &key, &body, config.timeout) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry {
                    rate_limited,
                    message,
                }) => {
                    log::warn!(
                        "{url}: attempt {}/{attempts} failed: {message}",
                        attempt + 1
                    );
                    last = Some((rate_limited, message));
                }
            }
        }
        Err(match last {
            Some((true, _)) => LlmError::RateLimited { attempts },
            Some((false, message)) => LlmError::Transport { attempts, message },
            None => unreachable!("at least one attempt is made"),
        })
    }
}
