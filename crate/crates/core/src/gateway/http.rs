use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, Completion, LlmRequest};
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Exponential backoff: `base * 2^(attempt-1)`, capped, plus seeded jitter of up to half the delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32, seed: u64, digest: &str) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(1u32 << (attempt.saturating_sub(1)).min(16))
            .min(self.max_delay);
        let jitter_cap = exp.as_millis() as u64 / 2;
        let jitter = if jitter_cap == 0 {
            0
        } else {
            rng_for(seed, &format!("retry:{digest}:{attempt}")).gen_range(0..=jitter_cap)
        };
        exp + Duration::from_millis(jitter)
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

enum AttemptError {
    Transient(String),
    Fatal(String),
}

/// OpenAI-compatible `POST {base}/chat/completions` client.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(base_url: &str, api_key: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        HttpBackend {
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key: api_key.filter(|k| !k.is_empty()),
            agent: ureq::Agent::new_with_config(config),
            retry: RetryPolicy::default(),
        }
    }

    /// Reads `EDSYNTH_API_BASE` and `EDSYNTH_API_KEY`; `None` when no base URL is set.
    pub fn from_env() -> Option<Self> {
        let base = std::env::var("EDSYNTH_API_BASE").ok().filter(|b| !b.trim().is_empty())?;
        Some(HttpBackend::new(&base, std::env::var("EDSYNTH_API_KEY").ok()))
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, request: &LlmRequest) -> Result<String, AttemptError> {
        let mut messages = Vec::with_capacity(2);
        if !request.system.is_empty() {
            messages.push(ChatMessage {
                role: "system",
                content: &request.system,
            });
        }
        messages.push(ChatMessage {
            role: "user",
            content: &request.user,
        });
        let body = ChatBody {
            model: &request.config.model,
            messages,
            temperature: request.config.temperature,
            top_p: request.config.top_p,
            max_tokens: request.config.max_tokens,
        };
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match call.send_json(&body) {
            Ok(r) => r,
            Err(e) => return Err(classify_transport(e)),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(AttemptError::Fatal(format!("HTTP {status}: {detail}")));
        }
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| AttemptError::Fatal(format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| AttemptError::Fatal("response has no choices[0].message.content".into()))
    }
}

fn classify_transport(e: ureq::Error) -> AttemptError {
    match e {
        ureq::Error::Timeout(_)
        | ureq::Error::Io(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::Protocol(_) => AttemptError::Transient(e.to_string()),
        other => AttemptError::Fatal(other.to_string()),
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &LlmRequest, digest: &str) -> Result<Completion> {
        let max_attempts = request.config.max_retries + 1;
        let mut attempt = 1;
        loop {
            match self.attempt(request) {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        attempts: attempt,
                    })
                }
                Err(AttemptError::Transient(msg)) if attempt < max_attempts => {
                    log::warn!("{}: attempt {attempt} failed ({msg}); retrying", request.tag);
                    std::thread::sleep(self.retry.delay(attempt, request.config.seed, digest));
                    attempt += 1;
                }
                Err(AttemptError::Transient(msg)) | Err(AttemptError::Fatal(msg)) => {
                    return Err(Error::BackendUnavailable {
                        tag: request.tag.clone(),
                        attempts: attempt,
                        message: msg,
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_and_is_seeded() {
        let p = RetryPolicy {
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_secs(10),
        };
        let d1 = p.delay(1, 9, "abc");
        let d3 = p.delay(3, 9, "abc");
        assert!(d1 >= Duration::from_millis(100) && d1 <= Duration::from_millis(150));
        assert!(d3 >= Duration::from_millis(400) && d3 <= Duration::from_millis(600));
        assert_eq!(p.delay(2, 9, "abc"), p.delay(2, 9, "abc"));
    }

    #[test]
    fn endpoint_joins_base() {
        assert_eq!(
            HttpBackend::new("http://localhost:8000/v1/", None).endpoint(),
            "http://localhost:8000/v1/chat/completions"
        );
    }
}
