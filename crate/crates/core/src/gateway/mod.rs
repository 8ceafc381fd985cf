//! Text-generation gateway: one interface over a live OpenAI-compatible endpoint
//! and an offline replay log, with bounded-parallel batching.

mod http;
mod replay;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::sha256_hex;

pub use http::{HttpBackend, RetryPolicy};
pub use replay::{load_log, parse_log, record_log, write_entries, ReplayBackend, ReplayEntry, ReplayPrompt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub seed: u64,
    pub parallelism: usize,
    pub max_retries: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            model: String::new(),
            temperature: 0.6,
            top_p: 0.9,
            max_tokens: 250,
            seed: 0,
            parallelism: 8,
            max_retries: 3,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::validation("temperature", "must be >= 0"));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::validation("top_p", "must be in (0, 1]"));
        }
        if self.max_tokens == 0 {
            return Err(Error::validation("max_tokens", "must be positive"));
        }
        if self.parallelism == 0 {
            return Err(Error::validation("parallelism", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub system: String,
    pub user: String,
    pub config: GenerationConfig,
    /// Stage label, e.g. `scout.stage1`.
    pub tag: String,
}

impl LlmRequest {
    pub fn new(
        tag: impl Into<String>,
        system: impl Into<String>,
        user: impl Into<String>,
        config: &GenerationConfig,
    ) -> Self {
        LlmRequest {
            system: system.into(),
            user: user.into(),
            config: config.clone(),
            tag: tag.into(),
        }
    }

    pub fn digest(&self) -> String {
        prompt_digest(&self.system, &self.user)
    }
}

/// SHA-256 over `system`, a NUL separator, and `user`.
pub fn prompt_digest(system: &str, user: &str) -> String {
    let mut buf = Vec::with_capacity(system.len() + user.len() + 1);
    buf.extend_from_slice(system.as_bytes());
    buf.push(0);
    buf.extend_from_slice(user.as_bytes());
    sha256_hex(&buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub request: LlmRequest,
    pub response_text: String,
    pub latency_ms: u64,
    pub attempt: u32,
    pub prompt_digest: String,
}

/// Result of one logical completion as reported by a backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// 1-based count of attempts made, including the successful one.
    pub attempts: u32,
}

/// A text-generation backend. Implementations must tolerate concurrent calls.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &LlmRequest, digest: &str) -> Result<Completion>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn complete(&self, request: &LlmRequest, digest: &str) -> Result<Completion> {
        (**self).complete(request, digest)
    }
}

pub struct Gateway {
    backend: Arc<dyn Backend>,
    parallelism: usize,
    journal: Option<Mutex<Vec<LlmExchange>>>,
}

impl Gateway {
    pub fn new(backend: impl Backend + 'static, parallelism: usize) -> Self {
        Gateway {
            backend: Arc::new(backend),
            parallelism: parallelism.max(1),
            journal: None,
        }
    }

    /// Keeps every successful exchange so it can be written out as a replay log.
    pub fn recording(mut self) -> Self {
        self.journal = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
    }

    pub fn take_journal(&self) -> Vec<LlmExchange> {
        self.journal
            .as_ref()
            .map(|j| std::mem::take(&mut *j.lock().unwrap_or_else(|e| e.into_inner())))
            .unwrap_or_default()
    }

    fn run_one(&self, request: LlmRequest) -> Result<LlmExchange> {
        if request.user.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "request `{}` has an empty user prompt",
                request.tag
            )));
        }
        let digest = request.digest();
        let started = Instant::now();
        let completion = self.backend.complete(&request, &digest)?;
        Ok(LlmExchange {
            request,
            response_text: completion.text,
            latency_ms: started.elapsed().as_millis() as u64,
            attempt: completion.attempts,
            prompt_digest: digest,
        })
    }

    fn journal(&self, exchanges: &[&LlmExchange]) {
        if let Some(j) = &self.journal {
            let mut j = j.lock().unwrap_or_else(|e| e.into_inner());
            j.extend(exchanges.iter().map(|&x| x.clone()));
        }
    }

    pub fn complete(&self, request: LlmRequest) -> Result<LlmExchange> {
        let out = self.run_one(request)?;
        self.journal(&[&out]);
        Ok(out)
    }

    /// Runs requests with at most `parallelism` in flight; results come back in input order.
    pub fn complete_batch(&self, requests: Vec<LlmRequest>) -> Vec<Result<LlmExchange>> {
        let n = requests.len();
        if n == 0 {
            return Vec::new();
        }
        let slots: Vec<Mutex<Option<LlmRequest>>> =
            requests.into_iter().map(|r| Mutex::new(Some(r))).collect();
        let results: Vec<Mutex<Option<Result<LlmExchange>>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.parallelism.min(n);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let request = slots[i].lock().unwrap().take().expect("each slot taken once");
                    let result = self.run_one(request);
                    *results[i].lock().unwrap() = Some(result);
                });
            }
        });
        let results: Vec<Result<LlmExchange>> = results
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every slot filled"))
            .collect();
        let ok: Vec<&LlmExchange> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
        self.journal(&ok);
        results
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    struct Echo;
    impl Backend for Echo {
        fn complete(&self, request: &LlmRequest, _digest: &str) -> Result<Completion> {
            Ok(Completion {
                text: request.user.to_uppercase(),
                attempts: 1,
            })
        }
    }

    /// Sleeps longer for earlier requests so completion order is the reverse of input order.
    struct Reversed {
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }
    impl Backend for Reversed {
        fn complete(&self, request: &LlmRequest, _digest: &str) -> Result<Completion> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            let idx: u64 = request.user.parse().unwrap();
            std::thread::sleep(Duration::from_millis(2 * (20 - idx)));
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            if idx == 3 {
                return Err(Error::ReplayMiss {
                    tag: request.tag.clone(),
                    digest: "x".into(),
                });
            }
            Ok(Completion {
                text: format!("r{idx}"),
                attempts: 1,
            })
        }
    }

    fn req(user: &str) -> LlmRequest {
        LlmRequest::new("test", "sys", user, &GenerationConfig::default())
    }

    #[test]
    fn defaults_match_decoding_table() {
        let c = GenerationConfig::default();
        assert_eq!((c.temperature, c.top_p, c.max_tokens), (0.6, 0.9, 250));
        assert_eq!((c.parallelism, c.max_retries), (8, 3));
    }

    #[test]
    fn empty_user_prompt_is_rejected() {
        let gw = Gateway::new(Echo, 2);
        assert!(matches!(gw.complete(req("  ")), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn digest_is_pure_and_separates_fields() {
        assert_eq!(prompt_digest("a", "b"), prompt_digest("a", "b"));
        assert_ne!(prompt_digest("ab", "c"), prompt_digest("a", "bc"));
    }

    #[test]
    fn batch_keeps_order_and_cap() {
        let backend = Arc::new(Reversed {
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let gw = Gateway::new(backend.clone(), 3);
        let out = gw.complete_batch((0..10).map(|i| req(&i.to_string())).collect());
        assert_eq!(out.len(), 10);
        for (i, r) in out.iter().enumerate() {
            if i == 3 {
                assert!(matches!(r, Err(Error::ReplayMiss { .. })));
            } else {
                assert_eq!(r.as_ref().unwrap().response_text, format!("r{i}"));
            }
        }
        assert!(backend.peak.load(Ordering::SeqCst) <= 3);
    }

    #[test]
    fn empty_batch() {
        assert!(Gateway::new(Echo, 4).complete_batch(vec![]).is_empty());
    }

    #[test]
    fn journal_records_in_request_order() {
        let gw = Gateway::new(Echo, 4).recording();
        gw.complete_batch(vec![req("a"), req("b"), req("c")]);
        let users: Vec<_> = gw.take_journal().into_iter().map(|x| x.request.user).collect();
        assert_eq!(users, ["a", "b", "c"]);
    }
}
