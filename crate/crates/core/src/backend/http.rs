use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{ChatRequest, ChatResponse, Message};
use super::{estimate_tokens, split_task_tag, BackendError, ChatExchange, GenerationParams, LlmBackend};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "ALGOGRAPH_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            url: url.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            retry: RetryPolicy::default(),
            max_in_flight: 8,
            timeout: Duration::from_secs(300),
        }
    }
}

/// Blocking chat-completion client.
///
/// The `#task:` tag line is stripped before sending. Token counts come from
/// the provider's `usage` block when present and are estimated otherwise;
/// latency is wall-clock time of the whole call, retries included.
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
    slots: Semaphore,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        let slots = Semaphore::new(config.max_in_flight.max(1));
        HttpBackend { config, agent, slots }
    }

    fn send_once(&self, body: &str) -> Result<ChatResponse, BackendError> {
        let mut req = self.agent.post(&self.config.url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| BackendError::Protocol(e.to_string()))
    }
}

fn retryable(err: &BackendError) -> bool {
    match err {
        BackendError::Transport(_) => true,
        BackendError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl LlmBackend for HttpBackend {
    fn chat(&self, prompt: &str, params: &GenerationParams, seed: u64) -> Result<ChatExchange, BackendError> {
        let (_, text) = split_task_tag(prompt);
        let request = ChatRequest {
            model: self.config.model.clone(),
            messages: vec![Message {
                role: "user".into(),
                content: text.to_string(),
            }],
            temperature: params.temperature,
            seed: Some(seed),
            max_tokens: params.max_tokens,
        };
        let body = serde_json::to_string(&request).map_err(|e| BackendError::Protocol(e.to_string()))?;

        let _slot = self.slots.acquire();
        let start = Instant::now();
        let mut backoff = self.config.retry.initial_backoff;
        let attempts = self.config.retry.attempts.max(1);
        let mut attempt = 1;
        let response = loop {
            match self.send_once(&body) {
                Ok(r) => break r,
                Err(e) if attempt < attempts && retryable(&e) => {
                    thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        let latency_ms = start.elapsed().as_secs_f64() * 1e3;

        let content = response
            .content()
            .ok_or_else(|| BackendError::Protocol("response has no choices".into()))?
            .to_string();
        let usage = response.usage.unwrap_or(super::wire::Usage {
            prompt_tokens: None,
            completion_tokens: None,
        });
        Ok(ChatExchange {
            node_id: None,
            prompt_tokens: usage.prompt_tokens.unwrap_or_else(|| estimate_tokens(text)),
            completion_tokens: usage.completion_tokens.unwrap_or_else(|| estimate_tokens(&content)),
            prompt_text: prompt.to_string(),
            response_text: content,
            latency_ms,
        })
    }
}

/// Counting semaphore bounding concurrent requests.
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}
