//! LLM backends: the [`LlmBackend`] trait, a parameterised mock and an HTTP
//! chat-completion client.

#[cfg(feature = "http")]
mod http;
mod mock;
mod profile;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

#[cfg(feature = "http")]
pub use http::{HttpBackend, HttpConfig, RetryPolicy, API_KEY_ENV};
pub use mock::MockBackend;
pub use profile::{MockProfile, RateCurve, SortDegradation};

/// First-line marker that tells the mock which task a prompt belongs to.
pub const TASK_TAG_PREFIX: &str = "#task:";

pub mod tags {
    pub const COUNT: &str = "count";
    pub const SORT: &str = "sort";
    pub const RETRIEVE: &str = "retrieve";
    pub const RAG_RETRIEVE: &str = "rag-retrieve";
    pub const RAG_AGGREGATE: &str = "rag-aggregate";
}

/// Splits a prompt into its `#task:` tag (if any) and the remaining text.
pub fn split_task_tag(prompt: &str) -> (Option<&str>, &str) {
    match prompt.strip_prefix(TASK_TAG_PREFIX) {
        Some(rest) => {
            let (tag, body) = rest.split_once('\n').unwrap_or((rest, ""));
            (Some(tag.trim()), body)
        }
        None => (None, prompt),
    }
}

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

/// One request/response pair with its token counts and latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    /// Set by the graph executor; `None` for direct backend calls.
    pub node_id: Option<NodeId>,
    pub prompt_text: String,
    pub response_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Milliseconds; simulated for the mock, wall-clock for HTTP.
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("backend configuration error: {0}")]
    Configuration(String),
}

pub trait LlmBackend: Send + Sync {
    fn chat(&self, prompt: &str, params: &GenerationParams, seed: u64) -> Result<ChatExchange, BackendError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for &B {
    fn chat(&self, prompt: &str, params: &GenerationParams, seed: u64) -> Result<ChatExchange, BackendError> {
        (**self).chat(prompt, params, seed)
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for Box<B> {
    fn chat(&self, prompt: &str, params: &GenerationParams, seed: u64) -> Result<ChatExchange, BackendError> {
        (**self).chat(prompt, params, seed)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn token_rule() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcdefgh"), 2);
        assert_eq!(estimate_tokens("abcdefghi"), 3);
        assert_eq!(estimate_tokens("é"), 1);
    }

    #[test]
    fn task_tag_is_split_off() {
        assert_eq!(split_task_tag("#task:count\nhello\nworld"), (Some("count"), "hello\nworld"));
        assert_eq!(split_task_tag("plain prompt"), (None, "plain prompt"));
        assert_eq!(split_task_tag("#task:sort"), (Some("sort"), ""));
    }

    proptest! {
        #[test]
        fn tokens_monotone_under_concatenation(a in ".{0,64}", b in ".{0,64}") {
            let joined = format!("{a}{b}");
            prop_assert!(estimate_tokens(&joined) >= estimate_tokens(&a).max(estimate_tokens(&b)));
        }
    }
}
