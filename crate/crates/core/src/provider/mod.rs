//! Model endpoints: request dispatch with retries, normalization of the five
//! thinking-trace exposure mechanisms, and response caching.
//!
//! Every question is a single-turn request, so the multi-turn persistence
//! rules of the individual providers (carrying signed thinking blocks forward,
//! stripping or keeping reasoning fields in history) never come into play.

pub mod backend;
pub mod cache;
pub mod mock;
pub mod normalize;
pub mod wire;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use backend::{
    Backend, FetchError, FetchErrorKind, FnBackend, HttpBackend, RecordingBackend, ReplayBackend,
};
pub use cache::{CacheKey, ResponseCache};
pub use mock::synthetic_payload;
pub use normalize::{normalize, split_think_tags};
pub use wire::{build_request, WireRequest};

use crate::prompting::PromptBundle;

/// How a provider exposes the thinking trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Reasoning tokens discarded; a post-hoc summary is returned.
    DiscardedSummary,
    /// Thinking content blocks with an encrypted signature.
    SignedThinkingBlock,
    /// Response parts flagged `thought=true`.
    ThoughtFlaggedParts,
    /// Raw trace in a dedicated reasoning field.
    ReasoningField,
    /// Raw `<think>...</think>` tags inside the output stream.
    InlineThinkTags,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::DiscardedSummary,
        Mechanism::SignedThinkingBlock,
        Mechanism::ThoughtFlaggedParts,
        Mechanism::ReasoningField,
        Mechanism::InlineThinkTags,
    ];

    /// The API toggle able to disable thinking for this mechanism, if any.
    pub fn supported_toggle(self) -> Option<ThinkToggle> {
        match self {
            Mechanism::DiscardedSummary => Some(ThinkToggle::EffortParam),
            Mechanism::SignedThinkingBlock => Some(ThinkToggle::ThinkingTypeParam),
            _ => None,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        f.write_str(s.as_str().unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinkToggle {
    /// `reasoning.effort = "none"`.
    EffortParam,
    /// `thinking.type = "disabled"`.
    ThinkingTypeParam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThinkingMode {
    On,
    Off,
}

impl fmt::Display for ThinkingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThinkingMode::On => "on",
            ThinkingMode::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
    pub sample_count: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            temperature: 1.0,
            max_tokens: 16_000,
            sample_count: 1,
        }
    }
}

/// One configured model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(rename = "id")]
    pub model_id: String,
    pub mechanism: Mechanism,
    #[serde(default)]
    pub think_toggle: Option<ThinkToggle>,
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Model name sent on the wire, when it differs from `model_id`.
    #[serde(default)]
    pub remote_model: Option<String>,
    #[serde(default)]
    pub thinking_budget: Option<u32>,
    #[serde(default)]
    pub sampling: Sampling,
    /// Extra JSON merged into every request body.
    #[serde(default)]
    pub request_extra: Option<Value>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if let Some(toggle) = self.think_toggle {
            if self.mechanism.supported_toggle() != Some(toggle) {
                return Err(ProviderError::InvalidSpec {
                    model: self.model_id.clone(),
                    message: format!(
                        "think toggle {toggle:?} is not available for mechanism {}",
                        self.mechanism
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Provider-agnostic (thinking, response) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedResponse {
    pub thinking: String,
    pub response: String,
    pub mechanism: Mechanism,
    pub thinking_disabled: bool,
    #[serde(default)]
    pub usage: Value,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("model `{model}` failed after {attempts} attempt(s): {source}")]
    Endpoint {
        model: String,
        attempts: u32,
        #[source]
        source: FetchError,
    },
    #[error("model `{model}` has no think toggle; thinking cannot be disabled")]
    UnsupportedToggle { model: String },
    #[error("invalid model spec `{model}`: {message}")]
    InvalidSpec { model: String, message: String },
    #[error("malformed {mechanism} payload: {message}")]
    MalformedPayload {
        mechanism: Mechanism,
        message: String,
    },
    #[error("response cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl ProviderError {
    pub fn fetch_kind(&self) -> Option<FetchErrorKind> {
        match self {
            ProviderError::Endpoint { source, .. } => Some(source.kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> RetryPolicy {
        RetryPolicy {
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
            ..RetryPolicy::default()
        }
    }

    fn delay(&self, retry: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32 << retry.min(16))
            .min(self.max_delay)
    }
}

/// Dispatches prompt bundles through a backend, with caching and retries.
pub struct Provider {
    backend: Box<dyn Backend>,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
}

impl Provider {
    pub fn new(backend: Box<dyn Backend>) -> Provider {
        Provider {
            backend,
            cache: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Provider {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Provider {
        self.retry = retry;
        self
    }

    pub fn send(
        &self,
        spec: &ModelSpec,
        bundle: &PromptBundle,
        sample_index: u32,
        thinking: ThinkingMode,
    ) -> Result<NormalizedResponse, ProviderError> {
        if thinking == ThinkingMode::Off && spec.think_toggle.is_none() {
            return Err(ProviderError::UnsupportedToggle {
                model: spec.model_id.clone(),
            });
        }
        let key = CacheKey::new(spec, bundle, sample_index, thinking);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key)? {
                return Ok(hit);
            }
        }
        let request = build_request(spec, bundle, thinking);
        let raw = self.fetch_with_retries(spec, &key, &request)?;
        let normalized = normalize(&raw, spec.mechanism, thinking == ThinkingMode::Off)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &normalized)?;
        }
        Ok(normalized)
    }

    fn fetch_with_retries(
        &self,
        spec: &ModelSpec,
        key: &CacheKey,
        request: &WireRequest,
    ) -> Result<Value, ProviderError> {
        let mut attempt = 0;
        loop {
            match self.backend.fetch(key, request) {
                Ok(raw) => return Ok(raw),
                Err(e) if e.is_retryable() && attempt < self.retry.max_retries => {
                    log::warn!(
                        "{}: attempt {} failed: {e}; retrying",
                        spec.model_id,
                        attempt + 1
                    );
                    std::thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
                Err(source) => {
                    return Err(ProviderError::Endpoint {
                        model: spec.model_id.clone(),
                        attempts: attempt + 1,
                        source,
                    })
                }
            }
        }
    }
}
