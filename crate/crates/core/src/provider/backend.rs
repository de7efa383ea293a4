//! Transports that turn a [`WireRequest`] into a raw provider payload.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use super::cache::{write_atomic, CacheKey};
use super::wire::{AuthStyle, WireRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchErrorKind {
    /// Worth retrying: timeouts, connection failures, 429, 5xx.
    Transient,
    Fatal,
    MissingCredential,
    MissingFixture,
}

#[derive(Debug, Clone, Error)]
#[error("{message}")]
pub struct FetchError {
    pub kind: FetchErrorKind,
    pub message: String,
}

impl FetchError {
    pub fn transient(message: impl Into<String>) -> FetchError {
        FetchError {
            kind: FetchErrorKind::Transient,
            message: message.into(),
        }
    }

    pub fn fatal(message: impl Into<String>) -> FetchError {
        FetchError {
            kind: FetchErrorKind::Fatal,
            message: message.into(),
        }
    }

    pub fn is_retryable(&self) -> bool {
        self.kind == FetchErrorKind::Transient
    }
}

pub trait Backend: Send + Sync {
    fn fetch(&self, key: &CacheKey, request: &WireRequest) -> Result<Value, FetchError>;
}

/// Live HTTPS transport.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(timeout: Duration) -> Result<HttpBackend, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| FetchError::fatal(format!("building HTTP client: {e}")))?;
        Ok(HttpBackend { client })
    }
}

impl Backend for HttpBackend {
    fn fetch(&self, _key: &CacheKey, request: &WireRequest) -> Result<Value, FetchError> {
        let mut builder = self.client.post(&request.url).json(&request.body);
        for (k, v) in &request.headers {
            builder = builder.header(k, v);
        }
        if let Some(var) = &request.api_key_env {
            let key = std::env::var(var).map_err(|_| FetchError {
                kind: FetchErrorKind::MissingCredential,
                message: format!("environment variable {var} is not set"),
            })?;
            builder = match request.auth {
                AuthStyle::Bearer => builder.bearer_auth(key),
                AuthStyle::XApiKey => builder.header("x-api-key", key),
                AuthStyle::GoogApiKey => builder.header("x-goog-api-key", key),
            };
        }
        let response = builder
            .send()
            .map_err(|e| FetchError::transient(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            let message = format!(
                "{} returned {status}: {}",
                request.url,
                truncate(&body, 500)
            );
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                FetchError::transient(message)
            } else {
                FetchError::fatal(message)
            });
        }
        response
            .json::<Value>()
            .map_err(|e| FetchError::transient(format!("decoding response body: {e}")))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

pub fn fixture_path(dir: &Path, key: &CacheKey) -> PathBuf {
    dir.join(format!("{key}.json"))
}

/// Writes a raw payload where [`ReplayBackend`] will look for it.
pub fn write_fixture(dir: &Path, key: &CacheKey, payload: &Value) -> std::io::Result<()> {
    let bytes = serde_json::to_vec_pretty(payload)?;
    write_atomic(&fixture_path(dir, key), &bytes)
}

/// Serves recorded raw payloads keyed like the response cache.
pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayBackend {
        ReplayBackend { dir: dir.into() }
    }
}

impl Backend for ReplayBackend {
    fn fetch(&self, key: &CacheKey, _request: &WireRequest) -> Result<Value, FetchError> {
        let path = fixture_path(&self.dir, key);
        let bytes = fs::read(&path).map_err(|_| FetchError {
            kind: FetchErrorKind::MissingFixture,
            message: format!("no fixture {}", path.display()),
        })?;
        serde_json::from_slice(&bytes)
            .map_err(|e| FetchError::fatal(format!("fixture {}: {e}", path.display())))
    }
}

/// Passes requests through and records each payload as a replay fixture.
pub struct RecordingBackend<B> {
    inner: B,
    dir: PathBuf,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> RecordingBackend<B> {
        RecordingBackend {
            inner,
            dir: dir.into(),
        }
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn fetch(&self, key: &CacheKey, request: &WireRequest) -> Result<Value, FetchError> {
        let payload = self.inner.fetch(key, request)?;
        write_fixture(&self.dir, key, &payload)
            .map_err(|e| FetchError::fatal(format!("recording fixture: {e}")))?;
        Ok(payload)
    }
}

/// Backend driven by a closure; used for scripted and synthetic providers.
pub struct FnBackend<F>(pub F);

impl<F> Backend for FnBackend<F>
where
    F: Fn(&CacheKey, &WireRequest) -> Result<Value, FetchError> + Send + Sync,
{
    fn fetch(&self, key: &CacheKey, request: &WireRequest) -> Result<Value, FetchError> {
        (self.0)(key, request)
    }
}
