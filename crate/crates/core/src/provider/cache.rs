//! Content-addressed response cache.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{Mechanism, ModelSpec, NormalizedResponse, ThinkingMode};
use crate::prompting::PromptBundle;

/// Hex SHA-256 over every request input that can change the response.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(String);

#[derive(Serialize)]
struct KeyMaterial<'a> {
    model_id: &'a str,
    mechanism: Mechanism,
    system_prompt: Option<&'a str>,
    user_message: &'a str,
    temperature: f64,
    max_tokens: u32,
    sample_index: u32,
    thinking: ThinkingMode,
}

impl CacheKey {
    pub fn new(
        spec: &ModelSpec,
        bundle: &PromptBundle,
        sample_index: u32,
        thinking: ThinkingMode,
    ) -> CacheKey {
        let material = KeyMaterial {
            model_id: &spec.model_id,
            mechanism: spec.mechanism,
            system_prompt: bundle.system_prompt.as_deref(),
            user_message: &bundle.user_message,
            temperature: spec.sampling.temperature,
            max_tokens: spec.sampling.max_tokens,
            sample_index,
            thinking,
        };
        let bytes = serde_json::to_vec(&material).expect("key material serializes");
        CacheKey(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` via a unique temp file and rename; concurrent
/// writers of identical content leave one intact file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!(
        "tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> ResponseCache {
        ResponseCache { dir: dir.into() }
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(&key.0[..2]).join(format!("{}.json", key.0))
    }

    pub fn get(&self, key: &CacheKey) -> std::io::Result<Option<NormalizedResponse>> {
        match fs::read(self.path(key)) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn put(&self, key: &CacheKey, response: &NormalizedResponse) -> std::io::Result<()> {
        let bytes = serde_json::to_vec_pretty(response)?;
        write_atomic(&self.path(key), &bytes)
    }
}
