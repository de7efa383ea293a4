use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mcqeval_core::provider::ModelSpec;
use serde::Deserialize;

/// Run configuration. API keys are never stored here; each model names the
/// environment variable that holds its key.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    /// Response cache directory, relative to the config file.
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Model id used as the rubric judge.
    pub judge: Option<String>,
    /// Model id used as the self-PRM scorer.
    pub scorer: Option<String>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
}

fn default_timeout() -> u64 {
    600
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Config =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for spec in &config.models {
            spec.validate()?;
        }
        let mut ids: Vec<&str> = config.models.iter().map(|m| m.model_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!("model id `{}` is declared twice", w[0]);
        }
        if let Some(dir) = &config.cache_dir {
            if dir.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.cache_dir = Some(base.join(dir));
            }
        }
        Ok(config)
    }

    /// The named model, or the only model when `id` is absent.
    pub fn model(&self, id: Option<&str>) -> Result<&ModelSpec> {
        match id {
            Some(id) => self
                .models
                .iter()
                .find(|m| m.model_id == id)
                .with_context(|| format!("model `{id}` is not declared in the config")),
            None => match self.models.as_slice() {
                [only] => Ok(only),
                [] => bail!("the config declares no models"),
                _ => bail!("the config declares several models; choose one with --model"),
            },
        }
    }
}
