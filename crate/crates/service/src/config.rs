use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tutor_core::synth::Budget;
use tutor_core::tutor::FeedbackOptions;

/// Deployment settings, read from a TOML file. Command-line flags and
/// environment variables override individual fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub port: u16,
    /// Directory of exercise documents. The bundled exercise is served when unset.
    pub exercises: Option<PathBuf>,
    /// Append-only JSONL session log.
    pub session_log: Option<PathBuf>,
    /// Concurrent feedback computations; 0 means one per processor.
    pub max_concurrent: usize,
    pub budget: Budget,
    pub fuel: u64,
    /// Ceiling for per-request budget overrides.
    pub max_budget_ms: u64,
}

impl Default for Config {
    fn default() -> Self {
        let opts = FeedbackOptions::default();
        Config {
            bind: "127.0.0.1".into(),
            port: 8080,
            exercises: None,
            session_log: Some(PathBuf::from("sessions.jsonl")),
            max_concurrent: 0,
            budget: opts.budget,
            fuel: opts.fuel,
            max_budget_ms: 30_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Config::parse(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
    }

    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn concurrency(&self) -> usize {
        if self.max_concurrent > 0 {
            self.max_concurrent
        } else {
            std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
        }
    }

    /// Feedback options for one request, with its budget override capped.
    pub fn options(&self, budget_ms: Option<u64>) -> FeedbackOptions {
        let time_ms = budget_ms.unwrap_or(self.budget.time_ms).min(self.max_budget_ms.max(self.budget.time_ms));
        FeedbackOptions { budget: Budget { time_ms, ..self.budget }, fuel: self.fuel, recovery: true }
    }
}
