//! Run configuration: one TOML file plus flag overrides. The live-backend
//! API key arrives only through an environment variable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use lbd_agent::{AgentConfig, Architecture};

pub const DEFAULT_API_KEY_ENV: &str = "LBD_API_KEY";

#[derive(Debug, Error)]
#[error("config error: {0}")]
pub struct ConfigFileError(pub String);

/// The structured key-value config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub agent: AgentConfig,
    pub parallelism: Option<usize>,
    /// Model name for a live OpenAI-compatible backend.
    pub model: Option<String>,
    /// Environment variable holding the live-backend API key.
    pub api_key_env: Option<String>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<RunConfigFile, ConfigFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigFileError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigFileError(format!("{}: {e}", path.display())))
    }
}

/// How episodes talk to a chat model.
#[derive(Debug, Clone)]
pub enum BackendChoice {
    Replay(PathBuf),
    Live {
        endpoint: String,
        model: String,
        api_key_env: String,
    },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub parallelism: usize,
    pub backend: BackendChoice,
}

pub struct RunOverrides {
    pub parallelism: Option<usize>,
    pub threshold: Option<f64>,
    pub architecture: Option<Architecture>,
    pub replay: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
}

impl RunConfig {
    /// Merge the config file with flag overrides and validate. Exactly one
    /// of the replay script and the live endpoint must be set.
    pub fn resolve(
        file: Option<RunConfigFile>,
        overrides: RunOverrides,
    ) -> Result<RunConfig, ConfigFileError> {
        let file = file.unwrap_or_default();
        let mut agent = file.agent;
        if let Some(t) = overrides.threshold {
            agent.evaluation_threshold = t;
        }
        if let Some(a) = overrides.architecture {
            agent.architecture = a;
        }
        agent
            .validate()
            .map_err(|e| ConfigFileError(e.to_string()))?;

        let parallelism = overrides
            .parallelism
            .or(file.parallelism)
            .unwrap_or(1);
        if parallelism < 1 {
            return Err(ConfigFileError("parallelism must be >= 1".into()));
        }

        let backend = match (overrides.replay, overrides.endpoint) {
            (Some(_), Some(_)) => {
                return Err(ConfigFileError(
                    "set exactly one of --replay and --endpoint, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigFileError(
                    "set exactly one of --replay and --endpoint".into(),
                ))
            }
            (Some(path), None) => BackendChoice::Replay(path),
            (None, Some(endpoint)) => BackendChoice::Live {
                endpoint,
                model: overrides
                    .model
                    .or(file.model)
                    .ok_or_else(|| ConfigFileError("a live endpoint needs a model name".into()))?,
                api_key_env: file
                    .api_key_env
                    .unwrap_or_else(|| DEFAULT_API_KEY_ENV.to_string()),
            },
        };
        Ok(RunConfig {
            agent,
            parallelism,
            backend,
        })
    }
}
