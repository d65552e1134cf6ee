//! Agent loop configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Memory layout between the Generation and Evaluation modules: one shared
/// log, or two isolated logs connected only by hand-off payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Single,
    Double,
}

/// What the extractor fallback sees under the double architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorContext {
    /// The generation-module log (which already carries assessment
    /// hand-off payloads).
    GenerationLog,
    /// Both module logs merged chronologically.
    FullMemory,
}

#[derive(Debug, Error)]
#[error("invalid agent config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Maximum Generation/Evaluation alternations per episode.
    pub max_outer_iterations: u32,
    /// Maximum ReAct steps within one module run.
    pub max_inner_iterations: u32,
    /// Minimum evaluation score (0-100) that, with confirmed novelty,
    /// terminates the episode early.
    pub evaluation_threshold: f64,
    /// How many identical API calls a module may repeat.
    pub max_retries: u32,
    pub temperature_react: f64,
    pub temperature_extract: f64,
    pub architecture: Architecture,
    /// Count the reverse triplet orientation as known for novelty checks.
    pub undirected_novelty: bool,
    pub extractor_context: ExtractorContext,
}

impl Default for AgentConfig {
    fn default() -> AgentConfig {
        AgentConfig {
            max_outer_iterations: 3,
            max_inner_iterations: 10,
            evaluation_threshold: 50.0,
            max_retries: 1,
            temperature_react: 0.7,
            temperature_extract: 0.2,
            architecture: Architecture::Single,
            undirected_novelty: false,
            extractor_context: ExtractorContext::GenerationLog,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_outer_iterations < 1 {
            return Err(ConfigError("max_outer_iterations must be >= 1".into()));
        }
        if self.max_inner_iterations < 1 {
            return Err(ConfigError("max_inner_iterations must be >= 1".into()));
        }
        if self.max_retries < 1 {
            return Err(ConfigError("max_retries must be >= 1".into()));
        }
        if !(0.0..=100.0).contains(&self.evaluation_threshold) {
            return Err(ConfigError(format!(
                "evaluation_threshold must be within 0-100, got {}",
                self.evaluation_threshold
            )));
        }
        for (name, t) in [
            ("temperature_react", self.temperature_react),
            ("temperature_extract", self.temperature_extract),
        ] {
            if !(0.0..=2.0).contains(&t) {
                return Err(ConfigError(format!("{name} must be within 0-2, got {t}")));
            }
        }
        Ok(())
    }
}
