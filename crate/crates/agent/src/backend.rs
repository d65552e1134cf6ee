//! Chat backend contract plus the deterministic scripted backend and an
//! OpenAI-compatible HTTP client.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Which part of the runtime is asking for a completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleTag {
    Generation,
    Evaluation,
    Extractor,
    Judge,
}

/// Turn coordinates passed alongside every completion so replay scripts can
/// address specific turns. Live backends ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnMeta {
    pub module: ModuleTag,
    pub outer: u32,
    pub inner: u32,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no replay rule matches {module:?} outer={outer} inner={inner}")]
    NoRuleMatches {
        module: ModuleTag,
        outer: u32,
        inner: u32,
    },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

/// A chat completion backend. Implementations must be safely callable from
/// concurrent episodes.
pub trait ChatBackend: Send + Sync {
    fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
        meta: &TurnMeta,
    ) -> Result<String, BackendError>;
}

/// One replay rule: every set field must match; unset fields match anything.
/// `contains` matches a substring of the concatenated message contents.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MatchSpec {
    #[serde(default)]
    pub module: Option<ModuleTag>,
    #[serde(default)]
    pub outer: Option<u32>,
    #[serde(default)]
    pub inner: Option<u32>,
    #[serde(default)]
    pub contains: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRule {
    #[serde(rename = "match")]
    pub match_spec: MatchSpec,
    pub response: String,
}

/// Deterministic replay backend: the first matching rule wins; an unmatched
/// turn is an error.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    rules: Vec<ReplayRule>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ReplayRule>) -> ScriptedBackend {
        ScriptedBackend { rules }
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<ScriptedBackend, BackendError> {
        let mut rules = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| BackendError::Transport(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rule: ReplayRule = serde_json::from_str(&line).map_err(|e| {
                BackendError::Malformed(format!("replay line {}: {e}", idx + 1))
            })?;
            rules.push(rule);
        }
        Ok(ScriptedBackend { rules })
    }

    pub fn from_script(script: &str) -> Result<ScriptedBackend, BackendError> {
        Self::from_reader(std::io::Cursor::new(script))
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        _temperature: f64,
        meta: &TurnMeta,
    ) -> Result<String, BackendError> {
        let haystack: String = messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        for rule in &self.rules {
            let m = &rule.match_spec;
            if m.module.is_some_and(|v| v != meta.module) {
                continue;
            }
            if m.outer.is_some_and(|v| v != meta.outer) {
                continue;
            }
            if m.inner.is_some_and(|v| v != meta.inner) {
                continue;
            }
            if m.contains.as_ref().is_some_and(|s| !haystack.contains(s)) {
                continue;
            }
            return Ok(rule.response.clone());
        }
        Err(BackendError::NoRuleMatches {
            module: meta.module,
            outer: meta.outer,
            inner: meta.inner,
        })
    }
}

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct OpenAiBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl OpenAiBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> OpenAiBackend {
        OpenAiBackend {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            client: reqwest::blocking::Client::new(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

impl ChatBackend for OpenAiBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
        _meta: &TurnMeta,
    ) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.endpoint);
        let mut req = self.client.post(&url).json(&ChatRequest {
            model: &self.model,
            messages,
            temperature,
        });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(BackendError::Transport(format!(
                "{url} returned {}",
                resp.status()
            )));
        }
        let body: ChatResponse = resp
            .json()
            .map_err(|e| BackendError::Malformed(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Malformed("response carries no content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(module: ModuleTag, outer: u32, inner: u32) -> TurnMeta {
        TurnMeta {
            module,
            outer,
            inner,
        }
    }

    #[test]
    fn first_matching_rule_wins() {
        let backend = ScriptedBackend::from_script(
            r#"{"match":{"module":"generation","inner":1},"response":"first"}
{"match":{"module":"generation"},"response":"second"}
{"match":{},"response":"fallback"}"#,
        )
        .unwrap();
        let msgs = [ChatMessage::user("hello")];
        assert_eq!(
            backend.complete(&msgs, 0.7, &meta(ModuleTag::Generation, 1, 1)).unwrap(),
            "first"
        );
        assert_eq!(
            backend.complete(&msgs, 0.7, &meta(ModuleTag::Generation, 1, 2)).unwrap(),
            "second"
        );
        assert_eq!(
            backend.complete(&msgs, 0.7, &meta(ModuleTag::Evaluation, 2, 5)).unwrap(),
            "fallback"
        );
    }

    #[test]
    fn contains_matches_against_all_messages() {
        let backend = ScriptedBackend::from_script(
            r#"{"match":{"contains":"magic token"},"response":"seen"}"#,
        )
        .unwrap();
        let hit = [
            ChatMessage::system("system text"),
            ChatMessage::user("has the magic token inside"),
        ];
        assert_eq!(
            backend.complete(&hit, 0.7, &meta(ModuleTag::Generation, 1, 1)).unwrap(),
            "seen"
        );
        let miss = [ChatMessage::user("nothing here")];
        assert!(matches!(
            backend.complete(&miss, 0.7, &meta(ModuleTag::Generation, 1, 1)),
            Err(BackendError::NoRuleMatches { .. })
        ));
    }
}
