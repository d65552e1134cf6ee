//! Parsing model output into agent actions.
//!
//! A fenced block labeled `python` is an API call; a block labeled `json`
//! is a proposal (generation) or an assessment (evaluation). When several
//! blocks exist, the last one wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::ModuleTag;
use crate::callparse::{parse_call, ParsedCall};
use lbd_kb::RelationType;

pub type ApiCall = ParsedCall;

/// A hypothesis proposal: relation plus natural-language description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub relation: RelationType,
    pub description: String,
}

impl Proposal {
    /// The JSON wire form, key order matching the prompt examples.
    pub fn to_json(&self) -> String {
        format!(
            r#"{{"Relation": {}, "Hypothesis Description": {}}}"#,
            serde_json::to_string(self.relation.as_str()).expect("string serializes"),
            serde_json::to_string(&self.description).expect("string serializes"),
        )
    }
}

/// An evaluation of the current proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub is_new: bool,
    pub feedback: String,
    pub score: f64,
}

impl Assessment {
    pub fn to_json(&self) -> String {
        format!(
            r#"{{"Is New": "{}", "Feedback": {}, "Evaluation Score": "{}"}}"#,
            if self.is_new { "True" } else { "False" },
            serde_json::to_string(&self.feedback).expect("string serializes"),
            format_score(self.score),
        )
    }
}

pub fn format_score(score: f64) -> String {
    if score.fract() == 0.0 {
        format!("{}", score as i64)
    } else {
        format!("{score}")
    }
}

/// One step the agent decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    ApiCall(ApiCall),
    Propose(Proposal),
    Assess(Assessment),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("no fenced ```python or ```json action block found")]
    NoActionBlock,
    #[error("bad json action: {0}")]
    BadJson(String),
    #[error("bad api call: {0}")]
    BadCall(String),
    #[error("invalid action: {0}")]
    Validation(String),
}

/// Extract fenced blocks as (label, content) pairs.
pub fn fenced_blocks(text: &str) -> Vec<(String, String)> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let Some(nl) = after.find('\n') else { break };
        let label = after[..nl].trim().to_ascii_lowercase();
        let body = &after[nl + 1..];
        let Some(end) = body.find("```") else { break };
        blocks.push((label, body[..end].to_string()));
        rest = &body[end + 3..];
    }
    blocks
}

fn json_str(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn parse_proposal(obj: &serde_json::Map<String, serde_json::Value>) -> Result<Proposal, ParseError> {
    let relation_raw = obj
        .get("Relation")
        .and_then(json_str)
        .ok_or_else(|| ParseError::BadJson("missing \"Relation\" key".into()))?;
    let description = obj
        .get("Hypothesis Description")
        .and_then(json_str)
        .ok_or_else(|| ParseError::BadJson("missing \"Hypothesis Description\" key".into()))?;
    let relation = RelationType::parse(&relation_raw)
        .map_err(|_| ParseError::Validation(format!("unknown relation {relation_raw:?}")))?;
    if relation == RelationType::Associate {
        return Err(ParseError::Validation(
            "relation 'associate' is excluded from proposals".into(),
        ));
    }
    Ok(Proposal {
        relation,
        description,
    })
}

fn parse_assessment(
    obj: &serde_json::Map<String, serde_json::Value>,
) -> Result<Assessment, ParseError> {
    let is_new_raw = obj
        .get("Is New")
        .and_then(json_str)
        .ok_or_else(|| ParseError::BadJson("missing \"Is New\" key".into()))?;
    let feedback = obj
        .get("Feedback")
        .and_then(json_str)
        .ok_or_else(|| ParseError::BadJson("missing \"Feedback\" key".into()))?;
    let score_raw = obj
        .get("Evaluation Score")
        .and_then(json_str)
        .ok_or_else(|| ParseError::BadJson("missing \"Evaluation Score\" key".into()))?;
    let is_new = match is_new_raw.trim().to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => {
            return Err(ParseError::Validation(format!(
                "\"Is New\" must be True or False, got {other:?}"
            )))
        }
    };
    let score: f64 = score_raw
        .trim()
        .parse()
        .map_err(|_| ParseError::Validation(format!("unparseable score {score_raw:?}")))?;
    if !(0.0..=100.0).contains(&score) {
        return Err(ParseError::Validation(format!(
            "score {score} outside 0-100"
        )));
    }
    Ok(Assessment {
        is_new,
        feedback,
        score,
    })
}

/// Parse the last recognized fenced block of `text` into an action. The
/// expected module decides how a `json` block is interpreted: proposals for
/// generation (and the extractor), assessments for evaluation.
pub fn parse_action(text: &str, expected_module: ModuleTag) -> Result<Action, ParseError> {
    let blocks = fenced_blocks(text);
    let last = blocks
        .into_iter()
        .rfind(|(label, _)| label == "python" || label == "json")
        .ok_or(ParseError::NoActionBlock)?;
    let (label, content) = last;
    if label == "python" {
        let call = parse_call(&content).map_err(|e| ParseError::BadCall(e.0))?;
        return Ok(Action::ApiCall(call));
    }
    let value: serde_json::Value = serde_json::from_str(content.trim())
        .map_err(|e| ParseError::BadJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ParseError::BadJson("expected a JSON object".into()))?;
    match expected_module {
        ModuleTag::Evaluation => Ok(Action::Assess(parse_assessment(obj)?)),
        _ => Ok(Action::Propose(parse_proposal(obj)?)),
    }
}
