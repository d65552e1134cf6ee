//! LLM-judge scoring of hypothesis descriptions against related past
//! literature (novelty) and ground-truth literature (alignment).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::testset::TestCase;
use crate::Result;
use lbd_agent::action::fenced_blocks;
use lbd_agent::backend::{BackendError, ChatBackend, ChatMessage, ModuleTag, TurnMeta};
use lbd_agent::prompts;
use lbd_kb::query::{BrowseResult, QueryEngine};
use lbd_kb::render::render_browse;
use lbd_kb::{Article, Pmid};

/// Judge scores, each 0-100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeScores {
    pub novelty_d: f64,
    pub alignment_d: f64,
}

/// Cap on related-past articles rendered into the judge prompt, keeping the
/// most text-relevant ones.
pub const RELATED_PAST_CAP: usize = 20;

const REASK: &str = "Your previous reply could not be parsed. Output only the JSON object with \
keys \"Novelty Score\" and \"Alignment Score\".";

fn parse_scores(text: &str) -> Option<JudgeScores> {
    let candidate = fenced_blocks(text)
        .into_iter()
        .rfind(|(label, _)| label == "json" || label.is_empty())
        .map(|(_, body)| body)
        .unwrap_or_else(|| text.to_string());
    let value: serde_json::Value = serde_json::from_str(candidate.trim()).ok()?;
    let obj = value.as_object()?;
    let get = |key: &str| -> Option<f64> {
        let v = obj.get(key)?;
        let parsed = match v {
            serde_json::Value::Number(n) => n.as_f64()?,
            serde_json::Value::String(s) => s.trim().parse().ok()?,
            _ => return None,
        };
        (0.0..=100.0).contains(&parsed).then_some(parsed)
    };
    Some(JudgeScores {
        novelty_d: get("Novelty Score")?,
        alignment_d: get("Alignment Score")?,
    })
}

/// Render articles as a numbered literature list for the judge prompt.
fn literature(articles: Vec<Article>) -> String {
    if articles.is_empty() {
        return "(none available)".to_string();
    }
    render_browse(&BrowseResult {
        articles,
        missing: Vec::new(),
    })
}

/// Related-past articles resolved from the knowledge base, ranked by text
/// relevance to the proposal description, capped at [`RELATED_PAST_CAP`].
fn related_past_articles(
    engine: &QueryEngine,
    case: &TestCase,
    proposal_description: &str,
) -> Vec<Article> {
    let mut scored: Vec<(f64, Pmid)> = case
        .related_past_pmids
        .iter()
        .filter_map(|p| {
            engine
                .score_text(proposal_description, *p)
                .ok()
                .map(|s| (s, *p))
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(RELATED_PAST_CAP)
        .filter_map(|(_, p)| engine.kb().article(p).cloned())
        .collect()
}

fn complete_with_retry(
    backend: &dyn ChatBackend,
    messages: &[ChatMessage],
    temperature: f64,
    meta: &TurnMeta,
) -> std::result::Result<String, BackendError> {
    let mut delay = std::time::Duration::from_millis(100);
    let mut last = None;
    for attempt in 0..3 {
        if attempt > 0 {
            std::thread::sleep(delay);
            delay *= 2;
        }
        match backend.complete(messages, temperature, meta) {
            Ok(text) => return Ok(text),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("attempted at least once"))
}

/// Ask the judge to score a proposal description. One re-ask on a parse
/// failure; a second failure records the scores as missing (`None`).
/// Transport failures (after bounded retries) are real errors.
pub fn judge_descriptions(
    backend: &dyn ChatBackend,
    case: &TestCase,
    proposal_description: &str,
    engine: &QueryEngine,
    test_articles: &BTreeMap<Pmid, Article>,
    case_index: usize,
    temperature_extract: f64,
) -> Result<Option<JudgeScores>> {
    let related = literature(related_past_articles(engine, case, proposal_description));
    let truth = literature(
        case.truth_pmids
            .iter()
            .filter_map(|p| test_articles.get(p).cloned())
            .collect(),
    );
    let display = |e: &lbd_kb::Entity| {
        if e.name.is_empty() {
            e.id.clone()
        } else {
            e.name.clone()
        }
    };
    let prompt = prompts::render_prompt(
        prompts::JUDGE,
        &prompts::params([
            ("entity1_name", display(&case.subject)),
            ("entity2_name", display(&case.object)),
            ("proposed_hypothesis_description", proposal_description.to_string()),
            ("related_past_literature", related),
            ("ground_truth_literature", truth),
        ]),
    )?;

    let mut messages = vec![ChatMessage::user(prompt)];
    for attempt in 1..=2u32 {
        let meta = TurnMeta {
            module: ModuleTag::Judge,
            outer: case_index as u32,
            inner: attempt,
        };
        let text = complete_with_retry(backend, &messages, temperature_extract, &meta)?;
        if let Some(scores) = parse_scores(&text) {
            return Ok(Some(scores));
        }
        messages.push(ChatMessage::assistant(text));
        messages.push(ChatMessage::user(REASK.to_string()));
    }
    Ok(None)
}
