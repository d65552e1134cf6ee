//! Evaluation harness: builds the held-out test set, scores proposals with
//! binary membership metrics and LLM-judge description metrics, and
//! aggregates per-case rows into a report.

pub mod judge;
pub mod metrics;
pub mod testset;

pub use judge::{judge_descriptions, JudgeScores};
pub use metrics::{
    aggregate, alignment_r, novelty_r, novelty_r_key, summarize_usage, Aggregates, MetricReport,
    MetricRow, ProposalRecord, UsageSummary,
};
pub use testset::{
    build_test_set, load_test_set, write_test_set, ImpactTable, RelatedPastMode, TestCase,
    TestSetOptions,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Kb(#[from] lbd_kb::KbError),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("backend failed after retries: {0}")]
    Backend(#[from] lbd_agent::BackendError),
    #[error(transparent)]
    Prompt(#[from] lbd_agent::prompts::PromptError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
