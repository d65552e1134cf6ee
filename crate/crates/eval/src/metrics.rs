//! The four metrics and aggregate reporting.
//!
//! Relation metrics are binary membership checks; description metrics are
//! judge scores out of 100. Binary metrics aggregate as percentages, judge
//! metrics as mean and population standard deviation over non-missing rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::testset::TestCase;
use crate::{EvalError, Result};
use lbd_kb::{KnowledgeBase, RelationType, Triplet, TripletKey};

/// 1 iff the proposed triplet is absent from the knowledge base.
pub fn novelty_r(kb: &KnowledgeBase, proposal: &Triplet) -> u8 {
    novelty_r_key(kb, &proposal.key(), false)
}

/// Key-based variant with the optional undirected membership mode.
pub fn novelty_r_key(kb: &KnowledgeBase, key: &TripletKey, undirected: bool) -> u8 {
    let known = if undirected {
        kb.contains_undirected(key)
    } else {
        kb.contains_key(key)
    };
    u8::from(!known)
}

/// 1 iff the proposed relation is among the case's ground-truth relations.
/// The proposal must be about the case's entity pair, orientation included.
pub fn alignment_r(case: &TestCase, proposal: &Triplet) -> Result<u8> {
    if proposal.subject.id != case.subject.id || proposal.object.id != case.object.id {
        return Err(EvalError::Contract(format!(
            "proposal entities ({}, {}) do not match case entities ({}, {})",
            proposal.subject.id, proposal.object.id, case.subject.id, case.object.id
        )));
    }
    Ok(u8::from(case.truth_relations.contains(&proposal.relation)))
}

/// One proposal as exchanged between the run and eval commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub case_index: usize,
    pub subject_id: String,
    pub object_id: String,
    pub relation: RelationType,
    pub description: String,
    pub terminated_by: String,
    pub outer_iterations_used: u32,
    pub inner_generation: u32,
    pub inner_evaluation: u32,
    pub api_calls: u32,
    #[serde(default)]
    pub api_function_counts: BTreeMap<String, u64>,
    pub backend_calls: u32,
}

/// One scored test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub case_index: usize,
    pub subject_id: String,
    pub object_id: String,
    pub relation: RelationType,
    pub novelty_r: u8,
    pub alignment_r: u8,
    pub novelty_d: Option<f64>,
    pub alignment_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub cases: usize,
    pub novelty_r_pct: f64,
    pub alignment_r_pct: f64,
    pub novelty_d_mean: Option<f64>,
    pub novelty_d_std: Option<f64>,
    pub novelty_d_missing: usize,
    pub alignment_d_mean: Option<f64>,
    pub alignment_d_std: Option<f64>,
    pub alignment_d_missing: usize,
}

/// Iteration and API-usage summaries over the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageSummary {
    pub avg_outer_iterations: f64,
    pub avg_inner_generation: f64,
    pub avg_inner_evaluation: f64,
    pub avg_api_calls: f64,
    pub api_function_counts: BTreeMap<String, u64>,
    pub terminated_by_threshold: u64,
    pub terminated_by_extractor: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub aggregates: Aggregates,
    /// Proposed-relation distribution; counts sum to the case count.
    pub relation_histogram: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<UsageSummary>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
fn pstd(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn judge_column(values: Vec<f64>) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        (None, None)
    } else {
        (Some(mean(&values)), Some(pstd(&values)))
    }
}

/// Aggregate per-case rows: percentages for the binary metrics, mean and
/// population standard deviation for judge metrics over non-missing rows,
/// and the proposed-relation histogram.
pub fn aggregate(rows: &[MetricRow]) -> Result<MetricReport> {
    if rows.is_empty() {
        return Err(EvalError::InvalidInput("no rows to aggregate".into()));
    }
    let n = rows.len();
    let novelty_vals: Vec<f64> = rows.iter().map(|r| r.novelty_r as f64).collect();
    let alignment_vals: Vec<f64> = rows.iter().map(|r| r.alignment_r as f64).collect();
    let novelty_d: Vec<f64> = rows.iter().filter_map(|r| r.novelty_d).collect();
    let alignment_d: Vec<f64> = rows.iter().filter_map(|r| r.alignment_d).collect();
    let (novelty_d_mean, novelty_d_std) = judge_column(novelty_d);
    let (alignment_d_mean, alignment_d_std) = judge_column(alignment_d);

    let mut relation_histogram: BTreeMap<String, u64> = BTreeMap::new();
    for row in rows {
        *relation_histogram
            .entry(row.relation.as_str().to_string())
            .or_insert(0) += 1;
    }

    Ok(MetricReport {
        rows: rows.to_vec(),
        aggregates: Aggregates {
            cases: n,
            novelty_r_pct: 100.0 * mean(&novelty_vals),
            alignment_r_pct: 100.0 * mean(&alignment_vals),
            novelty_d_mean,
            novelty_d_std,
            novelty_d_missing: n - rows.iter().filter(|r| r.novelty_d.is_some()).count(),
            alignment_d_mean,
            alignment_d_std,
            alignment_d_missing: n - rows.iter().filter(|r| r.alignment_d.is_some()).count(),
        },
        relation_histogram,
        usage: None,
    })
}

/// Summarize iteration counts and API usage across proposal records.
pub fn summarize_usage(records: &[ProposalRecord]) -> UsageSummary {
    if records.is_empty() {
        return UsageSummary::default();
    }
    let n = records.len() as f64;
    let mut api_function_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut threshold = 0u64;
    let mut extractor = 0u64;
    for rec in records {
        for (f, c) in &rec.api_function_counts {
            *api_function_counts.entry(f.clone()).or_insert(0) += c;
        }
        match rec.terminated_by.as_str() {
            "threshold" => threshold += 1,
            _ => extractor += 1,
        }
    }
    UsageSummary {
        avg_outer_iterations: records.iter().map(|r| r.outer_iterations_used as f64).sum::<f64>() / n,
        avg_inner_generation: records.iter().map(|r| r.inner_generation as f64).sum::<f64>() / n,
        avg_inner_evaluation: records.iter().map(|r| r.inner_evaluation as f64).sum::<f64>() / n,
        avg_api_calls: records.iter().map(|r| r.api_calls as f64).sum::<f64>() / n,
        api_function_counts,
        terminated_by_threshold: threshold,
        terminated_by_extractor: extractor,
    }
}

fn fmt_col(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.2}"),
        None => "-".to_string(),
    }
}

/// Plain-text table over the aggregate columns.
pub fn render_table(label: &str, report: &MetricReport) -> String {
    let a = &report.aggregates;
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>10} {:>12} {:>10} {:>13} {:>12} {:>15}\n",
        "setting",
        "novelty_r",
        "alignment_r",
        "novelty_d",
        "novelty_d(std)",
        "alignment_d",
        "alignment_d(std)"
    ));
    out.push_str(&format!(
        "{:<16} {:>10} {:>12} {:>10} {:>13} {:>12} {:>15}\n",
        label,
        format!("{:.2}", a.novelty_r_pct),
        format!("{:.2}", a.alignment_r_pct),
        fmt_col(a.novelty_d_mean),
        fmt_col(a.novelty_d_std),
        fmt_col(a.alignment_d_mean),
        fmt_col(a.alignment_d_std),
    ));
    out
}
