//! Deterministic lexical text index: inverted postings with a
//! TF-IDF-style score, reproducible bit-identically across runs.

use std::collections::BTreeMap;

use crate::error::{KbError, Result};

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

/// Inverted index over documents keyed by `D`.
#[derive(Debug, Clone)]
pub struct TextIndex<D> {
    postings: BTreeMap<String, BTreeMap<D, u64>>,
    doc_lengths: BTreeMap<D, u64>,
}

impl<D: Ord + Clone> Default for TextIndex<D> {
    fn default() -> Self {
        TextIndex {
            postings: BTreeMap::new(),
            doc_lengths: BTreeMap::new(),
        }
    }
}

impl<D: Ord + Clone> TextIndex<D> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document(&mut self, id: D, text: &str) {
        let tokens = tokenize(text);
        self.doc_lengths.insert(id.clone(), tokens.len() as u64);
        for token in tokens {
            *self
                .postings
                .entry(token)
                .or_default()
                .entry(id.clone())
                .or_insert(0) += 1;
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn contains_doc(&self, id: &D) -> bool {
        self.doc_lengths.contains_key(id)
    }

    pub fn term_frequency(&self, token: &str, id: &D) -> u64 {
        self.postings
            .get(token)
            .and_then(|p| p.get(id))
            .copied()
            .unwrap_or(0)
    }

    pub fn document_frequency(&self, token: &str) -> usize {
        self.postings.get(token).map(BTreeMap::len).unwrap_or(0)
    }

    /// Sum over query tokens of `tf(token, doc) * ln(1 + N/df(token))`.
    /// Zero when the document shares no token with the query.
    pub fn score(&self, query: &str, id: &D) -> Result<f64> {
        if !self.contains_doc(id) {
            return Err(KbError::NotFound("document not indexed".into()));
        }
        let n = self.doc_count() as f64;
        let mut score = 0.0;
        for token in tokenize(query) {
            let df = self.document_frequency(&token);
            if df == 0 {
                continue;
            }
            let tf = self.term_frequency(&token, id) as f64;
            score += tf * (1.0 + n / df as f64).ln();
        }
        Ok(score)
    }

    /// Scores for every document sharing at least one token with the query.
    /// Accumulation order (query tokens outer, documents inner) is fixed, so
    /// each document sees the same sequence of additions as [`Self::score`].
    pub fn scores(&self, query: &str) -> BTreeMap<D, f64> {
        let n = self.doc_count() as f64;
        let mut acc: BTreeMap<D, f64> = BTreeMap::new();
        for token in tokenize(query) {
            let Some(posting) = self.postings.get(&token) else {
                continue;
            };
            let weight = (1.0 + n / posting.len() as f64).ln();
            for (doc, tf) in posting {
                *acc.entry(doc.clone()).or_insert(0.0) += *tf as f64 * weight;
            }
        }
        acc
    }
}
