//! Append-only ReAct transcripts with per-architecture visibility.

use serde::{Deserialize, Serialize};

use crate::backend::ModuleTag;
use crate::config::Architecture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Thought,
    Action,
    Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub step_kind: StepKind,
    pub module: ModuleTag,
    pub outer_index: u32,
    pub inner_index: u32,
    pub text: String,
    /// Structured hand-off payload crossing module boundaries (double
    /// architecture only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub handoff: bool,
}

/// One module's (or the shared) append-only log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryLog {
    entries: Vec<MemoryEntry>,
}

impl MemoryLog {
    pub fn push(&mut self, entry: MemoryEntry) {
        if let Some(last) = self.entries.last() {
            debug_assert!(
                entry.outer_index >= last.outer_index,
                "outer index must not decrease"
            );
        }
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Render entries into the prompt scratchpad: thoughts verbatim,
/// observations prefixed, action entries skipped (the thought text already
/// contains the fenced action block the model wrote).
pub fn render_scratchpad<'a>(entries: impl IntoIterator<Item = &'a MemoryEntry>) -> String {
    let mut lines = Vec::new();
    for e in entries {
        match e.step_kind {
            StepKind::Thought => lines.push(e.text.clone()),
            StepKind::Observation => lines.push(format!("Observation: {}", e.text)),
            StepKind::Action => {}
        }
    }
    lines.join("\n")
}

/// Episode memory: one shared log under the single architecture, two
/// isolated logs under double. A chronological transcript of every entry is
/// kept for traces in both cases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeMemory {
    pub architecture: Architecture,
    shared: MemoryLog,
    generation: MemoryLog,
    evaluation: MemoryLog,
    transcript: Vec<MemoryEntry>,
}

impl EpisodeMemory {
    pub fn new(architecture: Architecture) -> EpisodeMemory {
        EpisodeMemory {
            architecture,
            shared: MemoryLog::default(),
            generation: MemoryLog::default(),
            evaluation: MemoryLog::default(),
            transcript: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        self.transcript.push(entry.clone());
        match self.architecture {
            Architecture::Single => self.shared.push(entry),
            Architecture::Double => match entry.module {
                ModuleTag::Generation => self.generation.push(entry),
                ModuleTag::Evaluation => self.evaluation.push(entry),
                _ => self.shared.push(entry),
            },
        }
    }

    /// Entries visible to a module when its prompt context is built.
    pub fn visible(&self, module: ModuleTag) -> &[MemoryEntry] {
        match self.architecture {
            Architecture::Single => self.shared.entries(),
            Architecture::Double => match module {
                ModuleTag::Generation => self.generation.entries(),
                ModuleTag::Evaluation => self.evaluation.entries(),
                _ => self.shared.entries(),
            },
        }
    }

    pub fn scratchpad(&self, module: ModuleTag) -> String {
        render_scratchpad(self.visible(module))
    }

    /// Every entry in true append order, for trace export.
    pub fn transcript(&self) -> &[MemoryEntry] {
        &self.transcript
    }

    /// Highest inner index a module has used within `outer`, so hand-off
    /// entries can keep per-module (outer, inner) monotone.
    pub fn max_inner(&self, module: ModuleTag, outer: u32) -> u32 {
        self.visible(module)
            .iter()
            .filter(|e| e.outer_index == outer && e.module == module)
            .map(|e| e.inner_index)
            .max()
            .unwrap_or(0)
    }
}
