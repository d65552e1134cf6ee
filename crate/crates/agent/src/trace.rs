//! Episode trace export: one JSONL document per episode holding the full
//! transcript plus the result, consumed by the reporting pipeline.

use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeResult, QueryCase};
use crate::memory::{EpisodeMemory, MemoryEntry};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "snake_case")]
pub enum TraceLine {
    Entry(MemoryEntry),
    Result {
        case_index: usize,
        subject_id: String,
        object_id: String,
        result: EpisodeResult,
    },
}

/// Serialize an episode into trace JSONL: every transcript entry in append
/// order, then the result line.
pub fn to_trace_jsonl(
    case_index: usize,
    case: &QueryCase,
    memory: &EpisodeMemory,
    result: &EpisodeResult,
) -> String {
    let mut out = String::new();
    for entry in memory.transcript() {
        out.push_str(&serde_json::to_string(&TraceLine::Entry(entry.clone())).expect("serializes"));
        out.push('\n');
    }
    out.push_str(
        &serde_json::to_string(&TraceLine::Result {
            case_index,
            subject_id: case.subject.id.clone(),
            object_id: case.object.id.clone(),
            result: result.clone(),
        })
        .expect("serializes"),
    );
    out.push('\n');
    out
}

/// Parse a trace document back into lines.
pub fn parse_trace_jsonl(text: &str) -> Result<Vec<TraceLine>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
