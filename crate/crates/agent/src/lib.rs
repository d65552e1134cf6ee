//! ReAct agent runtime: a Generation module proposes hypotheses, an
//! Evaluation module critiques them, and the loop terminates either at the
//! evaluation threshold or through an extractor fallback.
//!
//! Chat backends are pluggable; the scripted replay backend makes whole
//! episodes deterministic and byte-reproducible.

pub mod action;
pub mod backend;
pub mod callparse;
pub mod config;
pub mod episode;
pub mod memory;
pub mod prompts;
pub mod tools;
pub mod trace;

pub use action::{Action, ApiCall, Assessment, ParseError, Proposal};
pub use backend::{
    BackendError, ChatBackend, ChatMessage, ModuleTag, OpenAiBackend, Role, ScriptedBackend,
    TurnMeta,
};
pub use config::{AgentConfig, Architecture, ExtractorContext};
pub use episode::{EpisodeError, EpisodeResult, EpisodeRunner, QueryCase, TerminatedBy};
pub use memory::{EpisodeMemory, MemoryEntry, MemoryLog, StepKind};
pub use tools::{LocalTools, ToolError, ToolOutcome, ToolRegistry, ToolRequest, ToolTransport};
