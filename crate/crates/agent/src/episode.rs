//! Episode control: the Generation/Evaluation alternation, threshold
//! termination, forced turns at cap exhaustion, and the extractor fallback.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{parse_action, Action, ApiCall, Assessment, Proposal};
use crate::backend::{BackendError, ChatBackend, ChatMessage, ModuleTag, TurnMeta};
use crate::config::{AgentConfig, Architecture, ConfigError, ExtractorContext};
use crate::memory::{render_scratchpad, EpisodeMemory, MemoryEntry, StepKind};
use crate::prompts::{self, entity_type_token, PromptError};
use crate::tools::{detect_repeat, ToolRegistry};
use lbd_kb::{Entity, KnowledgeBase, TripletKey};

/// One test query: propose a relation between these two entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub subject: Entity,
    pub object: Entity,
}

impl QueryCase {
    fn display_name(e: &Entity) -> &str {
        if e.name.is_empty() {
            &e.id
        } else {
            &e.name
        }
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("backend failed after retries: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no proposal could be obtained from the generation module")]
    NoProposal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    Threshold,
    Extractor,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerCounts {
    pub generation: u32,
    pub evaluation: u32,
}

/// One executed API call with its canonical argument form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiCallRecord {
    pub module: ModuleTag,
    pub function: String,
    pub arguments: String,
}

/// The model's assessment plus the runtime's own novelty check; the runtime
/// check is authoritative for threshold termination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub assessment: Assessment,
    pub runtime_is_new: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub final_proposal: Proposal,
    pub terminated_by: TerminatedBy,
    pub outer_iterations_used: u32,
    pub inner_iterations: InnerCounts,
    pub api_call_log: Vec<ApiCallRecord>,
    pub final_runtime_novelty: bool,
    pub last_assessment: Option<AssessmentRecord>,
    pub backend_calls: u32,
}

const PARSE_RETRY: &str = "Reply with exactly one fenced block: a ```python API call or the \
required ```json object.";

struct EpisodeState {
    memory: EpisodeMemory,
    counts: InnerCounts,
    api_log: Vec<ApiCallRecord>,
    backend_calls: u32,
    last_proposal: Option<Proposal>,
}

/// Runs episodes over one immutable knowledge base and backend. The runner
/// holds no per-episode state, so one runner serves concurrent episodes.
pub struct EpisodeRunner<'a> {
    config: &'a AgentConfig,
    backend: &'a dyn ChatBackend,
    tools: &'a ToolRegistry,
    kb: &'a KnowledgeBase,
}

impl<'a> EpisodeRunner<'a> {
    pub fn new(
        config: &'a AgentConfig,
        backend: &'a dyn ChatBackend,
        tools: &'a ToolRegistry,
        kb: &'a KnowledgeBase,
    ) -> EpisodeRunner<'a> {
        EpisodeRunner {
            config,
            backend,
            tools,
            kb,
        }
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
        meta: TurnMeta,
        state: &mut EpisodeState,
    ) -> Result<String, BackendError> {
        let mut delay = std::time::Duration::from_millis(100);
        let mut last = None;
        for attempt in 0..3 {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            state.backend_calls += 1;
            match self.backend.complete(messages, temperature, &meta) {
                Ok(text) => return Ok(text),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn system_prompt(&self, template_id: &str) -> Result<String, PromptError> {
        prompts::render_prompt(
            template_id,
            &prompts::params([
                ("api_description", ToolRegistry::api_description().to_string()),
                ("max_outer_iterations", self.config.max_outer_iterations.to_string()),
                ("max_inner_iterations", self.config.max_inner_iterations.to_string()),
                ("evaluation_threshold", crate::action::format_score(self.config.evaluation_threshold)),
                ("max_retries", self.config.max_retries.to_string()),
            ]),
        )
    }

    fn query_prompt(
        &self,
        template_id: &str,
        case: &QueryCase,
        current_proposal: Option<&Proposal>,
        scratchpad: &str,
    ) -> Result<String, PromptError> {
        let mut params = prompts::params([
            ("entity1_name", QueryCase::display_name(&case.subject).to_string()),
            ("entity1_type", entity_type_token(case.subject.entity_type)),
            ("entity2_name", QueryCase::display_name(&case.object).to_string()),
            ("entity2_type", entity_type_token(case.object.entity_type)),
            ("scratchpad", scratchpad.to_string()),
        ]);
        if let Some(p) = current_proposal {
            params.insert("current_proposal".into(), p.to_json());
        }
        prompts::render_prompt(template_id, &params)
    }

    fn push(
        state: &mut EpisodeState,
        module: ModuleTag,
        kind: StepKind,
        outer: u32,
        inner: u32,
        text: String,
    ) {
        state.memory.push(MemoryEntry {
            step_kind: kind,
            module,
            outer_index: outer,
            inner_index: inner,
            text,
            handoff: false,
        });
    }

    fn handle_api_call(
        &self,
        state: &mut EpisodeState,
        module: ModuleTag,
        outer: u32,
        inner: u32,
        call: ApiCall,
    ) {
        let canonical = call.canonical();
        let repeats = detect_repeat(state.memory.visible(module), module, &call);
        Self::push(state, module, StepKind::Action, outer, inner, canonical.clone());
        if repeats >= self.config.max_retries as usize {
            Self::push(
                state,
                module,
                StepKind::Observation,
                outer,
                inner,
                format!(
                    "repeat limit reached: {canonical} was already executed; vary the call or \
                     act on the information gathered so far"
                ),
            );
        } else {
            let observation = self.tools.execute(&call);
            state.api_log.push(ApiCallRecord {
                module,
                function: call.function.clone(),
                arguments: canonical,
            });
            Self::push(state, module, StepKind::Observation, outer, inner, observation);
        }
    }

    /// Run the generation module for one outer iteration, returning its
    /// first proposal (forced at cap exhaustion if necessary).
    fn run_generation(
        &self,
        case: &QueryCase,
        outer: u32,
        state: &mut EpisodeState,
    ) -> Result<Proposal, EpisodeError> {
        let module = ModuleTag::Generation;
        let system = ChatMessage::system(self.system_prompt(prompts::GENERATION_SYSTEM)?);
        for inner in 1..=self.config.max_inner_iterations {
            state.counts.generation += 1;
            let scratchpad = state.memory.scratchpad(module);
            let user = ChatMessage::user(self.query_prompt(
                prompts::GENERATION_QUERY,
                case,
                None,
                &scratchpad,
            )?);
            let meta = TurnMeta { module, outer, inner };
            let text = self.complete(
                &[system.clone(), user],
                self.config.temperature_react,
                meta,
                state,
            )?;
            Self::push(state, module, StepKind::Thought, outer, inner, text.clone());
            match parse_action(&text, module) {
                Err(e) => Self::push(
                    state,
                    module,
                    StepKind::Observation,
                    outer,
                    inner,
                    format!("error: {e}. {PARSE_RETRY}"),
                ),
                Ok(Action::ApiCall(call)) => {
                    self.handle_api_call(state, module, outer, inner, call)
                }
                Ok(Action::Propose(p)) => {
                    Self::push(state, module, StepKind::Action, outer, inner, p.to_json());
                    Self::push(
                        state,
                        module,
                        StepKind::Observation,
                        outer,
                        inner,
                        "Proposal submitted for evaluation.".to_string(),
                    );
                    return Ok(p);
                }
                Ok(Action::Assess(_)) => Self::push(
                    state,
                    module,
                    StepKind::Observation,
                    outer,
                    inner,
                    format!("error: an assessment is not a valid generation action. {PARSE_RETRY}"),
                ),
            }
        }

        // forced-proposal turn: one extra completion, instructed to emit
        // only the proposal JSON; does not count against inner iterations
        let inner = self.config.max_inner_iterations + 1;
        let scratchpad = state.memory.scratchpad(module);
        let user = ChatMessage::user(self.query_prompt(
            prompts::GENERATION_QUERY,
            case,
            None,
            &scratchpad,
        )?);
        let forced = ChatMessage::user(prompts::FORCED_PROPOSAL.to_string());
        let meta = TurnMeta { module, outer, inner };
        let text = self.complete(
            &[system, user, forced],
            self.config.temperature_react,
            meta,
            state,
        )?;
        Self::push(state, module, StepKind::Thought, outer, inner, text.clone());
        match parse_action(&text, module) {
            Ok(Action::Propose(p)) => {
                Self::push(state, module, StepKind::Action, outer, inner, p.to_json());
                Self::push(
                    state,
                    module,
                    StepKind::Observation,
                    outer,
                    inner,
                    "Proposal submitted for evaluation.".to_string(),
                );
                Ok(p)
            }
            _ => state
                .last_proposal
                .clone()
                .ok_or(EpisodeError::NoProposal),
        }
    }

    /// Run the evaluation module for one outer iteration, returning its
    /// first assessment (synthesized as a zero-score one if even the forced
    /// turn yields none).
    fn run_evaluation(
        &self,
        case: &QueryCase,
        proposal: &Proposal,
        outer: u32,
        state: &mut EpisodeState,
    ) -> Result<Assessment, EpisodeError> {
        let module = ModuleTag::Evaluation;
        let system = ChatMessage::system(self.system_prompt(prompts::EVALUATION_SYSTEM)?);
        for inner in 1..=self.config.max_inner_iterations {
            state.counts.evaluation += 1;
            let scratchpad = state.memory.scratchpad(module);
            let user = ChatMessage::user(self.query_prompt(
                prompts::EVALUATION_QUERY,
                case,
                Some(proposal),
                &scratchpad,
            )?);
            let meta = TurnMeta { module, outer, inner };
            let text = self.complete(
                &[system.clone(), user],
                self.config.temperature_react,
                meta,
                state,
            )?;
            Self::push(state, module, StepKind::Thought, outer, inner, text.clone());
            match parse_action(&text, module) {
                Err(e) => Self::push(
                    state,
                    module,
                    StepKind::Observation,
                    outer,
                    inner,
                    format!("error: {e}. {PARSE_RETRY}"),
                ),
                Ok(Action::ApiCall(call)) => {
                    self.handle_api_call(state, module, outer, inner, call)
                }
                Ok(Action::Assess(a)) => {
                    Self::push(state, module, StepKind::Action, outer, inner, a.to_json());
                    Self::push(
                        state,
                        module,
                        StepKind::Observation,
                        outer,
                        inner,
                        "Assessment recorded.".to_string(),
                    );
                    return Ok(a);
                }
                Ok(Action::Propose(_)) => Self::push(
                    state,
                    module,
                    StepKind::Observation,
                    outer,
                    inner,
                    format!("error: a proposal is not a valid evaluation action. {PARSE_RETRY}"),
                ),
            }
        }

        // forced-assessment turn
        let inner = self.config.max_inner_iterations + 1;
        let scratchpad = state.memory.scratchpad(module);
        let user = ChatMessage::user(self.query_prompt(
            prompts::EVALUATION_QUERY,
            case,
            Some(proposal),
            &scratchpad,
        )?);
        let forced = ChatMessage::user(prompts::FORCED_ASSESSMENT.to_string());
        let meta = TurnMeta { module, outer, inner };
        let text = self.complete(
            &[system, user, forced],
            self.config.temperature_react,
            meta,
            state,
        )?;
        Self::push(state, module, StepKind::Thought, outer, inner, text.clone());
        match parse_action(&text, module) {
            Ok(Action::Assess(a)) => {
                Self::push(state, module, StepKind::Action, outer, inner, a.to_json());
                Self::push(
                    state,
                    module,
                    StepKind::Observation,
                    outer,
                    inner,
                    "Assessment recorded.".to_string(),
                );
                Ok(a)
            }
            _ => {
                let a = Assessment {
                    is_new: false,
                    feedback: "evaluation module produced no assessment".to_string(),
                    score: 0.0,
                };
                Self::push(state, module, StepKind::Action, outer, inner, a.to_json());
                Ok(a)
            }
        }
    }

    fn novelty(&self, case: &QueryCase, proposal: &Proposal) -> bool {
        let key = TripletKey::new(
            case.subject.id.clone(),
            proposal.relation,
            case.object.id.clone(),
        );
        if self.config.undirected_novelty {
            !self.kb.contains_undirected(&key)
        } else {
            !self.kb.contains_key(&key)
        }
    }

    /// One low-temperature completion over the visible memory that selects
    /// the final proposal; falls back to the last recorded proposal.
    fn extract_final(
        &self,
        case: &QueryCase,
        outer: u32,
        state: &mut EpisodeState,
    ) -> Result<Proposal, EpisodeError> {
        let scratchpad = match (self.config.architecture, self.config.extractor_context) {
            (Architecture::Single, _) | (Architecture::Double, ExtractorContext::GenerationLog) => {
                state.memory.scratchpad(ModuleTag::Generation)
            }
            (Architecture::Double, ExtractorContext::FullMemory) => {
                render_scratchpad(state.memory.transcript())
            }
        };
        let prompt = prompts::render_prompt(
            prompts::EXTRACTOR,
            &prompts::params([
                ("entity1_name", QueryCase::display_name(&case.subject).to_string()),
                ("entity2_name", QueryCase::display_name(&case.object).to_string()),
                ("scratchpad", scratchpad),
            ]),
        )?;
        let meta = TurnMeta {
            module: ModuleTag::Extractor,
            outer,
            inner: 0,
        };
        let text = self.complete(
            &[ChatMessage::user(prompt)],
            self.config.temperature_extract,
            meta,
            state,
        );
        let fallback = || state.last_proposal.clone().ok_or(EpisodeError::NoProposal);
        match text {
            Err(_) => fallback(),
            Ok(text) => match parse_action(&text, ModuleTag::Extractor) {
                Ok(Action::Propose(p)) => Ok(p),
                _ => fallback(),
            },
        }
    }

    /// Run one full episode: alternate generation and evaluation up to the
    /// outer cap, terminating early when the evaluation score reaches the
    /// threshold and the runtime novelty check passes.
    pub fn run_episode(
        &self,
        case: &QueryCase,
    ) -> Result<(EpisodeResult, EpisodeMemory), EpisodeError> {
        self.config.validate()?;
        let mut state = EpisodeState {
            memory: EpisodeMemory::new(self.config.architecture),
            counts: InnerCounts::default(),
            api_log: Vec::new(),
            backend_calls: 0,
            last_proposal: None,
        };
        let mut last_assessment: Option<AssessmentRecord> = None;
        let mut outer_used = 0;

        for outer in 1..=self.config.max_outer_iterations {
            outer_used = outer;
            let proposal = self.run_generation(case, outer, &mut state)?;
            state.last_proposal = Some(proposal.clone());
            let runtime_is_new = self.novelty(case, &proposal);
            let assessment = self.run_evaluation(case, &proposal, outer, &mut state)?;
            last_assessment = Some(AssessmentRecord {
                assessment: assessment.clone(),
                runtime_is_new,
            });
            if assessment.score >= self.config.evaluation_threshold && runtime_is_new {
                return Ok((
                    EpisodeResult {
                        final_proposal: proposal,
                        terminated_by: TerminatedBy::Threshold,
                        outer_iterations_used: outer,
                        inner_iterations: state.counts,
                        api_call_log: state.api_log,
                        final_runtime_novelty: runtime_is_new,
                        last_assessment,
                        backend_calls: state.backend_calls,
                    },
                    state.memory,
                ));
            }
            // backward hand-off: the assessment JSON reaches the generation
            // log explicitly under double architecture (the shared log
            // already carries it under single)
            if self.config.architecture == Architecture::Double {
                let inner = state.memory.max_inner(ModuleTag::Generation, outer) + 1;
                state.memory.push(MemoryEntry {
                    step_kind: StepKind::Observation,
                    module: ModuleTag::Generation,
                    outer_index: outer,
                    inner_index: inner,
                    text: assessment.to_json(),
                    handoff: true,
                });
            }
        }

        let final_proposal = self.extract_final(case, outer_used, &mut state)?;
        let final_runtime_novelty = self.novelty(case, &final_proposal);
        Ok((
            EpisodeResult {
                final_proposal,
                terminated_by: TerminatedBy::Extractor,
                outer_iterations_used: outer_used,
                inner_iterations: state.counts,
                api_call_log: state.api_log,
                final_runtime_novelty,
                last_assessment,
                backend_calls: state.backend_calls,
            },
            state.memory,
        ))
    }
}
