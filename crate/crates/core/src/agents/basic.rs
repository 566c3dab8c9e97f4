//! Model-generation agents.
//!
//! A run produces up to `budget.candidates` candidate models. Each
//! candidate is generated from the model prompt, given a configuration
//! from the config prompt, and then repaired at most
//! `budget.refinements` times while the checker still reports syntax or
//! runtime errors. Candidates whose generation call fails outright are
//! skipped; a failed refinement call keeps the candidate as it was.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::client::{strip_code_fence, ClientError, LlmClient};
use super::prompts::{instantiate, CONFIG_GENERATION, MODEL_GENERATION, REFINEMENT};

/// Which generation strategy produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Generate from implementation source code.
    Basic,
    /// Generate from a compacted execution trace.
    TraceLearning,
    /// Accept pre-generated model files; no generation calls.
    External,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Basic => write!(f, "basic"),
            AgentKind::TraceLearning => write!(f, "trace-learning"),
            AgentKind::External => write!(f, "external"),
        }
    }
}

/// Call budget for one run. The generation-call ceiling is
/// `candidates * (1 + refinements)` plus `candidates` config calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub candidates: u32,
    pub refinements: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { candidates: 5, refinements: 3 }
    }
}

/// One candidate model plus its configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub model: String,
    pub config: String,
    /// Refinement iterations actually consumed.
    pub iterations: u32,
}

/// Outcome of one agent run over a task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentRun {
    pub agent_kind: AgentKind,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` once scoring has picked a winner.
    pub selected: Option<usize>,
    pub budget: Budget,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("model client failed: {0}")]
    Client(#[from] ClientError),
    #[error("refinement attempt {attempt} exceeds the cap of {max}")]
    AttemptExceeded { attempt: u32, max: u32 },
    #[error("refinement requires at least one syntax or runtime error to fix")]
    NothingToFix,
}

/// Inputs for generating one candidate. For the basic agent `payload`
/// is the implementation source; for the trace-learning agent it is the
/// rendered compact trace standing in for source code.
#[derive(Debug, Clone)]
pub struct GenerationInputs<'a> {
    pub system_name: &'a str,
    pub module_name: &'a str,
    pub file_path: &'a str,
    pub payload: &'a str,
    pub granularity: &'a str,
}

/// Checker feedback on a candidate, used to decide whether refinement
/// is needed and what to tell the repair prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateHealth {
    pub syntax_errors: String,
    pub runtime_errors: String,
}

impl CandidateHealth {
    pub fn clean(&self) -> bool {
        self.syntax_errors.trim().is_empty() && self.runtime_errors.trim().is_empty()
    }
}

/// Rewrites the `---- MODULE name ----` header to carry `name`. A
/// response without a module header is returned unchanged; the syntax
/// stage will catch it and route the candidate into refinement.
pub fn force_module_name(model: &str, name: &str) -> String {
    let mut out = String::with_capacity(model.len());
    let mut forced = false;
    for (i, line) in model.lines().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if !forced && line.contains("MODULE") && line.trim_start().starts_with('-') {
            out.push_str(&format!("---- MODULE {name} ----"));
            forced = true;
        } else {
            out.push_str(line);
        }
    }
    if model.ends_with('\n') {
        out.push('\n');
    }
    out
}

/// Generates one candidate: model prompt, then config prompt seeded
/// with the model text. Both responses are stripped of code fences and
/// the module header is forced to the task's required name.
pub fn generate_candidate(
    client: &dyn LlmClient,
    inputs: &GenerationInputs<'_>,
) -> Result<Candidate, AgentError> {
    let model_prompt = instantiate(
        MODEL_GENERATION,
        &[
            ("system_name", inputs.system_name),
            ("file_path", inputs.file_path),
            ("source_code", inputs.payload),
            ("granularity", inputs.granularity),
            ("module_name", inputs.module_name),
        ],
    );
    let raw_model = client.complete(&model_prompt)?;
    let model = force_module_name(strip_code_fence(&raw_model), inputs.module_name);

    let config_prompt = instantiate(
        CONFIG_GENERATION,
        &[("system_name", inputs.system_name), ("tla_spec", &model)],
    );
    let raw_config = client.complete(&config_prompt)?;
    let config = strip_code_fence(&raw_config).to_string();

    Ok(Candidate { model, config, iterations: 0 })
}

/// Repairs a candidate that failed the syntax or runtime stage. The
/// caller supplies the checker's error text; refinement with nothing to
/// fix or past the attempt cap is refused. A client failure surfaces as
/// an error so the caller can keep the candidate as-is.
#[allow(clippy::too_many_arguments)]
pub fn refine_candidate(
    client: &dyn LlmClient,
    candidate: &Candidate,
    system_name: &str,
    module_name: &str,
    health: &CandidateHealth,
    attempt: u32,
    max_attempts: u32,
) -> Result<Candidate, AgentError> {
    if attempt > max_attempts {
        return Err(AgentError::AttemptExceeded { attempt, max: max_attempts });
    }
    if health.clean() {
        return Err(AgentError::NothingToFix);
    }
    let prompt = instantiate(
        REFINEMENT,
        &[
            ("system_name", system_name),
            ("module_name", module_name),
            ("current_model", &candidate.model),
            ("current_tlc_cfg", &candidate.config),
            ("syntax_errors", &health.syntax_errors),
            ("runtime_errors", &health.runtime_errors),
            ("attempt_number", &attempt.to_string()),
            ("max_attempts", &max_attempts.to_string()),
        ],
    );
    let raw = client.complete(&prompt)?;
    let model = force_module_name(strip_code_fence(&raw), module_name);
    Ok(Candidate {
        model,
        config: candidate.config.clone(),
        iterations: candidate.iterations + 1,
    })
}

/// Drives a full generate-and-refine run. `check` reports checker
/// feedback for a candidate; refinement runs only while the feedback
/// shows syntax or runtime errors and the per-candidate cap allows it.
/// Failed generation calls skip the slot, failed refinement calls keep
/// the candidate as it stands.
pub fn run_agent<F>(
    client: &dyn LlmClient,
    kind: AgentKind,
    inputs: &GenerationInputs<'_>,
    budget: Budget,
    mut check: F,
) -> AgentRun
where
    F: FnMut(&Candidate) -> CandidateHealth,
{
    let mut candidates = Vec::new();
    if kind != AgentKind::External {
        for _slot in 0..budget.candidates {
            let Ok(mut candidate) = generate_candidate(client, inputs) else {
                continue;
            };
            let mut health = check(&candidate);
            let mut attempt = 1;
            while !health.clean() && attempt <= budget.refinements {
                match refine_candidate(
                    client,
                    &candidate,
                    inputs.system_name,
                    inputs.module_name,
                    &health,
                    attempt,
                    budget.refinements,
                ) {
                    Ok(repaired) => {
                        candidate = repaired;
                        health = check(&candidate);
                    }
                    Err(_) => break,
                }
                attempt += 1;
            }
            candidates.push(candidate);
        }
    }
    AgentRun { agent_kind: kind, candidates, selected: None, budget }
}

/// Wraps pre-generated model files as an external-agent run.
pub fn external_run(models: Vec<(String, String)>, budget: Budget) -> AgentRun {
    let candidates = models
        .into_iter()
        .map(|(model, config)| Candidate { model, config, iterations: 0 })
        .collect();
    AgentRun { agent_kind: AgentKind::External, candidates, selected: None, budget }
}
