//! Agent-facing layer: prompt templates, the completion client, the
//! modeling agent loop, trace compaction, and run selection.

pub mod basic;
pub mod client;
pub mod compact;
pub mod prompts;
pub mod select;

pub use basic::{
    external_run, generate_candidate, refine_candidate, run_agent, AgentError, AgentKind,
    AgentRun, Budget, Candidate, CandidateHealth, GenerationInputs,
};
pub use client::{ClientError, HttpClient, LimitedClient, LlmClient, StubClient};
pub use compact::{compact_trace, compact_traces, CompactError, CompactTrace, ExpandedRow};
pub use select::{select_best, CandidateScores};
