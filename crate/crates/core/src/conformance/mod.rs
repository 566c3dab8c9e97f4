//! Conformance checking: does the candidate model explain real
//! executions of the implementation?
//!
//! Each recorded trace is compiled into a replay specification
//! ([`tracespec`]) and model checked. A trace validates when the replay
//! consumes every event; otherwise the deepest cursor value locates the
//! first event the model cannot explain. Per-event results aggregate
//! into instrumented-action coverage for the conformance metric and a
//! per-trace pass rate.

pub mod trace;
pub mod tracespec;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::checker::{run_model_check, CheckerConfig, CheckerError, RunMode, RunOptions, TlcResult};
use crate::mapping::{CanonicalElements, MappingConfig};
use crate::scoring::Score;

pub use trace::{load_trace_file, load_traces, parse_jsonl, TraceError, TraceEvent, TraceFormat, TraceRecord};
pub use tracespec::{generate_trace_spec, MappedEvent, TraceSpec, TraceSpecError};

#[derive(Debug, Error)]
pub enum ConformanceError {
    #[error(transparent)]
    Spec(#[from] TraceSpecError),
    #[error(transparent)]
    Checker(#[from] CheckerError),
    #[error("no traces to validate")]
    NoTraces,
}

/// Outcome of replaying one trace against one model.
#[derive(Debug, Clone)]
pub struct TraceValidation {
    pub trace_id: String,
    pub validated: bool,
    /// Events the replay explained, counting from the front.
    pub consumed_events: u64,
    /// First event the replay could not explain, when any.
    pub failing_event: Option<MappedEvent>,
    /// Events with the model action each one mapped to.
    pub events: Vec<MappedEvent>,
    pub result: TlcResult,
}

/// Replays one trace. Depth and state budgets derive from the trace
/// length so long traces are not cut off by general-purpose defaults.
pub fn validate_trace(
    spec_src: &str,
    cfg_src: &str,
    mapping: &MappingConfig,
    trace: &TraceRecord,
    checker: &CheckerConfig,
) -> Result<TraceValidation, ConformanceError> {
    let spec = generate_trace_spec(spec_src, cfg_src, mapping, trace)?;
    let n = trace.events.len() as u64;

    let mut cfg = checker.clone();
    let needed_depth = (n + 2) * (tracespec::MAX_AUX_STEPS as u32 as u64 + 1);
    cfg.max_depth = cfg.max_depth.max(needed_depth.min(u32::MAX as u64) as u32);
    cfg.check_deadlock = false;

    let opts = RunOptions {
        mode: RunMode::TraceValidate,
        halt_at_first_error: true,
        track_max_var: Some("ts_cursor".to_string()),
        label: format!("trace-{}", trace.trace_id),
    };
    let result = run_model_check(&spec.module_src, &spec.cfg_src, &cfg, &opts)?;

    let validated = result
        .invariant_violations
        .iter()
        .any(|v| v == "TraceIncomplete");
    let consumed = if validated {
        n
    } else {
        // The cursor starts at 1; a maximum of c means events before
        // index c were consumed.
        (result.max_tracked.unwrap_or(1).max(1) as u64).saturating_sub(1)
    };
    let failing_event = if validated {
        None
    } else {
        spec.mapped_events.get(consumed as usize).cloned()
    };
    Ok(TraceValidation {
        trace_id: trace.trace_id.clone(),
        validated,
        consumed_events: consumed,
        failing_event,
        events: spec.mapped_events,
        result,
    })
}

/// Aggregated conformance evidence for one model across a trace set.
#[derive(Debug, Clone, Default)]
pub struct ConformanceOutcome {
    pub per_trace: Vec<TraceValidation>,
    /// Instrumentation event names the replays explained somewhere,
    /// including the consumed prefix of failed traces.
    pub covered_code_actions: BTreeSet<String>,
    /// Event names replays stalled on.
    pub errored_code_actions: BTreeSet<String>,
}

impl ConformanceOutcome {
    pub fn from_validations(per_trace: Vec<TraceValidation>) -> Self {
        let mut covered = BTreeSet::new();
        let mut errored = BTreeSet::new();
        for v in &per_trace {
            for e in v.events.iter().take(v.consumed_events as usize) {
                covered.insert(e.name.clone());
            }
            if let Some(f) = &v.failing_event {
                errored.insert(f.name.clone());
            }
        }
        ConformanceOutcome {
            per_trace,
            covered_code_actions: covered,
            errored_code_actions: errored,
        }
    }

    /// Per-trace validation flags, in input order.
    pub fn pass_flags(&self) -> Vec<bool> {
        self.per_trace.iter().map(|v| v.validated).collect()
    }
}

/// Conformance score: instrumented actions covered and never stalled
/// on, over all instrumented actions.
pub fn score_conformance(
    outcome: &ConformanceOutcome,
    instrumented_actions: &[String],
) -> Result<Score, ConformanceError> {
    if outcome.per_trace.is_empty() {
        return Err(ConformanceError::NoTraces);
    }
    let total = instrumented_actions.len();
    if total == 0 {
        return Ok(Score::ZERO);
    }
    let clean = instrumented_actions
        .iter()
        .filter(|a| {
            outcome.covered_code_actions.contains(*a)
                && !outcome.errored_code_actions.contains(*a)
        })
        .count();
    Ok(Score::of_counts(clean, total))
}

/// Collects the implementation-side vocabulary of a trace set.
pub fn gather_canonical(
    implementation: &str,
    traces: &[TraceRecord],
    synonyms: &BTreeMap<String, String>,
) -> CanonicalElements {
    let mut events = Vec::new();
    let mut node_ids = Vec::new();
    let mut roles = Vec::new();
    let mut variables = Vec::new();

    fn push_unique(list: &mut Vec<String>, item: &str) {
        if !item.is_empty() && !list.iter().any(|x| x == item) {
            list.push(item.to_string());
        }
    }
    fn collect_strings(v: &serde_json::Value, roles: &mut Vec<String>, node_ids: &mut Vec<String>) {
        match v {
            serde_json::Value::String(s) => push_unique(roles, s),
            serde_json::Value::Array(xs) => {
                for x in xs {
                    collect_strings(x, roles, node_ids);
                }
            }
            serde_json::Value::Object(fields) => {
                for (k, x) in fields {
                    push_unique(node_ids, k);
                    collect_strings(x, roles, node_ids);
                }
            }
            _ => {}
        }
    }

    for t in traces {
        for e in &t.events {
            push_unique(&mut events, &e.name);
            push_unique(&mut node_ids, &e.node);
            if let Some(r) = &e.role {
                push_unique(&mut roles, r);
            }
            for (field, value) in &e.state {
                push_unique(&mut variables, field);
                collect_strings(value, &mut roles, &mut node_ids);
            }
        }
    }
    node_ids.sort_by(|a, b| match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    });
    CanonicalElements {
        implementation: implementation.to_string(),
        events,
        node_ids,
        roles,
        variables,
        synonyms: synonyms.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"---- MODULE spinlock ----
EXTENDS Naturals
CONSTANT Threads
VARIABLES lock_state, thread_state

vars == <<lock_state, thread_state>>

Init ==
    /\ lock_state = "unlocked"
    /\ thread_state = [t \in Threads |-> "idle"]

StartLock(t) ==
    /\ thread_state[t] = "idle"
    /\ thread_state' = [thread_state EXCEPT ![t] = "spinning"]
    /\ UNCHANGED lock_state

Acquire(t) ==
    /\ thread_state[t] = "spinning"
    /\ lock_state = "unlocked"
    /\ lock_state' = "locked"
    /\ thread_state' = [thread_state EXCEPT ![t] = "holding"]

Unlock(t) ==
    /\ thread_state[t] = "holding"
    /\ lock_state' = "unlocked"
    /\ thread_state' = [thread_state EXCEPT ![t] = "idle"]

Next ==
    \/ \E t \in Threads : StartLock(t)
    \/ \E t \in Threads : Acquire(t)
    \/ \E t \in Threads : Unlock(t)

Spec == Init /\ [][Next]_vars
====
"#;

    const CFG: &str = "SPECIFICATION Spec\nCONSTANT Threads = {t1, t2}\n";

    fn mapping() -> MappingConfig {
        MappingConfig::from_json(
            r#"{
            "events": {
                "InitState": "Init",
                "StartLock": "StartLock",
                "AcquireTry": "Acquire",
                "AcquireSuccess": "Acquire",
                "Unlock": "Unlock"
            },
            "node_mapping": {"1": "t1", "2": "t2"},
            "role_mapping": {},
            "variable_mapping": {"lock_state": "lock_state", "thread_state": "thread_state"}
        }"#,
        )
        .unwrap()
    }

    const GOOD_TRACE: &str = r#"{"name": "InitState", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "idle", "2": "idle"}}}
{"name": "StartLock", "nid": "1", "state": {"thread_state": {"1": "spinning", "2": "idle"}}}
{"name": "AcquireTry", "nid": "1", "state": {"thread_state": {"1": "spinning", "2": "idle"}}}
{"name": "AcquireSuccess", "nid": "1", "state": {"lock_state": "locked", "thread_state": {"1": "holding", "2": "idle"}}}
{"name": "Unlock", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "idle", "2": "idle"}}}
"#;

    #[test]
    fn good_trace_validates() {
        let trace = parse_jsonl(GOOD_TRACE, "good").unwrap();
        let v = validate_trace(SPEC, CFG, &mapping(), &trace, &CheckerConfig::default()).unwrap();
        assert!(v.validated, "replay should succeed: {:?}", v.result.runtime_errors);
        assert_eq!(v.consumed_events, 5);
        assert!(v.failing_event.is_none());
    }

    #[test]
    fn corrupted_trace_fails_and_localizes() {
        // Unlock before anything was acquired: impossible after event 3.
        let bad = r#"{"name": "InitState", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "idle", "2": "idle"}}}
{"name": "StartLock", "nid": "1", "state": {"thread_state": {"1": "spinning", "2": "idle"}}}
{"name": "Unlock", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "idle", "2": "idle"}}}
"#;
        let trace = parse_jsonl(bad, "bad").unwrap();
        let v = validate_trace(SPEC, CFG, &mapping(), &trace, &CheckerConfig::default()).unwrap();
        assert!(!v.validated);
        assert_eq!(v.consumed_events, 2);
        let failing = v.failing_event.as_ref().unwrap();
        assert_eq!(failing.name, "Unlock");
        assert_eq!(failing.ordinal, 3);
    }

    #[test]
    fn outcome_aggregates_coverage_and_errors() {
        let good = parse_jsonl(GOOD_TRACE, "good").unwrap();
        // An unlock that claims the lock ended up held: no action and no
        // stutter can explain that snapshot.
        let bad = r#"{"name": "InitState", "nid": "1", "state": {}}
{"name": "Unlock", "nid": "1", "state": {"lock_state": "locked"}}
"#;
        let bad = parse_jsonl(bad, "bad").unwrap();
        let m = mapping();
        let cfg = CheckerConfig::default();
        let vs = vec![
            validate_trace(SPEC, CFG, &m, &good, &cfg).unwrap(),
            validate_trace(SPEC, CFG, &m, &bad, &cfg).unwrap(),
        ];
        let outcome = ConformanceOutcome::from_validations(vs);
        assert_eq!(outcome.pass_flags(), vec![true, false]);
        assert!(outcome.covered_code_actions.contains("AcquireSuccess"));
        assert!(outcome.errored_code_actions.contains("Unlock"));

        let instrumented: Vec<String> = ["InitState", "StartLock", "AcquireTry", "AcquireSuccess", "Unlock"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        // Unlock was covered by the good trace but stalled the bad one,
        // so it does not count clean: 4 of 5.
        let score = score_conformance(&outcome, &instrumented).unwrap();
        assert_eq!(score, Score::ratio(4, 5));
        assert_eq!(score.to_string(), "80.00%");
    }

    #[test]
    fn scoring_requires_traces() {
        assert!(matches!(
            score_conformance(&ConformanceOutcome::default(), &[]),
            Err(ConformanceError::NoTraces)
        ));
    }

    #[test]
    fn gather_canonical_collects_vocabulary() {
        let trace = parse_jsonl(GOOD_TRACE, "good").unwrap();
        let c = gather_canonical("src", &[trace], &BTreeMap::new());
        assert_eq!(
            c.events,
            vec!["InitState", "StartLock", "AcquireTry", "AcquireSuccess", "Unlock"]
        );
        assert_eq!(c.node_ids, vec!["1", "2"]);
        assert_eq!(c.variables, vec!["lock_state", "thread_state"]);
        assert!(c.roles.contains(&"unlocked".to_string()));
        assert!(c.roles.contains(&"holding".to_string()));
    }
}
