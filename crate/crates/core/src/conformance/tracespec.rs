//! Trace specification synthesis.
//!
//! Conformance asks: can the model replay this execution trace? The
//! answer comes from model checking a derived specification whose state
//! machine is the candidate model constrained by the trace. A cursor
//! variable walks the event list; each step either fires the model
//! action an event maps to (with the primed state pinned to the
//! observed snapshot), consumes an event whose snapshot already equals
//! the current state without moving the model, or lets the model take a
//! bounded number of unobserved internal transitions. The invariant
//! `TraceIncomplete` says the cursor never passes the last event, so a
//! violation is exactly a successful replay, and the deepest cursor
//! value reached locates the first event the model cannot explain.
//!
//! The generated module inlines the candidate model body rather than
//! extending it, so it is one self-contained file either checker
//! backend can load, and its configuration restates constant sets as
//! strings so snapshot literals compare equal to constant members.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::checker::config::parse_tlc_config;
use crate::checker::eval::{enumerate_init, Evaluator};
use crate::checker::value::Value;
use crate::mapping::{model_elements, MappingConfig, MappingError, ModelElements, UNMAPPED};
use crate::tla::parser::parse_module;

use super::trace::{TraceEvent, TraceRecord};

/// Cap on consecutive unobserved model transitions between events.
pub const MAX_AUX_STEPS: u64 = 3;

#[derive(Debug, Error)]
pub enum TraceSpecError {
    #[error(transparent)]
    Model(#[from] MappingError),
    #[error("event {ordinal} field {field}: {reason}")]
    UnexpressibleValue {
        ordinal: u64,
        field: String,
        reason: String,
    },
    #[error("action {action} takes {arity} parameters; trace events carry at most a node")]
    UnsupportedArity { action: String, arity: usize },
    #[error("event {ordinal} needs a node value for {action}, but no constant pool exists")]
    NoNodePool { ordinal: u64, action: String },
    #[error("model has no initial state: {0}")]
    NoInitialState(String),
    #[error("no mapped variables to match snapshots against")]
    NoMappedVariables,
}

/// How one event participates in the replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedEvent {
    pub name: String,
    pub node: String,
    pub ordinal: u64,
    /// Model action fired for this event; `None` when the event only
    /// snapshots state (init events, unmapped events).
    pub action: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TraceSpec {
    pub module_name: String,
    pub module_src: String,
    pub cfg_src: String,
    pub mapped_events: Vec<MappedEvent>,
    /// Model actions no event maps to; the replay lets these fire as
    /// unobserved internal steps.
    pub unobserved_actions: Vec<String>,
}

/// Renders a value as a TLA+ expression both checker backends parse.
/// Functions become domain comprehensions with an IF chain, since the
/// `:>`/`@@` notation is TLC-specific.
pub fn render_tla(v: &Value) -> String {
    match v {
        Value::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Str(s) => format!("\"{s}\""),
        Value::Set(xs) => {
            let parts: Vec<String> = xs.iter().map(render_tla).collect();
            format!("{{{}}}", parts.join(", "))
        }
        Value::Seq(xs) => {
            let parts: Vec<String> = xs.iter().map(render_tla).collect();
            format!("<<{}>>", parts.join(", "))
        }
        Value::Record(fields) => {
            if fields.is_empty() {
                return "[ts_k \\in {} |-> 0]".to_string();
            }
            let parts: Vec<String> = fields
                .iter()
                .map(|(k, v)| format!("{k} |-> {}", render_tla(v)))
                .collect();
            format!("[{}]", parts.join(", "))
        }
        Value::Func(map) => {
            if map.is_empty() {
                return "[ts_k \\in {} |-> 0]".to_string();
            }
            let keys: Vec<&Value> = map.keys().collect();
            let domain: Vec<String> = keys.iter().map(|k| render_tla(k)).collect();
            let mut body = render_tla(map.values().last().unwrap());
            for k in keys.iter().rev().skip(1).rev() {
                body = format!(
                    "IF ts_k = {} THEN {} ELSE {}",
                    render_tla(k),
                    render_tla(&map[k]),
                    body
                );
            }
            format!("[ts_k \\in {{{}}} |-> {}]", domain.join(", "), body)
        }
    }
}

fn json_to_value(raw: &serde_json::Value, mapping: &MappingConfig) -> Result<Value, String> {
    match raw {
        serde_json::Value::Null => Err("null has no model counterpart".to_string()),
        serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| format!("{n} is not an integer")),
        serde_json::Value::String(s) => Ok(Value::Str(mapping.role(s).to_string())),
        serde_json::Value::Array(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.push(json_to_value(x, mapping)?);
            }
            Ok(Value::Seq(out))
        }
        serde_json::Value::Object(fields) => {
            if fields.is_empty() {
                return Ok(Value::Func(BTreeMap::new()));
            }
            let node_keyed = fields.keys().all(|k| {
                mapping
                    .node_map
                    .get(k)
                    .map(|t| t != UNMAPPED)
                    .unwrap_or(false)
            });
            if node_keyed {
                let mut out = BTreeMap::new();
                for (k, v) in fields {
                    out.insert(
                        Value::Str(mapping.node_map[k].clone()),
                        json_to_value(v, mapping)?,
                    );
                }
                Ok(Value::Func(out))
            } else {
                let mut out = BTreeMap::new();
                for (k, v) in fields {
                    out.insert(k.clone(), json_to_value(v, mapping)?);
                }
                Ok(Value::Record(out))
            }
        }
    }
}

/// Tracks the expected model state while walking a trace.
///
/// Snapshots replace a tracked variable wholesale when their shapes
/// agree; a scalar snapshot of a function-valued variable updates just
/// the reporting node's slot, which is how per-node logs describe
/// global state.
pub struct StateTracker<'a> {
    mapping: &'a MappingConfig,
    tracked: BTreeMap<String, Value>,
}

impl<'a> StateTracker<'a> {
    pub fn new(initial: BTreeMap<String, Value>, mapping: &'a MappingConfig) -> Self {
        StateTracker {
            mapping,
            tracked: initial,
        }
    }

    pub fn state(&self) -> &BTreeMap<String, Value> {
        &self.tracked
    }

    pub fn fold(&mut self, event: &TraceEvent) -> Result<(), TraceSpecError> {
        for (field, raw) in &event.state {
            let Some(target) = self.mapping.variable_map.get(field) else {
                continue;
            };
            if target == UNMAPPED {
                continue;
            }
            let Some(slot) = self.tracked.get_mut(target) else {
                continue;
            };
            let v = json_to_value(raw, self.mapping).map_err(|reason| {
                TraceSpecError::UnexpressibleValue {
                    ordinal: event.ordinal,
                    field: field.clone(),
                    reason,
                }
            })?;
            let per_node = matches!(slot, Value::Func(_))
                && !matches!(v, Value::Func(_) | Value::Record(_));
            if per_node {
                let node = self
                    .mapping
                    .node_map
                    .get(&event.node)
                    .filter(|n| *n != UNMAPPED)
                    .ok_or_else(|| TraceSpecError::UnexpressibleValue {
                        ordinal: event.ordinal,
                        field: field.clone(),
                        reason: format!(
                            "scalar snapshot of function-valued {target} from unmapped node {:?}",
                            event.node
                        ),
                    })?;
                if let Value::Func(f) = slot {
                    f.insert(Value::Str(node.clone()), v);
                }
            } else {
                *slot = v;
            }
        }
        Ok(())
    }
}

/// Splits a module source into its EXTENDS list and the remaining body
/// between the header bar and the terminator.
fn split_module(src: &str) -> (Vec<String>, String) {
    let mut extends = Vec::new();
    let mut body = Vec::new();
    let mut in_body = false;
    for line in src.lines() {
        let t = line.trim_start();
        if !in_body {
            if t.starts_with("----") && t.contains("MODULE") {
                in_body = true;
            }
            continue;
        }
        if t.starts_with("====") {
            break;
        }
        if let Some(rest) = t.strip_prefix("EXTENDS") {
            extends.extend(
                rest.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty()),
            );
            continue;
        }
        body.push(line.to_string());
    }
    (extends, body.join("\n"))
}

fn state_match(state: &BTreeMap<String, Value>, primed: bool) -> Vec<String> {
    let tick = if primed { "'" } else { "" };
    state
        .iter()
        .map(|(var, val)| format!("{var}{tick} = {}", render_tla(val)))
        .collect()
}

/// Builds the replay specification for one trace against one model.
pub fn generate_trace_spec(
    spec_src: &str,
    cfg_src: &str,
    mapping: &MappingConfig,
    trace: &TraceRecord,
) -> Result<TraceSpec, TraceSpecError> {
    let elements = model_elements(spec_src, cfg_src)?;
    let module =
        parse_module(spec_src).map_err(|e| MappingError::SpecUnparseable(e.to_string()))?;
    let cfg =
        parse_tlc_config(cfg_src).map_err(|e| MappingError::Config(e.to_string()))?;
    let ev = Evaluator::from_module(&module, cfg.constants.clone())
        .map_err(|e| MappingError::Structure(e.to_string()))?;

    let init_expr = ev
        .defs
        .get(&elements.init)
        .map(|d| d.body.clone())
        .ok_or_else(|| MappingError::Structure(format!("{} is not defined", elements.init)))?;
    let init_states =
        enumerate_init(&ev, &init_expr).map_err(|e| TraceSpecError::NoInitialState(e.to_string()))?;
    let first_init = init_states
        .first()
        .ok_or_else(|| TraceSpecError::NoInitialState("initial predicate is empty".to_string()))?;

    let mapped_vars: BTreeMap<String, Value> = mapping
        .variable_map
        .values()
        .filter(|t| *t != UNMAPPED)
        .filter_map(|t| first_init.get(t).map(|v| (t.clone(), v.clone())))
        .collect();
    if mapped_vars.is_empty() {
        return Err(TraceSpecError::NoMappedVariables);
    }

    let unobserved: Vec<String> = elements
        .actions
        .iter()
        .filter(|a| !mapping.event_map.values().any(|t| t == *a))
        .cloned()
        .collect();
    let has_aux = !unobserved.is_empty();

    let mut tracker = StateTracker::new(mapped_vars, mapping);
    let mut mapped_events = Vec::new();
    let mut disjuncts: Vec<String> = Vec::new();
    let mut event_tuple: Vec<String> = Vec::new();

    let aux_reset = if has_aux { "\n        /\\ ts_aux' = 0" } else { "" };
    let n = trace.events.len() as u64;

    for (idx, event) in trace.events.iter().enumerate() {
        let i = idx as u64 + 1;
        tracker.fold(event)?;
        let snapshot = tracker.state().clone();

        let target = mapping
            .event_map
            .get(&event.name)
            .filter(|t| *t != UNMAPPED)
            .cloned();
        let action = match &target {
            Some(t) if *t != elements.init => Some(t.clone()),
            _ => None,
        };

        event_tuple.push(format!(
            "[action |-> \"{}\", node |-> \"{}\"]",
            event.name, event.node
        ));

        if let Some(action_name) = &action {
            let params = elements
                .action_params
                .get(action_name)
                .cloned()
                .unwrap_or_default();
            let call = match params.len() {
                0 => action_name.clone(),
                1 => {
                    let node_val = mapping
                        .node_map
                        .get(&event.node)
                        .filter(|v| *v != UNMAPPED);
                    match node_val {
                        Some(v) => format!("{action_name}(\"{v}\")"),
                        None => {
                            let pool = elements.node_pools.first().ok_or_else(|| {
                                TraceSpecError::NoNodePool {
                                    ordinal: i,
                                    action: action_name.clone(),
                                }
                            })?;
                            format!("\\E ts_n \\in {} : {action_name}(ts_n)", pool.0)
                        }
                    }
                }
                arity => {
                    return Err(TraceSpecError::UnsupportedArity {
                        action: action_name.clone(),
                        arity,
                    })
                }
            };
            let matches = state_match(&snapshot, true)
                .into_iter()
                .map(|m| format!("\n        /\\ {m}"))
                .collect::<String>();
            disjuncts.push(format!(
                "    \\/ /\\ ts_cursor = {i}\n        /\\ {call}{matches}\n        /\\ ts_cursor' = {next}{aux_reset}",
                next = i + 1
            ));
        }

        // Stutter consumption: the snapshot already holds, the event is
        // explained without a model transition.
        let matches = state_match(&snapshot, false)
            .into_iter()
            .map(|m| format!("\n        /\\ {m}"))
            .collect::<String>();
        let unchanged = format!("<<{}>>", elements.variables.join(", "));
        disjuncts.push(format!(
            "    \\/ /\\ ts_cursor = {i}{matches}\n        /\\ UNCHANGED {unchanged}\n        /\\ ts_cursor' = {next}{aux_reset}",
            next = i + 1
        ));

        mapped_events.push(MappedEvent {
            name: event.name.clone(),
            node: event.node.clone(),
            ordinal: i,
            action,
        });
    }

    let (orig_extends, body) = split_module(spec_src);
    let mut extends = orig_extends;
    for needed in ["Naturals", "Sequences"] {
        if !extends.iter().any(|e| e == needed) {
            extends.push(needed.to_string());
        }
    }

    let module_name = format!("{}_trace", elements.module_name);
    let mut out = String::new();
    out.push_str(&format!("---- MODULE {module_name} ----\n"));
    out.push_str(&format!("EXTENDS {}\n", extends.join(", ")));
    out.push_str(&body);
    out.push_str("\n\nVARIABLE ts_cursor\n");
    if has_aux {
        out.push_str("VARIABLE ts_aux\n");
    }
    out.push_str(&format!(
        "\nTraceEvents == <<\n    {}\n>>\n",
        event_tuple.join(",\n    ")
    ));
    if has_aux {
        out.push_str(&format!(
            "\nTraceInit == {} /\\ ts_cursor = 1 /\\ ts_aux = 0\n",
            elements.init
        ));
    } else {
        out.push_str(&format!("\nTraceInit == {} /\\ ts_cursor = 1\n", elements.init));
    }
    let mut all_disjuncts = disjuncts;
    if has_aux {
        all_disjuncts.push(internal_step_disjunct(&unobserved, &elements)?);
    }
    out.push_str(&format!("\nTraceNext ==\n{}\n", all_disjuncts.join("\n")));
    out.push_str(&format!(
        "\nTraceIncomplete == ts_cursor /= {}\n",
        n + 1
    ));
    out.push_str("====\n");

    let mut cfg_out = String::new();
    cfg_out.push_str("INIT TraceInit\nNEXT TraceNext\nINVARIANT TraceIncomplete\n");
    for (name, value) in &cfg.constants {
        cfg_out.push_str(&format!("CONSTANT {name} = {}\n", render_tla(value)));
    }

    Ok(TraceSpec {
        module_name,
        module_src: out,
        cfg_src: cfg_out,
        mapped_events,
        unobserved_actions: unobserved,
    })
}

/// The disjunct that lets unobserved model actions run between events,
/// at most [`MAX_AUX_STEPS`] in a row.
fn internal_step_disjunct(
    unobserved: &[String],
    elements: &ModelElements,
) -> Result<String, TraceSpecError> {
    let mut calls = Vec::new();
    for name in unobserved {
        let params = elements.action_params.get(name).cloned().unwrap_or_default();
        let call = match params.len() {
            0 => name.clone(),
            1 => {
                let pool = elements
                    .node_pools
                    .first()
                    .ok_or_else(|| TraceSpecError::NoNodePool {
                        ordinal: 0,
                        action: name.clone(),
                    })?;
                format!("\\E ts_n \\in {} : {name}(ts_n)", pool.0)
            }
            arity => {
                return Err(TraceSpecError::UnsupportedArity {
                    action: name.clone(),
                    arity,
                })
            }
        };
        calls.push(format!("\\/ {call}"));
    }
    Ok(format!(
        "    \\/ /\\ ts_aux < {max}\n        /\\ ( {calls} )\n        /\\ ts_aux' = ts_aux + 1\n        /\\ UNCHANGED ts_cursor",
        max = MAX_AUX_STEPS,
        calls = calls.join(" ")
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformance::trace::parse_jsonl;

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
        let doc = r#"{
            "config": {"Threads": ["t1", "t2"]},
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
        }"#;
        MappingConfig::from_json(doc).unwrap()
    }

    const TRACE: &str = r#"{"name": "InitState", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "idle", "2": "idle"}}, "step": 0}
{"name": "StartLock", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "spinning", "2": "idle"}}, "step": 1}
{"name": "AcquireSuccess", "nid": "1", "state": {"lock_state": "locked", "thread_state": {"1": "holding", "2": "idle"}}, "step": 2}
{"name": "Unlock", "nid": "1", "state": {"lock_state": "unlocked", "thread_state": {"1": "idle", "2": "idle"}}, "step": 3}
"#;

    #[test]
    fn renders_functions_as_if_chains() {
        let mut f = BTreeMap::new();
        f.insert(Value::str("t1"), Value::str("idle"));
        f.insert(Value::str("t2"), Value::str("spinning"));
        let text = render_tla(&Value::Func(f));
        assert_eq!(
            text,
            "[ts_k \\in {\"t1\", \"t2\"} |-> IF ts_k = \"t1\" THEN \"idle\" ELSE \"spinning\"]"
        );
    }

    #[test]
    fn generates_self_contained_module_and_cfg() {
        let trace = parse_jsonl(TRACE, "demo").unwrap();
        let spec = generate_trace_spec(SPEC, CFG, &mapping(), &trace).unwrap();
        assert_eq!(spec.module_name, "spinlock_trace");
        assert!(spec.module_src.contains("---- MODULE spinlock_trace ----"));
        assert!(spec.module_src.contains("EXTENDS Naturals, Sequences"));
        // The candidate body is inlined, not extended.
        assert!(spec.module_src.contains("Acquire(t) =="));
        assert!(spec.module_src.contains("VARIABLE ts_cursor"));
        assert!(spec.module_src.contains("TraceIncomplete == ts_cursor /= 5"));
        assert!(spec.cfg_src.contains("INIT TraceInit"));
        assert!(spec.cfg_src.contains("INVARIANT TraceIncomplete"));
        // Constant pool restated with string members.
        assert!(spec.cfg_src.contains("CONSTANT Threads = {\"t1\", \"t2\"}"));
        // All model actions are observed by some event, so no aux
        // variable is needed.
        assert!(spec.unobserved_actions.is_empty());
        assert!(!spec.module_src.contains("ts_aux"));
    }

    #[test]
    fn init_mapped_event_consumes_by_stutter() {
        let trace = parse_jsonl(TRACE, "demo").unwrap();
        let spec = generate_trace_spec(SPEC, CFG, &mapping(), &trace).unwrap();
        assert_eq!(spec.mapped_events[0].action, None);
        assert_eq!(spec.mapped_events[1].action.as_deref(), Some("StartLock"));
        assert_eq!(spec.mapped_events[2].action.as_deref(), Some("Acquire"));
    }

    #[test]
    fn node_value_is_passed_as_string_literal() {
        let trace = parse_jsonl(TRACE, "demo").unwrap();
        let spec = generate_trace_spec(SPEC, CFG, &mapping(), &trace).unwrap();
        assert!(spec.module_src.contains("StartLock(\"t1\")"));
    }

    #[test]
    fn unmapped_action_produces_aux_variable() {
        let mut m = mapping();
        // Drop StartLock from the event map: the model can still take
        // it as an internal step.
        m.event_map.remove("StartLock");
        let trace_text = r#"{"name": "InitState", "nid": "1", "state": {"lock_state": "unlocked"}}
{"name": "AcquireSuccess", "nid": "1", "state": {"lock_state": "locked", "thread_state": {"1": "holding", "2": "idle"}}}
"#;
        let trace = parse_jsonl(trace_text, "demo").unwrap();
        let spec = generate_trace_spec(SPEC, CFG, &m, &trace).unwrap();
        assert_eq!(spec.unobserved_actions, vec!["StartLock".to_string()]);
        assert!(spec.module_src.contains("VARIABLE ts_aux"));
        assert!(spec.module_src.contains("ts_aux < 3"));
        assert!(spec
            .module_src
            .contains("\\E ts_n \\in Threads : StartLock(ts_n)"));
    }

    #[test]
    fn per_node_scalar_updates_function_slot() {
        let m = mapping();
        let trace_text = r#"{"name": "InitState", "nid": "1", "state": {}}
{"name": "StartLock", "nid": "2", "state": {"thread_state": "spinning"}}
"#;
        let trace = parse_jsonl(trace_text, "demo").unwrap();
        let spec = generate_trace_spec(SPEC, CFG, &m, &trace).unwrap();
        // Only t2's slot moved; t1 keeps its initial value.
        assert!(spec
            .module_src
            .contains("IF ts_k = \"t1\" THEN \"idle\" ELSE \"spinning\""));
    }

    #[test]
    fn rejects_multi_parameter_actions() {
        let spec_src = r#"---- MODULE pair ----
CONSTANT Threads
VARIABLE x
Init == x = 0
Move(a, b) == x' = x + 1
Next == \E a, b \in Threads : Move(a, b)
====
"#;
        let cfg = "INIT Init\nNEXT Next\nCONSTANT Threads = {t1}\n";
        let m = MappingConfig::from_json(
            r#"{"events": {"Move": "Move"}, "node_mapping": {}, "role_mapping": {}, "variable_mapping": {"x": "x"}}"#,
        )
        .unwrap();
        let trace = parse_jsonl(r#"{"name": "Move", "nid": "1", "state": {"x": 1}}"#, "t").unwrap();
        match generate_trace_spec(spec_src, cfg, &m, &trace) {
            Err(TraceSpecError::UnsupportedArity { action, arity }) => {
                assert_eq!(action, "Move");
                assert_eq!(arity, 2);
            }
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_null_state_values() {
        let trace_text = r#"{"name": "StartLock", "nid": "1", "state": {"lock_state": null}}"#;
        let trace = parse_jsonl(trace_text, "t").unwrap();
        match generate_trace_spec(SPEC, CFG, &mapping(), &trace) {
            Err(TraceSpecError::UnexpressibleValue { ordinal, field, .. }) => {
                assert_eq!(ordinal, 1);
                assert_eq!(field, "lock_state");
            }
            other => panic!("expected unexpressible value, got {other:?}"),
        }
    }
}
