//! Alignment between an implementation's vocabulary and a candidate
//! model's vocabulary.
//!
//! Trace events arrive speaking the implementation's language: event
//! names from instrumentation hooks, node ids from process identifiers,
//! role constants from the source. The model speaks its own: action
//! names, model values, state variables. A [`MappingConfig`] is the
//! bridge. It can be produced by a model (via the mapping prompt) or by
//! the deterministic matcher; either way it is validated against the
//! model before use, and a broken model-produced mapping falls back to
//! the deterministic one rather than poisoning downstream stages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::client::{strip_code_fence, LlmClient};
use crate::checker::config::parse_tlc_config;
use crate::checker::eval::Evaluator;
use crate::checker::liveness::extract_spec_structure;
use crate::checker::value::Value;
use crate::tla::actions::decompose_next;
use crate::tla::lexer::Tok;
use crate::tla::parser::parse_module;

/// Sentinel recorded when a name has no counterpart in the model.
pub const UNMAPPED: &str = "UNMAPPED";

/// Default similarity threshold for fuzzy name resolution.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("model does not parse: {0}")]
    SpecUnparseable(String),
    #[error("configuration problem: {0}")]
    Config(String),
    #[error("model structure not extractable: {0}")]
    Structure(String),
}

/// The implementation-to-model name bridge.
///
/// Serialization uses the interchange layout consumed and produced by
/// the mapping prompt:
///
/// ```json
/// {
///   "config": {"Server": ["Server1", "Server2", "Server3"]},
///   "events": {"InitState": "Init", "BecomeFollower": "BecomeFollower"},
///   "node_mapping": {"1": "Node1"},
///   "role_mapping": {"StateFollower": "Follower"}
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    /// Constant assignment of the model run, sets rendered as arrays.
    #[serde(default)]
    pub config: BTreeMap<String, serde_json::Value>,
    /// Implementation event name to model action name (or the init
    /// predicate name, for events that snapshot the initial state).
    #[serde(rename = "events")]
    pub event_map: BTreeMap<String, String>,
    /// Implementation node id to model value.
    #[serde(rename = "node_mapping", default)]
    pub node_map: BTreeMap<String, String>,
    /// Implementation role/value constant to model string value.
    #[serde(rename = "role_mapping", default)]
    pub role_map: BTreeMap<String, String>,
    /// Implementation state field to model variable.
    #[serde(rename = "variable_mapping", default)]
    pub variable_map: BTreeMap<String, String>,
}

impl MappingConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Model string value for an implementation string, identity when
    /// the role table has no entry.
    pub fn role<'a>(&'a self, raw: &'a str) -> &'a str {
        self.role_map.get(raw).map(String::as_str).unwrap_or(raw)
    }
}

/// Names extracted from a candidate model plus its TLC configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelElements {
    pub module_name: String,
    pub source: String,
    /// Init predicate name.
    pub init: String,
    /// Next-state action names in definition order.
    pub actions: Vec<String>,
    /// Parameter lists of defined actions (empty for parameterless or
    /// anonymous disjuncts).
    pub action_params: BTreeMap<String, Vec<String>>,
    pub variables: Vec<String>,
    pub constants: Vec<String>,
    /// All operator definition names, in source order.
    pub defs: Vec<String>,
    /// String literals appearing in the module, first occurrence first.
    pub string_values: Vec<String>,
    /// Set-valued constant assignments from the configuration, the
    /// candidate pools for node identity.
    pub node_pools: Vec<(String, Vec<String>)>,
}

/// Names the implementation side brings to the table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CanonicalElements {
    /// Implementation source, given to the mapping prompt verbatim.
    pub implementation: String,
    pub events: Vec<String>,
    pub node_ids: Vec<String>,
    pub roles: Vec<String>,
    pub variables: Vec<String>,
    /// Task-supplied vocabulary glue: canonical name to the model-side
    /// name it is known to correspond to when string similarity cannot
    /// bridge the gap (e.g. an event named after a code path rather
    /// than the transition it exercises).
    pub synonyms: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefectKind {
    DanglingAction,
    DanglingVariable,
    DanglingRole,
    DanglingNode,
    NonInjectiveNodes,
    UnmappedEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingDefect {
    pub kind: DefectKind,
    pub detail: String,
}

impl MappingDefect {
    /// Defects that make the mapping unusable, as opposed to gaps that
    /// merely lose evidence for the affected names.
    pub fn is_hard(&self) -> bool {
        !matches!(self.kind, DefectKind::UnmappedEvent)
    }
}

/// How a mapping should be produced.
pub enum MapperBackend<'a> {
    Deterministic {
        threshold: f64,
    },
    Llm {
        client: &'a dyn LlmClient,
        prompt_template: String,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendUsed {
    Deterministic,
    Llm,
    DeterministicFallback { reason: String },
}

#[derive(Debug, Clone)]
pub struct MappingOutcome {
    pub mapping: MappingConfig,
    pub backend_used: BackendUsed,
    pub defects: Vec<MappingDefect>,
}

/// Extracts the mapped-against surface of a model: action and variable
/// names, string values, and the constant pools from its configuration.
pub fn model_elements(spec_src: &str, cfg_src: &str) -> Result<ModelElements, MappingError> {
    let module = parse_module(spec_src).map_err(|e| MappingError::SpecUnparseable(e.to_string()))?;
    let cfg = parse_tlc_config(cfg_src).map_err(|e| MappingError::Config(e.to_string()))?;

    let (init, next) = match (&cfg.specification, &cfg.init, &cfg.next) {
        (Some(spec), _, _) => {
            let ev = Evaluator::from_module(&module, cfg.constants.clone())
                .map_err(|e| MappingError::Structure(e.to_string()))?;
            let s = extract_spec_structure(&ev, spec)
                .map_err(|e| MappingError::Structure(e.to_string()))?;
            (s.init, s.next)
        }
        (None, Some(i), Some(n)) => (i.clone(), n.clone()),
        _ => {
            return Err(MappingError::Config(
                "configuration names neither SPECIFICATION nor INIT/NEXT".to_string(),
            ))
        }
    };

    let action_set =
        decompose_next(&module, &next).map_err(|e| MappingError::Structure(e.to_string()))?;
    let actions: Vec<String> = action_set.actions.iter().map(|a| a.name.clone()).collect();
    let mut action_params = BTreeMap::new();
    for a in &action_set.actions {
        let params = module
            .def(&a.name)
            .map(|d| d.params.clone())
            .unwrap_or_default();
        action_params.insert(a.name.clone(), params);
    }

    let mut string_values = Vec::new();
    for t in &module.tokens {
        if let Tok::Str(s) = &t.tok {
            if !string_values.contains(s) {
                string_values.push(s.clone());
            }
        }
    }

    let mut node_pools = Vec::new();
    for (name, value) in &cfg.constants {
        if let Value::Set(elems) = value {
            let strs: Vec<String> = elems
                .iter()
                .filter_map(|v| match v {
                    Value::Str(s) => Some(s.clone()),
                    _ => None,
                })
                .collect();
            if strs.len() == elems.len() && !strs.is_empty() {
                node_pools.push((name.clone(), strs));
            }
        }
    }

    Ok(ModelElements {
        module_name: module.name.clone(),
        source: spec_src.to_string(),
        init,
        actions,
        action_params,
        variables: module.variables.clone(),
        constants: module.constants.clone(),
        defs: module.defs.iter().map(|d| d.name.clone()).collect(),
        string_values,
        node_pools,
    })
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| *c != '_')
        .flat_map(|c| c.to_lowercase())
        .collect()
}

fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Longest-common-subsequence similarity over normalized names, in
/// [0, 1].
pub fn name_similarity(a: &str, b: &str) -> f64 {
    let (na, nb) = (normalize(a), normalize(b));
    let longest = na.chars().count().max(nb.chars().count());
    if longest == 0 {
        return 0.0;
    }
    lcs_len(&na, &nb) as f64 / longest as f64
}

/// Resolves one canonical name against candidate model names.
///
/// Ladder: exact match, then normalized match (case and underscores
/// ignored; first candidate in order when several normalize alike),
/// then the task synonym (whose target is itself resolved exactly or
/// normalized), then best similarity at or above the threshold with
/// earlier candidates winning ties.
pub fn resolve_name(
    canonical: &str,
    candidates: &[String],
    synonyms: &BTreeMap<String, String>,
    threshold: f64,
) -> Option<String> {
    if let Some(hit) = candidates.iter().find(|c| *c == canonical) {
        return Some(hit.clone());
    }
    let norm = normalize(canonical);
    if let Some(hit) = candidates.iter().find(|c| normalize(c) == norm) {
        return Some(hit.clone());
    }
    if let Some(target) = synonyms.get(canonical) {
        if let Some(hit) = candidates.iter().find(|c| *c == target) {
            return Some(hit.clone());
        }
        let tn = normalize(target);
        if let Some(hit) = candidates.iter().find(|c| normalize(c) == tn) {
            return Some(hit.clone());
        }
    }
    let mut best: Option<(f64, &String)> = None;
    for c in candidates {
        let sim = name_similarity(canonical, c);
        if sim >= threshold && best.map(|(b, _)| sim > b).unwrap_or(true) {
            best = Some((sim, c));
        }
    }
    best.map(|(_, c)| c.clone())
}

fn resolve_nodes(
    node_ids: &[String],
    pools: &[(String, Vec<String>)],
) -> BTreeMap<String, String> {
    if node_ids.is_empty() {
        return BTreeMap::new();
    }
    for (_, pool) in pools {
        // Direct resolution: exact name, else a unique element carrying
        // the id as a suffix (id "1" against pool member "Node1").
        let mut out = BTreeMap::new();
        let mut complete = true;
        for id in node_ids {
            let exact = pool.iter().find(|e| *e == id);
            let resolved = exact.cloned().or_else(|| {
                let suffixed: Vec<&String> =
                    pool.iter().filter(|e| e.ends_with(id.as_str())).collect();
                match suffixed.as_slice() {
                    [only] => Some((*only).clone()),
                    _ => None,
                }
            });
            match resolved {
                Some(r) => {
                    out.insert(id.clone(), r);
                }
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if complete && injective(&out) {
            return out;
        }
        // Positional: pair sorted ids with pool elements when counts
        // line up. Numeric ids sort numerically so "10" follows "9".
        if pool.len() == node_ids.len() {
            let mut ids: Vec<String> = node_ids.to_vec();
            if ids.iter().all(|i| i.parse::<u64>().is_ok()) {
                ids.sort_by_key(|i| i.parse::<u64>().unwrap());
            } else {
                ids.sort();
            }
            return ids.into_iter().zip(pool.iter().cloned()).collect();
        }
    }
    node_ids
        .iter()
        .map(|id| (id.clone(), UNMAPPED.to_string()))
        .collect()
}

fn injective(map: &BTreeMap<String, String>) -> bool {
    let values: std::collections::BTreeSet<&String> = map.values().collect();
    values.len() == map.len()
}

fn config_json(model: &ModelElements) -> BTreeMap<String, serde_json::Value> {
    let mut out = BTreeMap::new();
    for (name, pool) in &model.node_pools {
        out.insert(
            name.clone(),
            serde_json::Value::Array(
                pool.iter()
                    .map(|e| serde_json::Value::String(e.clone()))
                    .collect(),
            ),
        );
    }
    out
}

/// Builds a mapping by name resolution alone.
pub fn deterministic_mapping(
    model: &ModelElements,
    canonical: &CanonicalElements,
    threshold: f64,
) -> MappingConfig {
    let mut event_targets = model.actions.clone();
    event_targets.push(model.init.clone());

    let mut mapping = MappingConfig {
        config: config_json(model),
        ..MappingConfig::default()
    };
    for e in &canonical.events {
        let target = resolve_name(e, &event_targets, &canonical.synonyms, threshold)
            .unwrap_or_else(|| UNMAPPED.to_string());
        mapping.event_map.insert(e.clone(), target);
    }
    for v in &canonical.variables {
        let target = resolve_name(v, &model.variables, &canonical.synonyms, threshold)
            .unwrap_or_else(|| UNMAPPED.to_string());
        mapping.variable_map.insert(v.clone(), target);
    }
    for r in &canonical.roles {
        let target = resolve_name(r, &model.string_values, &canonical.synonyms, threshold)
            .unwrap_or_else(|| UNMAPPED.to_string());
        mapping.role_map.insert(r.clone(), target);
    }
    mapping.node_map = resolve_nodes(&canonical.node_ids, &model.node_pools);
    mapping
}

/// Checks a mapping against the model it claims to describe.
pub fn validate_mapping(mapping: &MappingConfig, model: &ModelElements) -> Vec<MappingDefect> {
    let mut defects = Vec::new();
    for (event, target) in &mapping.event_map {
        if target == UNMAPPED {
            defects.push(MappingDefect {
                kind: DefectKind::UnmappedEvent,
                detail: format!("event {event} has no model action"),
            });
        } else if target != &model.init && !model.actions.iter().any(|a| a == target) {
            defects.push(MappingDefect {
                kind: DefectKind::DanglingAction,
                detail: format!("event {event} maps to {target}, which is not a model action"),
            });
        }
    }
    for (var, target) in &mapping.variable_map {
        if target == UNMAPPED || !model.variables.iter().any(|v| v == target) {
            defects.push(MappingDefect {
                kind: DefectKind::DanglingVariable,
                detail: format!("state field {var} maps to {target}, which is not a model variable"),
            });
        }
    }
    for (role, target) in &mapping.role_map {
        if target == UNMAPPED || !model.string_values.iter().any(|s| s == target) {
            defects.push(MappingDefect {
                kind: DefectKind::DanglingRole,
                detail: format!("role {role} maps to {target}, which the model never mentions"),
            });
        }
    }
    let pool_members: Vec<&String> = model
        .node_pools
        .iter()
        .flat_map(|(_, p)| p.iter())
        .collect();
    for (node, target) in &mapping.node_map {
        if target == UNMAPPED || !pool_members.iter().any(|m| *m == target) {
            defects.push(MappingDefect {
                kind: DefectKind::DanglingNode,
                detail: format!("node {node} maps to {target}, which is in no constant pool"),
            });
        }
    }
    if !injective(&mapping.node_map) {
        defects.push(MappingDefect {
            kind: DefectKind::NonInjectiveNodes,
            detail: "two node ids map to the same model value".to_string(),
        });
    }
    defects
}

/// Produces and validates a mapping with the chosen backend.
///
/// A model-produced mapping with hard defects (or a failed call) falls
/// back to the deterministic matcher; the outcome records why.
pub fn build_mapping(
    model: &ModelElements,
    canonical: &CanonicalElements,
    backend: &MapperBackend,
) -> MappingOutcome {
    match backend {
        MapperBackend::Deterministic { threshold } => {
            let mapping = deterministic_mapping(model, canonical, *threshold);
            let defects = validate_mapping(&mapping, model);
            MappingOutcome {
                mapping,
                backend_used: BackendUsed::Deterministic,
                defects,
            }
        }
        MapperBackend::Llm {
            client,
            prompt_template,
            threshold,
        } => {
            let prompt = prompt_template
                .replace("{TLA_SPEC_CODE_PLACEHOLDER}", &model.source)
                .replace("{IMPLEMENTATION_CODE_PLACEHOLDER}", &canonical.implementation);
            let fallback = |reason: String| {
                let mapping = deterministic_mapping(model, canonical, *threshold);
                let defects = validate_mapping(&mapping, model);
                MappingOutcome {
                    mapping,
                    backend_used: BackendUsed::DeterministicFallback { reason },
                    defects,
                }
            };
            let raw = match client.complete(&prompt) {
                Ok(r) => r,
                Err(e) => return fallback(format!("mapping call failed: {e}")),
            };
            let mut mapping = match MappingConfig::from_json(strip_code_fence(&raw)) {
                Ok(m) => m,
                Err(e) => return fallback(format!("mapping response is not valid JSON: {e}")),
            };
            if mapping.variable_map.is_empty() {
                // The interchange format treats the variable table as
                // optional; resolve it locally when absent.
                for v in &canonical.variables {
                    let target = resolve_name(v, &model.variables, &canonical.synonyms, *threshold)
                        .unwrap_or_else(|| UNMAPPED.to_string());
                    mapping.variable_map.insert(v.clone(), target);
                }
            }
            let defects = validate_mapping(&mapping, model);
            if defects.iter().any(|d| d.is_hard()) {
                let summary: Vec<String> =
                    defects.iter().filter(|d| d.is_hard()).map(|d| d.detail.clone()).collect();
                return fallback(format!(
                    "model-produced mapping rejected: {}",
                    summary.join("; ")
                ));
            }
            MappingOutcome {
                mapping,
                backend_used: BackendUsed::Llm,
                defects,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::client::StubClient;

    const SPEC: &str = r#"---- MODULE lockdemo ----
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

    fn canonical() -> CanonicalElements {
        let mut synonyms = BTreeMap::new();
        synonyms.insert("InitState".to_string(), "Init".to_string());
        synonyms.insert("AcquireTry".to_string(), "Acquire".to_string());
        synonyms.insert("AcquireSuccess".to_string(), "Acquire".to_string());
        CanonicalElements {
            implementation: "fn lock() {}".to_string(),
            events: vec![
                "InitState".into(),
                "StartLock".into(),
                "AcquireTry".into(),
                "AcquireSuccess".into(),
                "Unlock".into(),
            ],
            node_ids: vec!["1".into(), "2".into()],
            roles: vec!["locked".into(), "unlocked".into(), "holding".into()],
            variables: vec!["lock_state".into(), "thread_state".into()],
            synonyms,
        }
    }

    #[test]
    fn model_elements_extracts_surface() {
        let m = model_elements(SPEC, CFG).unwrap();
        assert_eq!(m.init, "Init");
        assert_eq!(m.actions, vec!["StartLock", "Acquire", "Unlock"]);
        assert_eq!(m.action_params["Acquire"], vec!["t"]);
        assert_eq!(m.variables, vec!["lock_state", "thread_state"]);
        assert_eq!(m.node_pools, vec![("Threads".to_string(), vec!["t1".to_string(), "t2".to_string()])]);
        assert!(m.string_values.contains(&"unlocked".to_string()));
        assert_eq!(m.string_values[0], "unlocked");
    }

    #[test]
    fn deterministic_mapping_resolves_exact_synonym_and_suffix() {
        let m = model_elements(SPEC, CFG).unwrap();
        let out = deterministic_mapping(&m, &canonical(), DEFAULT_SIMILARITY_THRESHOLD);
        assert_eq!(out.event_map["InitState"], "Init");
        assert_eq!(out.event_map["StartLock"], "StartLock");
        assert_eq!(out.event_map["AcquireTry"], "Acquire");
        assert_eq!(out.event_map["AcquireSuccess"], "Acquire");
        assert_eq!(out.event_map["Unlock"], "Unlock");
        assert_eq!(out.node_map["1"], "t1");
        assert_eq!(out.node_map["2"], "t2");
        assert_eq!(out.variable_map["lock_state"], "lock_state");
        assert_eq!(out.role_map["holding"], "holding");
        assert!(validate_mapping(&out, &m).is_empty());
    }

    #[test]
    fn normalized_match_bridges_case_and_underscores() {
        let m = model_elements(SPEC, CFG).unwrap();
        let mut c = canonical();
        c.variables = vec!["LockState".into(), "THREAD_STATE".into()];
        let out = deterministic_mapping(&m, &c, DEFAULT_SIMILARITY_THRESHOLD);
        assert_eq!(out.variable_map["LockState"], "lock_state");
        assert_eq!(out.variable_map["THREAD_STATE"], "thread_state");
    }

    #[test]
    fn similarity_bridges_small_edits() {
        // "startlocking" vs "startlock": lcs 9 / max 12 = 0.75 < 0.8,
        // stays unmapped; "start_lock2" vs "startlock" normalizes to
        // lcs 9 / max 10 = 0.9, resolves.
        let m = model_elements(SPEC, CFG).unwrap();
        let mut c = canonical();
        c.events = vec!["start_lock2".into(), "StartLocking".into()];
        c.synonyms.clear();
        let out = deterministic_mapping(&m, &c, DEFAULT_SIMILARITY_THRESHOLD);
        assert_eq!(out.event_map["start_lock2"], "StartLock");
        assert_eq!(out.event_map["StartLocking"], UNMAPPED);
    }

    #[test]
    fn unmapped_event_is_soft_defect_dangling_is_hard() {
        let m = model_elements(SPEC, CFG).unwrap();
        let mut mapping = deterministic_mapping(&m, &canonical(), DEFAULT_SIMILARITY_THRESHOLD);
        mapping
            .event_map
            .insert("Ghost".to_string(), UNMAPPED.to_string());
        mapping
            .variable_map
            .insert("queue".to_string(), "missing_var".to_string());
        let defects = validate_mapping(&mapping, &m);
        assert_eq!(defects.len(), 2);
        let unmapped = defects.iter().find(|d| d.kind == DefectKind::UnmappedEvent).unwrap();
        assert!(!unmapped.is_hard());
        let dangling = defects
            .iter()
            .find(|d| d.kind == DefectKind::DanglingVariable)
            .unwrap();
        assert!(dangling.is_hard());
    }

    #[test]
    fn non_injective_nodes_flagged() {
        let m = model_elements(SPEC, CFG).unwrap();
        let mut mapping = deterministic_mapping(&m, &canonical(), DEFAULT_SIMILARITY_THRESHOLD);
        mapping.node_map.insert("2".to_string(), "t1".to_string());
        let defects = validate_mapping(&mapping, &m);
        assert!(defects.iter().any(|d| d.kind == DefectKind::NonInjectiveNodes));
    }

    #[test]
    fn node_suffix_resolution_prefers_unique_suffix() {
        let pools = vec![(
            "Server".to_string(),
            vec!["Node1".to_string(), "Node2".to_string(), "Node3".to_string()],
        )];
        let out = resolve_nodes(&["1".into(), "2".into(), "3".into()], &pools);
        assert_eq!(out["1"], "Node1");
        assert_eq!(out["3"], "Node3");
    }

    #[test]
    fn node_positional_fallback_sorts_numerically() {
        let pools = vec![("P".to_string(), vec!["pa".to_string(), "pb".to_string(), "pc".to_string()])];
        let out = resolve_nodes(&["10".into(), "9".into(), "2".into()], &pools);
        assert_eq!(out["2"], "pa");
        assert_eq!(out["9"], "pb");
        assert_eq!(out["10"], "pc");
    }

    #[test]
    fn mapping_json_round_trips_interchange_layout() {
        let doc = r#"{
            "config": {"Server": ["Server1", "Server2", "Server3"]},
            "events": {"InitState": "Init", "BecomeFollower": "BecomeFollower"},
            "node_mapping": {"1": "Node1", "2": "Node2", "3": "Node3"},
            "role_mapping": {"StateFollower": "Follower"}
        }"#;
        let parsed = MappingConfig::from_json(doc).unwrap();
        assert_eq!(parsed.event_map["InitState"], "Init");
        assert_eq!(parsed.node_map["2"], "Node2");
        assert_eq!(parsed.role_map["StateFollower"], "Follower");
        assert_eq!(
            parsed.config["Server"],
            serde_json::json!(["Server1", "Server2", "Server3"])
        );
        let round = MappingConfig::from_json(&parsed.to_json()).unwrap();
        assert_eq!(round, parsed);
    }

    #[test]
    fn llm_backend_accepts_valid_mapping() {
        let m = model_elements(SPEC, CFG).unwrap();
        let response = r#"```json
{
  "config": {"Threads": ["t1", "t2"]},
  "events": {"InitState": "Init", "StartLock": "StartLock", "AcquireTry": "Acquire", "AcquireSuccess": "Acquire", "Unlock": "Unlock"},
  "node_mapping": {"1": "t1", "2": "t2"},
  "role_mapping": {"locked": "locked", "unlocked": "unlocked", "holding": "holding"}
}
```"#;
        let stub = StubClient::new(vec![response.to_string()]);
        let backend = MapperBackend::Llm {
            client: &stub,
            prompt_template: "spec: {TLA_SPEC_CODE_PLACEHOLDER}\nimpl: {IMPLEMENTATION_CODE_PLACEHOLDER}".to_string(),
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
        };
        let out = build_mapping(&m, &canonical(), &backend);
        assert_eq!(out.backend_used, BackendUsed::Llm);
        assert!(out.defects.is_empty());
        assert_eq!(out.mapping.event_map["AcquireTry"], "Acquire");
        // The variable table was absent from the response and filled in
        // locally.
        assert_eq!(out.mapping.variable_map["lock_state"], "lock_state");
    }

    #[test]
    fn llm_backend_falls_back_on_dangling_mapping() {
        let m = model_elements(SPEC, CFG).unwrap();
        let response = r#"{
  "events": {"InitState": "Setup"},
  "node_mapping": {"1": "t1", "2": "t2"},
  "role_mapping": {}
}"#;
        let stub = StubClient::new(vec![response.to_string()]);
        let backend = MapperBackend::Llm {
            client: &stub,
            prompt_template: "{TLA_SPEC_CODE_PLACEHOLDER} {IMPLEMENTATION_CODE_PLACEHOLDER}".to_string(),
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
        };
        let out = build_mapping(&m, &canonical(), &backend);
        match &out.backend_used {
            BackendUsed::DeterministicFallback { reason } => {
                assert!(reason.contains("Setup"), "reason should name the defect: {reason}");
            }
            other => panic!("expected fallback, got {other:?}"),
        }
        // The fallback mapping is the deterministic one and is clean.
        assert_eq!(out.mapping.event_map["InitState"], "Init");
        assert!(out.defects.is_empty());
    }

    #[test]
    fn llm_backend_falls_back_on_client_error() {
        let m = model_elements(SPEC, CFG).unwrap();
        let stub = StubClient::new(vec![]);
        let backend = MapperBackend::Llm {
            client: &stub,
            prompt_template: "{TLA_SPEC_CODE_PLACEHOLDER}".to_string(),
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
        };
        let out = build_mapping(&m, &canonical(), &backend);
        assert!(matches!(out.backend_used, BackendUsed::DeterministicFallback { .. }));
    }

    #[test]
    fn deterministic_mapping_is_deterministic() {
        let m = model_elements(SPEC, CFG).unwrap();
        let a = deterministic_mapping(&m, &canonical(), DEFAULT_SIMILARITY_THRESHOLD);
        let b = deterministic_mapping(&m, &canonical(), DEFAULT_SIMILARITY_THRESHOLD);
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }
}
