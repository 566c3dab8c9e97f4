//! Invariant templates and their concretization against a model.
//!
//! A template states a system property in natural language plus an
//! example formula written over placeholder names. Concretization
//! rewrites the placeholders into the candidate model's vocabulary;
//! checking then verifies each concretized formula. Safety formulas are
//! state predicates checked in one batch; liveness formulas carry
//! temporal operators and run one at a time so a violation is
//! attributable to its property by every backend.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::agents::client::{strip_code_fence, ClientError, LlmClient};
use crate::checker::{run_model_check, CheckerConfig, RunMode, RunOptions};
use crate::mapping::{resolve_name, BackendUsed, ModelElements};
use crate::scoring::Score;
use crate::tla::lexer::{lex, Tok};
use crate::tla::expr::parse_expr_tokens;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {0} is declared twice")]
    DuplicateTemplateName(String),
    #[error("template {template} is missing the {field} field")]
    MissingField { template: String, field: String },
    #[error("template {template}: type must be \"safety\" or \"liveness\", got {got:?}")]
    BadType { template: String, got: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no templates found")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TemplateKind {
    Safety,
    Liveness,
}

impl std::fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TemplateKind::Safety => write!(f, "safety"),
            TemplateKind::Liveness => write!(f, "liveness"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantTemplate {
    pub name: String,
    pub kind: TemplateKind,
    pub natural_language: String,
    pub formal_description: String,
    /// Example formula over placeholder names, `Name == expression`.
    pub tla_example: String,
}

/// Parses the block template format:
///
/// ```text
/// - name:"MutualExclusion"
///   type:"safety"
///   natural_language:"Only one thread can access a shared resource at a time"
///   formal_description:"No more than one thread in the critical section"
///   tla_example: MutualExclusion == Cardinality({t \in Threads: pc[t] = "in_cs"}) <= 1
/// ```
pub fn parse_templates(text: &str) -> Result<Vec<InvariantTemplate>, TemplateError> {
    struct Partial {
        name: Option<String>,
        kind: Option<String>,
        natural_language: Option<String>,
        formal_description: Option<String>,
        tla_example: Option<String>,
        start_line: usize,
    }

    fn finish(p: Partial) -> Result<InvariantTemplate, TemplateError> {
        let template = p.name.clone().unwrap_or_else(|| format!("entry at line {}", p.start_line));
        let missing = |field: &str| TemplateError::MissingField {
            template: template.clone(),
            field: field.to_string(),
        };
        let name = p.name.ok_or_else(|| missing("name"))?;
        let kind_text = p.kind.ok_or_else(|| missing("type"))?;
        let kind = match kind_text.as_str() {
            "safety" => TemplateKind::Safety,
            "liveness" => TemplateKind::Liveness,
            other => {
                return Err(TemplateError::BadType {
                    template: name,
                    got: other.to_string(),
                })
            }
        };
        Ok(InvariantTemplate {
            natural_language: p.natural_language.ok_or_else(|| missing("natural_language"))?,
            formal_description: p.formal_description.ok_or_else(|| missing("formal_description"))?,
            tla_example: p.tla_example.ok_or_else(|| missing("tla_example"))?,
            name,
            kind,
        })
    }

    fn unquote(line: usize, key: &str, raw: &str) -> Result<String, TemplateError> {
        let t = raw.trim();
        let inner = t
            .strip_prefix('"')
            .and_then(|r| r.strip_suffix('"'))
            .ok_or_else(|| TemplateError::Malformed {
                line,
                reason: format!("{key} value must be quoted"),
            })?;
        Ok(inner.to_string())
    }

    let mut out: Vec<InvariantTemplate> = Vec::new();
    let mut current: Option<Partial> = None;
    let mut in_example = false;

    for (i, raw_line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = raw_line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (is_entry_start, field_line) = match trimmed.strip_prefix("- ") {
            Some(rest) => (true, rest),
            None => (false, trimmed),
        };
        if is_entry_start {
            if let Some(p) = current.take() {
                out.push(finish(p)?);
            }
            current = Some(Partial {
                name: None,
                kind: None,
                natural_language: None,
                formal_description: None,
                tla_example: None,
                start_line: lineno,
            });
            in_example = false;
        }
        let Some(p) = current.as_mut() else {
            return Err(TemplateError::Malformed {
                line: lineno,
                reason: "content before the first entry".to_string(),
            });
        };
        let (key, value) = match field_line.split_once(':') {
            Some((k, v)) if ["name", "type", "natural_language", "formal_description", "tla_example"]
                .contains(&k.trim()) =>
            {
                (k.trim().to_string(), v.to_string())
            }
            _ => {
                // Continuation of a multi-line example.
                if in_example {
                    if let Some(e) = p.tla_example.as_mut() {
                        e.push_str("\n    ");
                        e.push_str(field_line.trim_end());
                    }
                    continue;
                }
                return Err(TemplateError::Malformed {
                    line: lineno,
                    reason: format!("unrecognized line {field_line:?}"),
                });
            }
        };
        in_example = key == "tla_example";
        match key.as_str() {
            "name" => p.name = Some(unquote(lineno, "name", &value)?),
            "type" => p.kind = Some(unquote(lineno, "type", &value)?),
            "natural_language" => {
                p.natural_language = Some(unquote(lineno, "natural_language", &value)?)
            }
            "formal_description" => {
                p.formal_description = Some(unquote(lineno, "formal_description", &value)?)
            }
            "tla_example" => p.tla_example = Some(value.trim().to_string()),
            _ => unreachable!(),
        }
    }
    if let Some(p) = current.take() {
        out.push(finish(p)?);
    }
    if out.is_empty() {
        return Err(TemplateError::Empty);
    }
    let mut seen = BTreeSet::new();
    for t in &out {
        if !seen.insert(t.name.clone()) {
            return Err(TemplateError::DuplicateTemplateName(t.name.clone()));
        }
    }
    Ok(out)
}

/// Renders templates back into the block format, for prompts.
pub fn render_templates(templates: &[InvariantTemplate]) -> String {
    let mut out = String::new();
    for t in templates {
        out.push_str(&format!(
            "- name:\"{}\"\n  type:\"{}\"\n  natural_language:\"{}\"\n  formal_description:\"{}\"\n  tla_example: {}\n",
            t.name, t.kind, t.natural_language, t.formal_description, t.tla_example
        ));
    }
    out
}

/// One template after concretization.
#[derive(Debug, Clone, PartialEq)]
pub enum Concretization {
    Ready {
        name: String,
        kind: TemplateKind,
        /// Full definition, `Name == expression`, in model vocabulary.
        formula: String,
    },
    Unconcretizable {
        name: String,
        kind: TemplateKind,
        reason: String,
    },
}

impl Concretization {
    pub fn name(&self) -> &str {
        match self {
            Concretization::Ready { name, .. } => name,
            Concretization::Unconcretizable { name, .. } => name,
        }
    }

    pub fn kind(&self) -> TemplateKind {
        match self {
            Concretization::Ready { kind, .. } => *kind,
            Concretization::Unconcretizable { kind, .. } => *kind,
        }
    }
}

fn model_namespace(model: &ModelElements) -> Vec<String> {
    let mut out = model.variables.clone();
    for c in &model.constants {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    for d in &model.defs {
        if !out.contains(d) {
            out.push(d.clone());
        }
    }
    out
}

/// Rewrites one template's example into the model's vocabulary.
///
/// Free identifiers and string literals in the example each resolve
/// against the model; an unresolved one makes the whole template
/// unconcretizable. The defined name is kept verbatim.
pub fn concretize_deterministic(
    tmpl: &InvariantTemplate,
    model: &ModelElements,
    synonyms: &BTreeMap<String, String>,
    threshold: f64,
) -> Concretization {
    let fail = |reason: String| Concretization::Unconcretizable {
        name: tmpl.name.clone(),
        kind: tmpl.kind,
        reason,
    };
    let Some((head, body)) = tmpl.tla_example.split_once("==") else {
        return fail("example is not a definition".to_string());
    };
    if head.trim() != tmpl.name {
        return fail(format!(
            "example defines {:?}, expected the template name",
            head.trim()
        ));
    }
    let toks = match lex(body) {
        Ok(t) => t,
        Err(e) => return fail(format!("example does not lex: {e}")),
    };
    let expr = match parse_expr_tokens(&toks) {
        Ok(e) => e,
        Err(e) => return fail(format!("example does not parse: {e}")),
    };
    match tmpl.kind {
        TemplateKind::Safety => {
            if expr.has_temporal() || expr.has_prime() {
                return fail("safety example must be a state predicate".to_string());
            }
        }
        TemplateKind::Liveness => {
            if !expr.has_temporal() {
                return fail("liveness example needs a temporal operator".to_string());
            }
        }
    }

    let std: BTreeSet<&str> = crate::tla::slice::std_symbols().iter().copied().collect();
    let namespace = model_namespace(model);
    let mut ident_subst: BTreeMap<String, String> = BTreeMap::new();
    for name in expr.free_names(&[]) {
        if std.contains(name.as_str()) || namespace.contains(&name) {
            continue;
        }
        match resolve_name(&name, &namespace, synonyms, threshold) {
            Some(target) => {
                ident_subst.insert(name, target);
            }
            None => return fail(format!("placeholder {name} has no model counterpart")),
        }
    }
    let mut str_subst: BTreeMap<String, String> = BTreeMap::new();
    for t in &toks {
        if let Tok::Str(s) = &t.tok {
            if model.string_values.contains(s) || str_subst.contains_key(s) {
                continue;
            }
            match resolve_name(s, &model.string_values, synonyms, threshold) {
                Some(target) => {
                    str_subst.insert(s.clone(), target);
                }
                None => return fail(format!("value {s:?} has no model counterpart")),
            }
        }
    }

    let mut rewritten = String::new();
    let mut pos = 0usize;
    for t in &toks {
        rewritten.push_str(&body[pos..t.span.start]);
        match &t.tok {
            Tok::Ident(n) if ident_subst.contains_key(n) => rewritten.push_str(&ident_subst[n]),
            Tok::Str(s) if str_subst.contains_key(s) => {
                rewritten.push('"');
                rewritten.push_str(&str_subst[s]);
                rewritten.push('"');
            }
            _ => rewritten.push_str(&body[t.span.start..t.span.end]),
        }
        pos = t.span.end;
    }
    rewritten.push_str(&body[pos..]);

    Concretization::Ready {
        name: tmpl.name.clone(),
        kind: tmpl.kind,
        formula: format!("{} =={}", tmpl.name, rewritten),
    }
}

/// How concretization should be produced.
pub enum ConcretizerBackend<'a> {
    Deterministic,
    Llm {
        client: &'a dyn LlmClient,
        prompt_template: String,
    },
}

#[derive(Debug, Clone)]
pub struct ConcretizationRun {
    pub outcomes: Vec<Concretization>,
    pub backend_used: BackendUsed,
}

fn validate_llm_formula(
    tmpl: &InvariantTemplate,
    body: &str,
    model: &ModelElements,
) -> Result<(), String> {
    let toks = lex(body).map_err(|e| format!("does not lex: {e}"))?;
    let expr = parse_expr_tokens(&toks).map_err(|e| format!("does not parse: {e}"))?;
    match tmpl.kind {
        TemplateKind::Safety => {
            if expr.has_temporal() || expr.has_prime() {
                return Err("safety formula must be a state predicate".to_string());
            }
        }
        TemplateKind::Liveness => {
            if !expr.has_temporal() {
                return Err("liveness formula needs a temporal operator".to_string());
            }
        }
    }
    let std: BTreeSet<&str> = crate::tla::slice::std_symbols().iter().copied().collect();
    let namespace = model_namespace(model);
    for name in expr.free_names(&[]) {
        if !std.contains(name.as_str()) && !namespace.contains(&name) {
            return Err(format!("{name} is not defined in the model"));
        }
    }
    Ok(())
}

fn concretize_llm(
    templates: &[InvariantTemplate],
    model: &ModelElements,
    client: &dyn LlmClient,
    prompt_template: &str,
) -> Result<Vec<Concretization>, ClientError> {
    let prompt = prompt_template
        .replace("$tla_model", &model.source)
        .replace("$invariant_templates", &render_templates(templates));
    let raw = client.complete(&prompt)?;
    let parsed: serde_json::Value = serde_json::from_str(strip_code_fence(&raw))
        .map_err(|e| ClientError::Failed(format!("concretization is not valid JSON: {e}")))?;
    let list = parsed["invariants"]
        .as_array()
        .ok_or_else(|| ClientError::Failed("response lacks an invariants array".to_string()))?;

    let mut by_name: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for item in list {
        let Some(text) = item.as_str() else { continue };
        if let Some((head, body)) = text.split_once("==") {
            by_name
                .entry(head.trim().to_string())
                .or_default()
                .push(body.to_string());
        }
    }

    let mut out = Vec::new();
    for tmpl in templates {
        let fail = |reason: String| Concretization::Unconcretizable {
            name: tmpl.name.clone(),
            kind: tmpl.kind,
            reason,
        };
        let outcome = match by_name.get(&tmpl.name).map(Vec::as_slice) {
            None | Some([]) => fail("missing from the response".to_string()),
            Some([_, _, ..]) => fail("defined more than once in the response".to_string()),
            Some([body]) => match validate_llm_formula(tmpl, body, model) {
                Ok(()) => Concretization::Ready {
                    name: tmpl.name.clone(),
                    kind: tmpl.kind,
                    formula: format!("{} =={}", tmpl.name, body),
                },
                Err(reason) => fail(reason),
            },
        };
        out.push(outcome);
    }
    Ok(out)
}

/// Concretizes every template with the chosen backend. A failed model
/// call falls back to deterministic concretization; a response that
/// fails validation for one template makes that template
/// unconcretizable without affecting the others.
pub fn concretize(
    templates: &[InvariantTemplate],
    model: &ModelElements,
    synonyms: &BTreeMap<String, String>,
    threshold: f64,
    backend: &ConcretizerBackend,
) -> ConcretizationRun {
    match backend {
        ConcretizerBackend::Deterministic => ConcretizationRun {
            outcomes: templates
                .iter()
                .map(|t| concretize_deterministic(t, model, synonyms, threshold))
                .collect(),
            backend_used: BackendUsed::Deterministic,
        },
        ConcretizerBackend::Llm {
            client,
            prompt_template,
        } => match concretize_llm(templates, model, *client, prompt_template) {
            Ok(outcomes) => ConcretizationRun {
                outcomes,
                backend_used: BackendUsed::Llm,
            },
            Err(e) => ConcretizationRun {
                outcomes: templates
                    .iter()
                    .map(|t| concretize_deterministic(t, model, synonyms, threshold))
                    .collect(),
                backend_used: BackendUsed::DeterministicFallback {
                    reason: format!("concretization call failed: {e}"),
                },
            },
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InvariantStatus {
    Holds,
    Violated { detail: String },
    Unconcretizable { reason: String },
    CheckFailed { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantOutcome {
    pub name: String,
    pub kind: TemplateKind,
    pub status: InvariantStatus,
}

/// Inserts definitions just before the module terminator.
fn append_definitions(spec_src: &str, defs: &[String]) -> String {
    let mut lines: Vec<&str> = spec_src.lines().collect();
    let terminator = lines
        .iter()
        .rposition(|l| l.trim_start().starts_with("===="))
        .unwrap_or(lines.len());
    let block = defs.join("\n\n");
    lines.insert(terminator, "");
    let mut out = lines[..terminator].join("\n");
    out.push_str("\n\n");
    out.push_str(&block);
    out.push('\n');
    out.push_str(&lines[terminator + 1..].join("\n"));
    out.push('\n');
    out
}

fn with_cfg_lines(cfg_src: &str, lines: &[String]) -> String {
    let mut out = cfg_src.trim_end().to_string();
    out.push('\n');
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// Checks every concretized formula against the model.
///
/// Safety predicates run as one batched exhaustive search that collects
/// all violations. Liveness properties run one per search so a
/// violation is attributable regardless of backend. A search that ends
/// without exhausting the state space cannot certify anything, so its
/// formulas come back as check failures rather than passes.
pub fn run_invariant_checks(
    spec_src: &str,
    cfg_src: &str,
    concretizations: &[Concretization],
    checker: &CheckerConfig,
) -> Vec<InvariantOutcome> {
    let mut out = Vec::new();
    let mut safety: Vec<(&str, &str)> = Vec::new();
    let mut liveness: Vec<(&str, &str)> = Vec::new();
    for c in concretizations {
        match c {
            Concretization::Unconcretizable { name, kind, reason } => out.push(InvariantOutcome {
                name: name.clone(),
                kind: *kind,
                status: InvariantStatus::Unconcretizable {
                    reason: reason.clone(),
                },
            }),
            Concretization::Ready { name, kind, formula } => match kind {
                TemplateKind::Safety => safety.push((name, formula)),
                TemplateKind::Liveness => liveness.push((name, formula)),
            },
        }
    }

    if !safety.is_empty() {
        let defs: Vec<String> = safety.iter().map(|(_, f)| f.to_string()).collect();
        let spec = append_definitions(spec_src, &defs);
        let cfg_lines: Vec<String> = safety
            .iter()
            .map(|(n, _)| format!("INVARIANT {n}"))
            .collect();
        let cfg = with_cfg_lines(cfg_src, &cfg_lines);
        let opts = RunOptions {
            mode: RunMode::Exhaustive,
            halt_at_first_error: false,
            track_max_var: None,
            label: "invariant-safety".to_string(),
        };
        match run_model_check(&spec, &cfg, checker, &opts) {
            Ok(result) => {
                for (name, _) in &safety {
                    let status = if result.invariant_violations.iter().any(|v| v == name) {
                        InvariantStatus::Violated {
                            detail: "a reachable state refutes it".to_string(),
                        }
                    } else if !result.runtime_errors.is_empty() {
                        InvariantStatus::CheckFailed {
                            reason: result.runtime_errors[0].1.clone(),
                        }
                    } else if !result.complete {
                        InvariantStatus::CheckFailed {
                            reason: "state space not exhausted within budget".to_string(),
                        }
                    } else {
                        InvariantStatus::Holds
                    };
                    out.push(InvariantOutcome {
                        name: name.to_string(),
                        kind: TemplateKind::Safety,
                        status,
                    });
                }
            }
            Err(e) => {
                for (name, _) in &safety {
                    out.push(InvariantOutcome {
                        name: name.to_string(),
                        kind: TemplateKind::Safety,
                        status: InvariantStatus::CheckFailed {
                            reason: e.to_string(),
                        },
                    });
                }
            }
        }
    }

    for (name, formula) in &liveness {
        let spec = append_definitions(spec_src, &[formula.to_string()]);
        let cfg = with_cfg_lines(cfg_src, &[format!("PROPERTY {name}")]);
        let opts = RunOptions {
            mode: RunMode::Exhaustive,
            halt_at_first_error: false,
            track_max_var: None,
            label: format!("invariant-liveness-{name}"),
        };
        let status = match run_model_check(&spec, &cfg, checker, &opts) {
            Ok(result) => {
                if result.temporal_violations.iter().any(|v| v == name) {
                    InvariantStatus::Violated {
                        detail: "a fair behavior refutes it".to_string(),
                    }
                } else if let Some((_, reason)) = result
                    .unsupported_properties
                    .iter()
                    .find(|(n, _)| n == name)
                {
                    InvariantStatus::CheckFailed {
                        reason: reason.clone(),
                    }
                } else if !result.runtime_errors.is_empty() {
                    InvariantStatus::CheckFailed {
                        reason: result.runtime_errors[0].1.clone(),
                    }
                } else if !result.complete {
                    InvariantStatus::CheckFailed {
                        reason: "state space not exhausted within budget".to_string(),
                    }
                } else {
                    InvariantStatus::Holds
                }
            }
            Err(e) => InvariantStatus::CheckFailed {
                reason: e.to_string(),
            },
        };
        out.push(InvariantOutcome {
            name: name.to_string(),
            kind: TemplateKind::Liveness,
            status,
        });
    }

    out
}

/// Invariant correctness: templates whose concretized formula holds,
/// over all templates. Unconcretizable templates count against the
/// score and stay visible in the outcomes.
pub fn score_invariants(outcomes: &[InvariantOutcome]) -> Score {
    if outcomes.is_empty() {
        return Score::ZERO;
    }
    let holds = outcomes
        .iter()
        .filter(|o| o.status == InvariantStatus::Holds)
        .count();
    Score::of_counts(holds, outcomes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::model_elements;

    const TEMPLATES: &str = r#"- name:"MutualExclusion"
  type:"safety"
  natural_language:"Only one thread can access a shared resource at a time"
  formal_description:"No more than one thread in the critical section"
  tla_example: MutualExclusion == Cardinality({t \in Threads: pc[t] = "in_cs"}) <= 1
- name:"EventualRelease"
  type:"liveness"
  natural_language:"The system eventually reaches a state where all threads are idle"
  formal_description:"Eventually every thread is idle"
  tla_example: EventualRelease == <>(\A t \in Threads : pc[t] = "idle")
"#;

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

Fairness == \A t \in Threads : WF_vars(Acquire(t)) /\ WF_vars(Unlock(t))

Spec == Init /\ [][Next]_vars /\ Fairness
====
"#;

    const CFG: &str = "SPECIFICATION Spec\nCONSTANT Threads = {t1, t2}\n";

    fn synonyms() -> BTreeMap<String, String> {
        let mut s = BTreeMap::new();
        s.insert("pc".to_string(), "thread_state".to_string());
        s.insert("in_cs".to_string(), "holding".to_string());
        s
    }

    #[test]
    fn parses_block_templates() {
        let ts = parse_templates(TEMPLATES).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].name, "MutualExclusion");
        assert_eq!(ts[0].kind, TemplateKind::Safety);
        assert_eq!(
            ts[0].natural_language,
            "Only one thread can access a shared resource at a time"
        );
        assert!(ts[0].tla_example.contains("Cardinality"));
        assert_eq!(ts[1].kind, TemplateKind::Liveness);
    }

    #[test]
    fn rejects_duplicate_names() {
        let doubled = format!("{TEMPLATES}{TEMPLATES}");
        assert!(matches!(
            parse_templates(&doubled),
            Err(TemplateError::DuplicateTemplateName(_))
        ));
    }

    #[test]
    fn rejects_missing_field() {
        let text = "- name:\"X\"\n  type:\"safety\"\n  natural_language:\"x\"\n  formal_description:\"x\"\n";
        match parse_templates(text) {
            Err(TemplateError::MissingField { template, field }) => {
                assert_eq!(template, "X");
                assert_eq!(field, "tla_example");
            }
            other => panic!("expected missing field, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_type() {
        let text = "- name:\"X\"\n  type:\"sometimes\"\n  natural_language:\"x\"\n  formal_description:\"x\"\n  tla_example: X == TRUE\n";
        assert!(matches!(parse_templates(text), Err(TemplateError::BadType { .. })));
    }

    #[test]
    fn round_trips_through_render() {
        let ts = parse_templates(TEMPLATES).unwrap();
        let again = parse_templates(&render_templates(&ts)).unwrap();
        assert_eq!(ts, again);
    }

    #[test]
    fn concretizes_placeholders_into_model_names() {
        let model = model_elements(SPEC, CFG).unwrap();
        let ts = parse_templates(TEMPLATES).unwrap();
        let c = concretize_deterministic(&ts[0], &model, &synonyms(), 0.8);
        match c {
            Concretization::Ready { formula, .. } => {
                assert_eq!(
                    formula,
                    "MutualExclusion == Cardinality({t \\in Threads: thread_state[t] = \"holding\"}) <= 1"
                );
            }
            other => panic!("expected ready, got {other:?}"),
        }
    }

    #[test]
    fn unresolvable_placeholder_is_unconcretizable() {
        let model = model_elements(SPEC, CFG).unwrap();
        let tmpl = InvariantTemplate {
            name: "Quorum".to_string(),
            kind: TemplateKind::Safety,
            natural_language: "x".to_string(),
            formal_description: "x".to_string(),
            tla_example: "Quorum == Cardinality(acceptors) > quorum_size".to_string(),
        };
        match concretize_deterministic(&tmpl, &model, &BTreeMap::new(), 0.8) {
            Concretization::Unconcretizable { reason, .. } => {
                assert!(reason.contains("acceptors") || reason.contains("quorum_size"));
            }
            other => panic!("expected unconcretizable, got {other:?}"),
        }
    }

    #[test]
    fn checks_safety_and_liveness_against_model() {
        let model = model_elements(SPEC, CFG).unwrap();
        let ts = parse_templates(TEMPLATES).unwrap();
        let run = concretize(&ts, &model, &synonyms(), 0.8, &ConcretizerBackend::Deterministic);
        assert_eq!(run.backend_used, BackendUsed::Deterministic);
        let outcomes =
            run_invariant_checks(SPEC, CFG, &run.outcomes, &CheckerConfig::default());
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            assert_eq!(o.status, InvariantStatus::Holds, "{}: {:?}", o.name, o.status);
        }
        assert_eq!(score_invariants(&outcomes), Score::ONE);
    }

    #[test]
    fn violated_safety_invariant_detected() {
        let model = model_elements(SPEC, CFG).unwrap();
        let tmpl = InvariantTemplate {
            name: "NeverHeld".to_string(),
            kind: TemplateKind::Safety,
            natural_language: "x".to_string(),
            formal_description: "x".to_string(),
            tla_example: "NeverHeld == lock /= \"locked\"".to_string(),
        };
        let mut syn = BTreeMap::new();
        syn.insert("lock".to_string(), "lock_state".to_string());
        let c = concretize_deterministic(&tmpl, &model, &syn, 0.8);
        let outcomes = run_invariant_checks(SPEC, CFG, &[c], &CheckerConfig::default());
        assert!(matches!(outcomes[0].status, InvariantStatus::Violated { .. }));
        assert_eq!(score_invariants(&outcomes), Score::ZERO);
    }

    #[test]
    fn unconcretizable_counts_against_score() {
        let outcomes = vec![
            InvariantOutcome {
                name: "A".to_string(),
                kind: TemplateKind::Safety,
                status: InvariantStatus::Holds,
            },
            InvariantOutcome {
                name: "B".to_string(),
                kind: TemplateKind::Safety,
                status: InvariantStatus::Unconcretizable {
                    reason: "placeholder x".to_string(),
                },
            },
        ];
        assert_eq!(score_invariants(&outcomes), Score::ratio(1, 2));
    }

    #[test]
    fn llm_concretization_validates_types_and_names() {
        use crate::agents::client::StubClient;
        let model = model_elements(SPEC, CFG).unwrap();
        let ts = parse_templates(TEMPLATES).unwrap();
        // MutualExclusion is fine; EventualRelease lacks a temporal
        // operator, so it must come back unconcretizable.
        let response = r#"{"invariants": [
            "MutualExclusion == Cardinality({t \\in Threads: thread_state[t] = \"holding\"}) <= 1",
            "EventualRelease == \\A t \\in Threads : thread_state[t] = \"idle\""
        ]}"#;
        let stub = StubClient::new(vec![response.to_string()]);
        let backend = ConcretizerBackend::Llm {
            client: &stub,
            prompt_template: "$tla_model\n$invariant_templates".to_string(),
        };
        let run = concretize(&ts, &model, &synonyms(), 0.8, &backend);
        assert_eq!(run.backend_used, BackendUsed::Llm);
        assert!(matches!(run.outcomes[0], Concretization::Ready { .. }));
        match &run.outcomes[1] {
            Concretization::Unconcretizable { reason, .. } => {
                assert!(reason.contains("temporal"));
            }
            other => panic!("expected unconcretizable, got {other:?}"),
        }
    }

    #[test]
    fn llm_failure_falls_back_to_deterministic() {
        use crate::agents::client::StubClient;
        let model = model_elements(SPEC, CFG).unwrap();
        let ts = parse_templates(TEMPLATES).unwrap();
        let stub = StubClient::new(vec![]);
        let backend = ConcretizerBackend::Llm {
            client: &stub,
            prompt_template: "$tla_model".to_string(),
        };
        let run = concretize(&ts, &model, &synonyms(), 0.8, &backend);
        assert!(matches!(run.backend_used, BackendUsed::DeterministicFallback { .. }));
        assert!(run
            .outcomes
            .iter()
            .all(|c| matches!(c, Concretization::Ready { .. })));
    }
}
