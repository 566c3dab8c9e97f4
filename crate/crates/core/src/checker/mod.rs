//! Syntax and model checking backends.
//!
//! Every caller goes through [`check_syntax`] and [`run_model_check`].
//! When `TLABENCH_TOOLS` points at a tools file the work is delegated
//! to the external TLA+ tools; otherwise the builtin checker (lexer,
//! parser, evaluator, explorer, liveness) handles the supported
//! language subset directly. Both backends produce the same result
//! types, so the scoring layer does not care which one ran.

pub mod config;
pub mod eval;
pub mod explore;
pub mod external;
pub mod liveness;
pub mod output;
pub mod value;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use thiserror::Error;

use crate::tla::{decompose_next, parse_module, DecomposeError, FrontendError, TlaModule};
use config::{parse_tlc_config, CfgError, TlcConfig};
use eval::Evaluator;
use explore::{explore, simulate, ExploreOptions, NamedAction, SimOptions, TraceStep};
use external::{archive, run_command, substitute, ToolCommands};
use liveness::{check_property, extract_spec_structure, FairnessInstance, TemporalVerdict};
use output::{
    module_name_of, parse_sany_output, parse_tlc_output, Diagnostic, DiagnosticCategory,
    RenderedTrace, SanyResult,
};
use value::Value;

pub use external::tools_from_env;
pub use output::{Diagnostic as SyntaxDiagnostic, SanyResult as SyntaxResult};

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error("tool unavailable: {0}")]
    ToolUnavailable(String),
    #[error("tool crashed: {0}")]
    ToolCrash(String),
    #[error("tool timed out after {0:?}")]
    ToolTimeout(Duration),
    #[error("configuration error: {0}")]
    ConfigInconsistent(String),
    #[error("config parse: {0}")]
    Config(#[from] CfgError),
    #[error("specification does not parse: {0}")]
    SpecUnparseable(String),
    #[error("internal checker error: {0}")]
    Internal(String),
}

/// Budgets and knobs shared by both backends.
#[derive(Debug, Clone)]
pub struct CheckerConfig {
    pub time_budget: Duration,
    pub max_states: u64,
    pub max_depth: u32,
    pub sim_runs: u32,
    pub workers: u32,
    pub seed: u64,
    /// Default when the config file has no CHECK_DEADLOCK line.
    pub check_deadlock: bool,
    pub tools: Option<ToolCommands>,
    /// When set, raw tool output (or a builtin run summary) is written
    /// here for the record.
    pub archive_dir: Option<PathBuf>,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            time_budget: Duration::from_secs(300),
            max_states: 1_000_000,
            max_depth: 50,
            sim_runs: 100,
            workers: std::thread::available_parallelism()
                .map(|n| n.get() as u32)
                .unwrap_or(1),
            seed: 0,
            check_deadlock: false,
            tools: None,
            archive_dir: None,
        }
    }
}

impl CheckerConfig {
    /// Default budgets, with the backend chosen by `TLABENCH_TOOLS`.
    pub fn from_env() -> Result<Self, CheckerError> {
        Ok(CheckerConfig {
            tools: tools_from_env()?,
            ..CheckerConfig::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Exhaustive,
    Simulate,
    /// Exhaustive search over a trace specification; identical engine
    /// behavior, but results are read as trace-matching evidence.
    TraceValidate,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: RunMode,
    /// Stop at the first error the way a plain TLC run does; when
    /// false, collect one violation per invariant.
    pub halt_at_first_error: bool,
    /// Report the maximum integer value this variable reaches across
    /// all explored states (exhaustive builtin runs only).
    pub track_max_var: Option<String>,
    /// Archive file label for this run.
    pub label: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: RunMode::Exhaustive,
            halt_at_first_error: false,
            track_max_var: None,
            label: "run".to_string(),
        }
    }
}

/// Backend-independent model checking outcome.
#[derive(Debug, Clone, Default)]
pub struct TlcResult {
    pub mode: RunMode,
    pub states_generated: u64,
    pub distinct_states: u64,
    pub search_depth: Option<u32>,
    /// Transition count per named action.
    pub coverage: BTreeMap<String, u64>,
    pub invariant_violations: Vec<String>,
    pub temporal_violations: Vec<String>,
    /// Properties the backend could not decide, with reasons.
    pub unsupported_properties: Vec<(String, String)>,
    pub runtime_errors: Vec<(Option<String>, String)>,
    pub deadlock: bool,
    /// True when the advertised state space was fully explored
    /// (exhaustive) or every requested run finished (simulation).
    pub complete: bool,
    pub runs_attempted: u32,
    pub clean_runs: u32,
    /// Violation traces keyed by invariant or property name.
    pub traces: BTreeMap<String, RenderedTrace>,
    /// For lasso counterexamples: index where the trace loops back.
    pub loop_starts: BTreeMap<String, usize>,
    pub deadlock_trace: Option<RenderedTrace>,
    pub max_tracked: Option<i64>,
    /// Oddities tolerated while reading tool output.
    pub warnings: Vec<String>,
    pub raw: String,
}

impl TlcResult {
    pub fn error_free(&self) -> bool {
        self.invariant_violations.is_empty()
            && self.temporal_violations.is_empty()
            && self.runtime_errors.is_empty()
            && !self.deadlock
    }
}

pub fn render_trace(steps: &[TraceStep]) -> RenderedTrace {
    steps
        .iter()
        .map(|s| {
            (
                s.action.clone(),
                s.state
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .collect(),
            )
        })
        .collect()
}

static SCRATCH_SEQ: AtomicU64 = AtomicU64::new(0);

fn scratch_dir(label: &str) -> Result<PathBuf, CheckerError> {
    let seq = SCRATCH_SEQ.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!(
        "tlabench-{}-{}-{}",
        std::process::id(),
        seq,
        label
    ));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CheckerError::Internal(format!("cannot create scratch dir: {e}")))?;
    Ok(dir)
}

// ---------------------------------------------------------------------------
// Syntax checking
// ---------------------------------------------------------------------------

/// Names that resolve without any declaration in the module.
fn ambient_names() -> Vec<String> {
    let mut names: Vec<String> = crate::tla::slice::std_symbols()
        .iter()
        .map(|s| s.to_string())
        .collect();
    for extra in ["TRUE", "FALSE", "BOOLEAN", "STRING", "@"] {
        names.push(extra.to_string());
    }
    names
}

/// Builtin equivalent of a syntax checker run: lex, parse, parse every
/// definition body, then resolve names. Name resolution problems are
/// reported as diagnostics but do not fail parsing, matching how the
/// external tool's outcome is classified.
pub fn builtin_check_syntax(src: &str) -> SanyResult {
    let module = match parse_module(src) {
        Ok(m) => m,
        Err(e) => {
            let category = match &e {
                FrontendError::Lexical(_) => DiagnosticCategory::Lexical,
                _ => DiagnosticCategory::Syntactic,
            };
            let line = match &e {
                FrontendError::Lexical(le) => lex_error_line(le),
                FrontendError::Malformed { line, .. }
                | FrontendError::UnsupportedConstruct { line, .. } => Some(*line),
            };
            let message = e.to_string();
            return SanyResult {
                passed: false,
                raw: message.clone(),
                diagnostics: vec![Diagnostic {
                    category,
                    message,
                    line,
                }],
            };
        }
    };

    let mut known: Vec<String> = ambient_names();
    known.extend(module.constants.iter().cloned());
    known.extend(module.variables.iter().cloned());
    known.extend(module.defs.iter().map(|d| d.name.clone()));

    let mut diagnostics = Vec::new();
    for def in &module.defs {
        match module.def_expr(def) {
            Err(e) => diagnostics.push(Diagnostic {
                category: DiagnosticCategory::Syntactic,
                message: format!("in definition {}: {e}", def.name),
                line: Some(e.line),
            }),
            Ok(body) => {
                for name in body.free_names(&def.params) {
                    if !known.iter().any(|k| k == &name) {
                        diagnostics.push(Diagnostic {
                            category: DiagnosticCategory::SemanticName,
                            message: format!(
                                "in definition {}: unknown identifier {name}",
                                def.name
                            ),
                            line: Some(def.line),
                        });
                    }
                }
            }
        }
    }
    let passed = !diagnostics.iter().any(|d| {
        matches!(
            d.category,
            DiagnosticCategory::Lexical | DiagnosticCategory::Syntactic
        )
    });
    let raw = if diagnostics.is_empty() {
        format!(
            "parsed module {} ({} definitions)",
            module.name,
            module.defs.len()
        )
    } else {
        diagnostics
            .iter()
            .map(|d| d.message.clone())
            .collect::<Vec<_>>()
            .join("\n")
    };
    SanyResult {
        passed,
        diagnostics,
        raw,
    }
}

fn lex_error_line(e: &crate::tla::LexError) -> Option<u32> {
    use crate::tla::LexError::*;
    match e {
        UnexpectedChar { line, .. }
        | UnterminatedString { line, .. }
        | UnterminatedComment { line, .. }
        | UnknownBackslashOp { line, .. } => Some(*line),
    }
}

/// Checks that a candidate model parses, via whichever backend is
/// configured.
pub fn check_syntax(spec_src: &str, cfg: &CheckerConfig) -> Result<SanyResult, CheckerError> {
    let Some(tools) = &cfg.tools else {
        return Ok(builtin_check_syntax(spec_src));
    };
    let name = module_name_of(spec_src).unwrap_or_else(|| "candidate".to_string());
    let dir = scratch_dir("sany")?;
    let spec_path = dir.join(format!("{name}.tla"));
    std::fs::write(&spec_path, spec_src)
        .map_err(|e| CheckerError::Internal(format!("cannot write spec file: {e}")))?;
    let cmd = substitute(
        &tools.sany,
        &[("spec", spec_path.display().to_string())],
    );
    let out = run_command(&cmd, cfg.time_budget)?;
    if let Some(adir) = &cfg.archive_dir {
        archive(adir, &format!("sany-{name}"), &out);
    }
    let _ = std::fs::remove_dir_all(&dir);
    if out.timed_out {
        return Err(CheckerError::ToolTimeout(cfg.time_budget));
    }
    let mut raw = out.stdout;
    if !out.stderr.is_empty() {
        raw.push('\n');
        raw.push_str(&out.stderr);
    }
    Ok(parse_sany_output(&raw))
}

// ---------------------------------------------------------------------------
// Model checking
// ---------------------------------------------------------------------------

/// Runs the model checker on a spec plus config, via whichever backend
/// is configured.
pub fn run_model_check(
    spec_src: &str,
    cfg_src: &str,
    checker: &CheckerConfig,
    opts: &RunOptions,
) -> Result<TlcResult, CheckerError> {
    match &checker.tools {
        Some(tools) => external_model_check(spec_src, cfg_src, checker, opts, tools),
        None => builtin_model_check(spec_src, cfg_src, checker, opts),
    }
}

/// The resolved ingredients of a builtin run, shared with callers that
/// need direct access to the state graph (trace validation reads the
/// cursor variable off explored states).
pub struct ResolvedModel {
    pub module: TlaModule,
    pub evaluator: Evaluator,
    pub init: crate::tla::Expr,
    pub actions: Vec<NamedAction>,
    pub invariants: Vec<(String, crate::tla::Expr)>,
    pub properties: Vec<(String, crate::tla::Expr)>,
    pub fairness: Vec<FairnessInstance>,
    pub check_deadlock: bool,
}

pub fn resolve_model(
    spec_src: &str,
    cfg: &TlcConfig,
    default_check_deadlock: bool,
) -> Result<ResolvedModel, CheckerError> {
    let module =
        parse_module(spec_src).map_err(|e| CheckerError::SpecUnparseable(e.to_string()))?;
    for name in cfg.constants.keys() {
        if !module.constants.contains(name) {
            return Err(CheckerError::ConfigInconsistent(format!(
                "constant {name} is assigned in the config but not declared by module {}",
                module.name
            )));
        }
    }
    for name in &module.constants {
        if !cfg.constants.contains_key(name) {
            return Err(CheckerError::ConfigInconsistent(format!(
                "constant {name} is not assigned a value by the config"
            )));
        }
    }
    let evaluator = Evaluator::from_module(&module, cfg.constants.clone())
        .map_err(|e| CheckerError::SpecUnparseable(e.msg))?;

    let (init_name, next_name, fairness) = match (&cfg.specification, &cfg.init, &cfg.next) {
        (Some(spec_name), _, _) => {
            let s = extract_spec_structure(&evaluator, spec_name)
                .map_err(|e| CheckerError::ConfigInconsistent(e.to_string()))?;
            (s.init, s.next, s.fairness)
        }
        (None, Some(i), Some(n)) => (i.clone(), n.clone(), Vec::new()),
        _ => {
            return Err(CheckerError::ConfigInconsistent(
                "config must name either SPECIFICATION or both INIT and NEXT".into(),
            ))
        }
    };

    let zero_ary_body = |name: &str, role: &str| -> Result<crate::tla::Expr, CheckerError> {
        let def = evaluator.defs.get(name).ok_or_else(|| {
            CheckerError::ConfigInconsistent(format!("{role} {name} is not defined"))
        })?;
        if !def.params.is_empty() {
            return Err(CheckerError::ConfigInconsistent(format!(
                "{role} {name} takes arguments and cannot be used here"
            )));
        }
        Ok(def.body.clone())
    };

    let init = zero_ary_body(&init_name, "initial predicate")?;
    let set = decompose_next(&module, &next_name).map_err(|e| match e {
        DecomposeError::MissingNext(_) => CheckerError::ConfigInconsistent(e.to_string()),
        DecomposeError::UnparseableNext { .. } => CheckerError::SpecUnparseable(e.to_string()),
    })?;
    let actions: Vec<NamedAction> = set
        .actions
        .iter()
        .chain(set.interactions.iter())
        .map(|a| NamedAction {
            name: a.name.clone(),
            statement: a.expr.clone(),
        })
        .collect();

    let mut invariants = Vec::new();
    for name in &cfg.invariants {
        let body = zero_ary_body(name, "invariant")?;
        if body.has_prime() || body.has_temporal() {
            return Err(CheckerError::ConfigInconsistent(format!(
                "invariant {name} is not a state predicate"
            )));
        }
        invariants.push((name.clone(), body));
    }
    let mut properties = Vec::new();
    for name in &cfg.properties {
        properties.push((name.clone(), zero_ary_body(name, "property")?));
    }

    Ok(ResolvedModel {
        module,
        evaluator,
        init,
        actions,
        invariants,
        properties,
        fairness,
        check_deadlock: cfg.check_deadlock.unwrap_or(default_check_deadlock),
    })
}

fn builtin_model_check(
    spec_src: &str,
    cfg_src: &str,
    checker: &CheckerConfig,
    opts: &RunOptions,
) -> Result<TlcResult, CheckerError> {
    let cfg = parse_tlc_config(cfg_src)?;
    let model = resolve_model(spec_src, &cfg, checker.check_deadlock)?;
    let mut result = TlcResult {
        mode: opts.mode,
        ..TlcResult::default()
    };

    match opts.mode {
        RunMode::Exhaustive | RunMode::TraceValidate => {
            let eopts = ExploreOptions {
                max_states: checker.max_states,
                max_depth: checker.max_depth,
                time_budget: checker.time_budget,
                check_deadlock: model.check_deadlock,
                halt_at_first_error: opts.halt_at_first_error,
            };
            let ex = explore(
                &model.evaluator,
                &model.init,
                &model.actions,
                &model.invariants,
                &eopts,
            );
            result.states_generated = ex.states_generated;
            result.distinct_states = ex.distinct_states;
            result.search_depth = Some(ex.max_depth_reached);
            result.coverage = ex.coverage.clone();
            for v in &ex.violations {
                result.invariant_violations.push(v.invariant.clone());
                result
                    .traces
                    .entry(v.invariant.clone())
                    .or_insert_with(|| render_trace(&v.trace));
            }
            for f in &ex.runtime_failures {
                result
                    .runtime_errors
                    .push((f.action.clone(), f.message.clone()));
            }
            result.deadlock = ex.deadlock.is_some();
            result.deadlock_trace = ex.deadlock.as_deref().map(render_trace);
            result.complete = ex.complete && ex.runtime_failures.is_empty();
            if let Some(var) = &opts.track_max_var {
                result.max_tracked = ex
                    .graph
                    .states
                    .iter()
                    .filter_map(|s| s.get(var).and_then(Value::as_int))
                    .max();
            }

            if !model.properties.is_empty() {
                if result.complete {
                    for (name, body) in &model.properties {
                        match check_property(&model.evaluator, &ex.graph, &model.fairness, body) {
                            Ok(TemporalVerdict::Holds) => {}
                            Ok(TemporalVerdict::Violated(cex)) => {
                                result.temporal_violations.push(name.clone());
                                if let Some(at) = cex.loop_index {
                                    result.loop_starts.insert(name.clone(), at);
                                }
                                result.traces.insert(name.clone(), render_trace(&cex.trace));
                            }
                            Err(e) => {
                                result
                                    .unsupported_properties
                                    .push((name.clone(), e.to_string()));
                            }
                        }
                    }
                } else {
                    let reason = if ex.complete {
                        "state graph is partial after a runtime error"
                    } else {
                        "state space exploration did not complete"
                    };
                    for (name, _) in &model.properties {
                        result
                            .unsupported_properties
                            .push((name.clone(), reason.to_string()));
                    }
                }
            }
        }
        RunMode::Simulate => {
            let sopts = SimOptions {
                runs: checker.sim_runs,
                max_depth: checker.max_depth,
                seed: checker.seed,
                check_deadlock: model.check_deadlock,
                time_budget: checker.time_budget,
            };
            let sim = simulate(
                &model.evaluator,
                &model.init,
                &model.actions,
                &model.invariants,
                &sopts,
            );
            result.states_generated = sim.states_generated;
            result.coverage = sim.coverage.clone();
            for v in &sim.violations {
                result.invariant_violations.push(v.invariant.clone());
                result
                    .traces
                    .entry(v.invariant.clone())
                    .or_insert_with(|| render_trace(&v.trace));
            }
            for f in &sim.runtime_failures {
                result
                    .runtime_errors
                    .push((f.action.clone(), f.message.clone()));
            }
            result.deadlock = sim.deadlocks > 0;
            result.runs_attempted = sim.runs_attempted;
            result.clean_runs = sim.clean_runs;
            result.complete = sim.runs_attempted == checker.sim_runs;
            for (name, _) in &model.properties {
                result.unsupported_properties.push((
                    name.clone(),
                    "liveness needs an exhaustive run".to_string(),
                ));
            }
        }
    }

    result.raw = summarize_builtin(&result, opts);
    if let Some(dir) = &checker.archive_dir {
        let _ = std::fs::create_dir_all(dir);
        let _ = std::fs::write(dir.join(format!("{}.summary.txt", opts.label)), &result.raw);
    }
    Ok(result)
}

fn summarize_builtin(result: &TlcResult, opts: &RunOptions) -> String {
    let mut out = String::new();
    out.push_str(match opts.mode {
        RunMode::Exhaustive => "builtin exhaustive search\n",
        RunMode::Simulate => "builtin random simulation\n",
        RunMode::TraceValidate => "builtin trace validation search\n",
    });
    out.push_str(&format!(
        "states generated: {}\ndistinct states: {}\n",
        result.states_generated, result.distinct_states
    ));
    if let Some(d) = result.search_depth {
        out.push_str(&format!("search depth: {d}\n"));
    }
    if opts.mode == RunMode::Simulate {
        out.push_str(&format!(
            "runs: {} attempted, {} clean\n",
            result.runs_attempted, result.clean_runs
        ));
    }
    for (name, hits) in &result.coverage {
        out.push_str(&format!("coverage {name}: {hits}\n"));
    }
    for name in &result.invariant_violations {
        out.push_str(&format!("invariant violated: {name}\n"));
    }
    for name in &result.temporal_violations {
        out.push_str(&format!("temporal property violated: {name}\n"));
    }
    for (name, reason) in &result.unsupported_properties {
        out.push_str(&format!("property not checked: {name} ({reason})\n"));
    }
    for (action, msg) in &result.runtime_errors {
        match action {
            Some(a) => out.push_str(&format!("runtime error in {a}: {msg}\n")),
            None => out.push_str(&format!("runtime error in the initial predicate: {msg}\n")),
        }
    }
    if result.deadlock {
        out.push_str("deadlock reached\n");
    }
    out.push_str(if result.complete {
        "run complete\n"
    } else {
        "run incomplete\n"
    });
    out
}

fn external_model_check(
    spec_src: &str,
    cfg_src: &str,
    checker: &CheckerConfig,
    opts: &RunOptions,
    tools: &ToolCommands,
) -> Result<TlcResult, CheckerError> {
    let cfg = parse_tlc_config(cfg_src)?;
    let name = module_name_of(spec_src).unwrap_or_else(|| "candidate".to_string());
    let dir = scratch_dir("tlc")?;
    let spec_path = dir.join(format!("{name}.tla"));
    let cfg_path = dir.join(format!("{name}.cfg"));
    std::fs::write(&spec_path, spec_src)
        .map_err(|e| CheckerError::Internal(format!("cannot write spec file: {e}")))?;
    std::fs::write(&cfg_path, cfg_src)
        .map_err(|e| CheckerError::Internal(format!("cannot write config file: {e}")))?;

    let template = match opts.mode {
        RunMode::Exhaustive | RunMode::TraceValidate => &tools.tlc,
        RunMode::Simulate => tools.tlc_simulate.as_ref().unwrap_or(&tools.tlc),
    };
    let cmd = substitute(
        template,
        &[
            ("spec", spec_path.display().to_string()),
            ("config", cfg_path.display().to_string()),
            ("workers", checker.workers.to_string()),
            ("depth", checker.max_depth.to_string()),
            ("seed", checker.seed.to_string()),
            ("runs", checker.sim_runs.to_string()),
        ],
    );
    let out = run_command(&cmd, checker.time_budget)?;
    if let Some(adir) = &checker.archive_dir {
        archive(adir, &opts.label, &out);
    }
    let _ = std::fs::remove_dir_all(&dir);

    let mut raw = out.stdout.clone();
    if !out.stderr.is_empty() {
        raw.push('\n');
        raw.push_str(&out.stderr);
    }
    let parsed = parse_tlc_output(&raw);
    if let Some(msg) = parsed.config_error {
        return Err(CheckerError::ConfigInconsistent(msg));
    }
    if !out.timed_out
        && out.status != Some(0)
        && parsed.states_generated == 0
        && parsed.invariant_violations.is_empty()
        && !parsed.temporal_violation
        && !parsed.deadlock
        && parsed.runtime_errors.is_empty()
    {
        let head: String = raw.lines().take(5).collect::<Vec<_>>().join(" | ");
        return Err(CheckerError::ToolCrash(format!(
            "exit status {:?}: {head}",
            out.status
        )));
    }

    let mut result = TlcResult {
        mode: opts.mode,
        states_generated: parsed.states_generated,
        distinct_states: parsed.distinct_states,
        search_depth: parsed.search_depth,
        coverage: parsed.coverage,
        invariant_violations: parsed.invariant_violations,
        runtime_errors: parsed.runtime_errors,
        deadlock: parsed.deadlock,
        complete: !out.timed_out && parsed.completed,
        warnings: parsed.warnings,
        raw,
        ..TlcResult::default()
    };
    if parsed.temporal_violation {
        // The harness checks liveness one property per run, so a single
        // PROPERTY line identifies the culprit.
        let name = match cfg.properties.as_slice() {
            [single] => single.clone(),
            _ => "TemporalProperty".to_string(),
        };
        result.temporal_violations.push(name);
    }
    let trace_owner = result
        .invariant_violations
        .first()
        .cloned()
        .or_else(|| result.temporal_violations.first().cloned());
    if !parsed.trace.is_empty() {
        if let Some(owner) = trace_owner {
            if let Some(at) = parsed.loop_start {
                result.loop_starts.insert(owner.clone(), at);
            }
            result.traces.insert(owner, parsed.trace);
        } else if result.deadlock {
            result.deadlock_trace = Some(parsed.trace);
        }
    }
    if opts.mode == RunMode::Simulate {
        result.runs_attempted = checker.sim_runs;
        result.clean_runs = if result.error_free() && !out.timed_out {
            checker.sim_runs
        } else {
            0
        };
        result.complete = !out.timed_out;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPINLOCKISH: &str = r#"---- MODULE lockmod ----
EXTENDS Naturals

CONSTANT Threads

VARIABLES lock_state, thread_state

vars == <<lock_state, thread_state>>

Init ==
    /\ lock_state = "unlocked"
    /\ thread_state = [t \in Threads |-> "idle"]

Acquire(t) ==
    /\ thread_state[t] = "idle"
    /\ lock_state = "unlocked"
    /\ lock_state' = "locked"
    /\ thread_state' = [thread_state EXCEPT ![t] = "holding"]

Release(t) ==
    /\ thread_state[t] = "holding"
    /\ lock_state' = "unlocked"
    /\ thread_state' = [thread_state EXCEPT ![t] = "idle"]

Next ==
    \/ \E t \in Threads : Acquire(t)
    \/ \E t \in Threads : Release(t)

MutualExclusion ==
    \A a, b \in Threads :
        thread_state[a] = "holding" /\ thread_state[b] = "holding" => a = b

====
"#;

    const CFG: &str = "INIT Init\nNEXT Next\nCONSTANT Threads = {t1, t2}\nINVARIANT MutualExclusion\n";

    #[test]
    fn builtin_syntax_pass_and_name_diagnostics() {
        let r = builtin_check_syntax(SPINLOCKISH);
        assert!(r.passed, "diagnostics: {:?}", r.diagnostics);
        assert!(r.diagnostics.is_empty());

        let broken = SPINLOCKISH.replace("thread_state[t] = \"holding\"", "ghost[t] = \"holding\"");
        let r = builtin_check_syntax(&broken);
        assert!(r.passed);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| d.category == DiagnosticCategory::SemanticName
                && d.message.contains("ghost")));

        let r = builtin_check_syntax("---- MODULE x ----\nFoo == /\\\n====\n");
        assert!(!r.passed);
    }

    #[test]
    fn builtin_exhaustive_run_reports_statistics() {
        let checker = CheckerConfig::default();
        let r = run_model_check(SPINLOCKISH, CFG, &checker, &RunOptions::default()).unwrap();
        assert!(r.error_free(), "errors: {:?}", r.runtime_errors);
        assert!(r.complete);
        // 2 threads, lock free/held by either: 3 distinct states.
        assert_eq!(r.distinct_states, 3);
        assert!(r.coverage["Acquire"] > 0 && r.coverage["Release"] > 0);
    }

    #[test]
    fn builtin_simulation_counts_clean_runs() {
        let checker = CheckerConfig {
            sim_runs: 20,
            ..CheckerConfig::default()
        };
        let opts = RunOptions {
            mode: RunMode::Simulate,
            ..RunOptions::default()
        };
        let r = run_model_check(SPINLOCKISH, CFG, &checker, &opts).unwrap();
        assert_eq!(r.runs_attempted, 20);
        assert_eq!(r.clean_runs, 20);
    }

    #[test]
    fn missing_constant_is_a_config_error() {
        let checker = CheckerConfig::default();
        let out = run_model_check(
            SPINLOCKISH,
            "INIT Init\nNEXT Next\nINVARIANT MutualExclusion\n",
            &checker,
            &RunOptions::default(),
        );
        assert!(matches!(out, Err(CheckerError::ConfigInconsistent(_))));
    }

    #[test]
    fn track_max_var_reads_reached_states() {
        let src = r#"---- MODULE counter ----
EXTENDS Naturals
VARIABLE x
Init == x = 0
Bump == x < 4 /\ x' = x + 1
Next == Bump
====
"#;
        let checker = CheckerConfig::default();
        let opts = RunOptions {
            track_max_var: Some("x".to_string()),
            ..RunOptions::default()
        };
        let r = run_model_check(src, "INIT Init\nNEXT Next\n", &checker, &opts).unwrap();
        assert_eq!(r.max_tracked, Some(4));
    }
}
