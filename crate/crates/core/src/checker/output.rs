//! Parsers for the textual output of the external syntax and model
//! checking tools.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCategory {
    Lexical,
    Syntactic,
    SemanticName,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub category: DiagnosticCategory,
    pub message: String,
    pub line: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanyResult {
    /// Passed means no lexical or syntactic diagnostics; name
    /// resolution problems are reported but do not fail parsing.
    pub passed: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub raw: String,
}

fn first_line_number(text: &str) -> Option<u32> {
    let ix = text.find("line ")?;
    let rest = &text[ix + 5..];
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

/// Classifies the diagnostics in a syntax checker run.
pub fn parse_sany_output(raw: &str) -> SanyResult {
    let mut diagnostics = Vec::new();
    let mut in_semantic_block = false;
    for line in raw.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with("Semantic errors:") || trimmed.starts_with("*** Warnings:") {
            in_semantic_block = true;
            continue;
        }
        if trimmed.starts_with("Lexical error") {
            diagnostics.push(Diagnostic {
                category: DiagnosticCategory::Lexical,
                message: trimmed.to_string(),
                line: first_line_number(trimmed),
            });
            in_semantic_block = false;
            continue;
        }
        if trimmed.contains("Parse Error")
            || trimmed.starts_with("Fatal errors while parsing")
            || trimmed.starts_with("Encountered \"")
        {
            diagnostics.push(Diagnostic {
                category: DiagnosticCategory::Syntactic,
                message: trimmed.to_string(),
                line: first_line_number(trimmed),
            });
            in_semantic_block = false;
            continue;
        }
        let name_problem = trimmed.contains("Could not find declaration or definition")
            || trimmed.contains("Unknown operator")
            || trimmed.contains("is undefined");
        if name_problem || (in_semantic_block && trimmed.starts_with("line ")) {
            diagnostics.push(Diagnostic {
                category: if name_problem {
                    DiagnosticCategory::SemanticName
                } else {
                    DiagnosticCategory::Other
                },
                message: trimmed.to_string(),
                line: first_line_number(trimmed),
            });
        }
    }
    let passed = !diagnostics.iter().any(|d| {
        matches!(
            d.category,
            DiagnosticCategory::Lexical | DiagnosticCategory::Syntactic
        )
    });
    SanyResult {
        passed,
        diagnostics,
        raw: raw.to_string(),
    }
}

/// A violation trace as printed by the model checker: each state is a
/// rendered variable assignment, labeled with the producing action.
pub type RenderedTrace = Vec<(Option<String>, BTreeMap<String, String>)>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTlc {
    pub states_generated: u64,
    pub distinct_states: u64,
    pub search_depth: Option<u32>,
    pub coverage: BTreeMap<String, u64>,
    pub invariant_violations: Vec<String>,
    pub temporal_violation: bool,
    pub deadlock: bool,
    pub runtime_errors: Vec<(Option<String>, String)>,
    pub config_error: Option<String>,
    pub trace: RenderedTrace,
    /// Zero-based index into `trace` where a lasso counterexample loops
    /// back, from a `Back to state N` line.
    pub loop_start: Option<usize>,
    pub completed: bool,
    /// Oddities tolerated during parsing (e.g. duplicated coverage lines).
    pub warnings: Vec<String>,
}

fn parse_leading_u64(s: &str) -> Option<u64> {
    let digits: String = s
        .trim_start()
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok()
}

/// Extracts the action name from a TLC location tag like
/// `<Acquire line 20, col 5 to line 23, col 40 of module spinlock>`.
fn action_in_angle_brackets(s: &str) -> Option<String> {
    let start = s.find('<')?;
    let rest = &s[start + 1..];
    let name: String = rest
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if name.is_empty() || !rest[name.len()..].trim_start().starts_with("line") {
        return None;
    }
    Some(name)
}

pub fn parse_tlc_output(raw: &str) -> ParsedTlc {
    let mut out = ParsedTlc::default();
    let mut lines = raw.lines().peekable();
    let mut current_action: Option<String> = None;
    let mut in_trace = false;
    let mut current_state: Option<(Option<String>, BTreeMap<String, String>)> = None;

    while let Some(line) = lines.next() {
        let t = line.trim();
        if t.starts_with("State ") && t.contains(':') {
            in_trace = true;
            if let Some(s) = current_state.take() {
                out.trace.push(s);
            }
            let label = if t.contains("<Initial predicate>") || t.contains("Initial predicate") {
                None
            } else {
                action_in_angle_brackets(t)
            };
            current_state = Some((label, BTreeMap::new()));
            continue;
        }
        if let Some(rest) = t.strip_prefix("Back to state ") {
            if let Some(n) = parse_leading_u64(rest) {
                out.loop_start = Some((n as usize).saturating_sub(1));
            }
            if let Some(s) = current_state.take() {
                out.trace.push(s);
            }
            in_trace = false;
            continue;
        }
        if in_trace {
            if let Some(rest) = t.strip_prefix("/\\ ") {
                if let Some((var, val)) = rest.split_once(" = ") {
                    if let Some(s) = current_state.as_mut() {
                        s.1.insert(var.trim().to_string(), val.trim().to_string());
                    }
                    continue;
                }
            }
            if !t.is_empty() {
                if let Some(s) = current_state.take() {
                    out.trace.push(s);
                }
                in_trace = false;
            }
        }
        if let Some(rest) = t.strip_prefix("Error: Invariant ") {
            if let Some(name) = rest.strip_suffix(" is violated.") {
                out.invariant_violations.push(name.to_string());
            }
            continue;
        }
        if t.starts_with("Error: Temporal properties were violated") {
            out.temporal_violation = true;
            continue;
        }
        if t.starts_with("Error: Deadlock reached") {
            out.deadlock = true;
            continue;
        }
        if t.starts_with("Error: TLC found an error in the configuration")
            || t.contains("is not assigned a value by the configuration")
            || t.contains("was not found in the configuration")
        {
            out.config_error = Some(t.to_string());
            continue;
        }
        if t.starts_with("Error: The error occurred when TLC was evaluating") {
            current_action = action_in_angle_brackets(t).or(current_action);
            continue;
        }
        if t.starts_with("at <") {
            // Continuation line of an evaluation-context report.
            current_action = action_in_angle_brackets(t).or(current_action);
            continue;
        }
        if t.contains("of module") && t.starts_with('<') {
            // Coverage line: `<Name line .. of module ..>: d:t`.
            if let Some((tag, counts)) = t.rsplit_once(": ") {
                if let Some(name) = action_in_angle_brackets(tag) {
                    let total = counts
                        .rsplit(':')
                        .next()
                        .and_then(parse_leading_u64)
                        .unwrap_or(0);
                    if out.coverage.contains_key(&name) {
                        out.warnings
                            .push(format!("coverage for {name} reported more than once; counts summed"));
                    }
                    *out.coverage.entry(name).or_insert(0) += total;
                }
            }
            continue;
        }
        if t.starts_with("Error:") {
            let msg = t.trim_start_matches("Error:").trim().to_string();
            let action = action_in_angle_brackets(t).or_else(|| current_action.clone());
            let is_runtime = msg.contains("In evaluation")
                || msg.contains("identifier")
                || msg.contains("undefined")
                || msg.contains("not completely specified")
                || msg.contains("exception")
                || msg.contains("applied")
                || msg.contains("CHOOSE");
            if is_runtime {
                out.runtime_errors.push((action, msg));
            }
            continue;
        }
        if t.contains("states generated") && t.contains("distinct states found") {
            if let Some(n) = parse_leading_u64(t) {
                out.states_generated = n;
            }
            if let Some((_, rest)) = t.split_once("states generated,") {
                if let Some(d) = parse_leading_u64(rest) {
                    out.distinct_states = d;
                }
            }
            continue;
        }
        if let Some(rest) = t.strip_prefix("The depth of the complete state space search is ") {
            out.search_depth = parse_leading_u64(rest).map(|d| d as u32);
            continue;
        }
        if t.starts_with("Model checking completed")
            || t.starts_with("Finished in ")
            || t.contains("No error has been found")
        {
            out.completed = true;
        }
    }
    if let Some(s) = current_state.take() {
        out.trace.push(s);
    }
    out
}

/// Reads the module name out of a TLA+ source header without parsing
/// the whole file; works even when the body is malformed.
pub fn module_name_of(src: &str) -> Option<String> {
    for line in src.lines() {
        if let Some(ix) = line.find("MODULE") {
            let rest = line[ix + "MODULE".len()..].trim_start();
            let name: String = rest
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                .collect();
            if !name.is_empty() {
                return Some(name);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sany_classifies_error_categories() {
        let raw = "Parsing file /tmp/spinlock.tla\n\
            Lexical error at line 9, column 14. Unexpected character.\n";
        let r = parse_sany_output(raw);
        assert!(!r.passed);
        assert_eq!(r.diagnostics[0].category, DiagnosticCategory::Lexical);
        assert_eq!(r.diagnostics[0].line, Some(9));

        let raw = "***Parse Error***\nEncountered \"==\" at line 12, column 3\n";
        let r = parse_sany_output(raw);
        assert!(!r.passed);
        assert!(r
            .diagnostics
            .iter()
            .all(|d| d.category == DiagnosticCategory::Syntactic));

        let raw = "Semantic errors:\n\
            line 14, col 8 to line 14, col 15 of module spinlock\n\
            Could not find declaration or definition of symbol ThreadAt.\n";
        let r = parse_sany_output(raw);
        // Name resolution problems do not fail the parse stage.
        assert!(r.passed);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| d.category == DiagnosticCategory::SemanticName));
    }

    #[test]
    fn tlc_statistics_and_violations() {
        let raw = "TLC2 Version 2.18\n\
            Error: Invariant MutualExclusion is violated.\n\
            The behavior up to this point is:\n\
            State 1: <Initial predicate>\n\
            /\\ lock_state = \"unlocked\"\n\
            /\\ thread_state = (\"t1\" :> \"idle\" @@ \"t2\" :> \"idle\")\n\
            State 2: <Acquire line 20, col 5 to line 23, col 40 of module spinlock>\n\
            /\\ lock_state = \"locked\"\n\
            /\\ thread_state = (\"t1\" :> \"in_cs\" @@ \"t2\" :> \"idle\")\n\
            \n\
            140 states generated, 52 distinct states found, 0 states left on queue.\n\
            The depth of the complete state space search is 7.\n";
        let p = parse_tlc_output(raw);
        assert_eq!(p.invariant_violations, vec!["MutualExclusion"]);
        assert_eq!(p.states_generated, 140);
        assert_eq!(p.distinct_states, 52);
        assert_eq!(p.search_depth, Some(7));
        assert_eq!(p.trace.len(), 2);
        assert_eq!(p.trace[0].0, None);
        assert_eq!(p.trace[1].0.as_deref(), Some("Acquire"));
        assert_eq!(p.trace[1].1["lock_state"], "\"locked\"");
    }

    #[test]
    fn tlc_coverage_sums_duplicate_actions() {
        let raw = "The coverage statistics at 2026-01-01\n\
            <Acquire line 20, col 5 to line 23, col 40 of module spinlock>: 3:17\n\
            <Acquire line 20, col 5 to line 23, col 40 of module spinlock>: 2:5\n\
            <Unlock line 25, col 5 to line 28, col 40 of module spinlock>: 4:9\n";
        let p = parse_tlc_output(raw);
        assert_eq!(p.coverage["Acquire"], 22);
        assert_eq!(p.coverage["Unlock"], 9);
        assert_eq!(p.warnings.len(), 1);
        assert!(p.warnings[0].contains("Acquire"));
    }

    #[test]
    fn tlc_runtime_error_attribution() {
        let raw = "Error: The error occurred when TLC was evaluating the nested expression\n\
            at <BadGuard line 31, col 5 to line 33, col 22 of module spinlock>\n\
            Error: In evaluation, the identifier thread_state' is either undefined or not an operator.\n";
        let p = parse_tlc_output(raw);
        assert_eq!(p.runtime_errors.len(), 1);
        assert_eq!(p.runtime_errors[0].0.as_deref(), Some("BadGuard"));
    }

    #[test]
    fn module_name_extraction_tolerates_broken_bodies() {
        assert_eq!(
            module_name_of("---- MODULE spin_lock9 ----\ngarbage (((\n").as_deref(),
            Some("spin_lock9")
        );
        assert_eq!(module_name_of("no header"), None);
    }
}
