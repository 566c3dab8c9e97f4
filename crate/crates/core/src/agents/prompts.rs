//! Prompt templates.
//!
//! Templates live as plain text files next to this module and are
//! embedded at compile time. Placeholders come in two spellings,
//! brace-style (`{source_code}`) and dollar-style (`$tla_spec`);
//! [`instantiate`] fills both in a single pass so substituted content
//! is never rescanned for further placeholders.

/// Generates a TLA+ model from source code. Placeholders:
/// `{system_name}`, `{file_path}`, `{source_code}`, `{granularity}`,
/// `{module_name}`.
pub const MODEL_GENERATION: &str = include_str!("prompts/model_generation.txt");

/// Generates a TLC configuration from a model. Placeholders:
/// `{system_name}`, `$tla_spec`.
pub const CONFIG_GENERATION: &str = include_str!("prompts/config_generation.txt");

/// Repairs a model using checker feedback. Placeholders:
/// `{system_name}`, `{module_name}`, `{current_model}`,
/// `{current_tlc_cfg}`, `{syntax_errors}`, `{runtime_errors}`,
/// `{attempt_number}`, `{max_attempts}`.
pub const REFINEMENT: &str = include_str!("prompts/refinement.txt");

/// Maps implementation names onto model names. Placeholders:
/// `{system_overview}`, `{TLA_SPEC_CODE_PLACEHOLDER}`,
/// `{IMPLEMENTATION_CODE_PLACEHOLDER}`.
pub const MAPPING: &str = include_str!("prompts/mapping.txt");

/// Concretizes invariant templates against a model. Placeholders:
/// `{system_name}`, `$tla_model`, `$invariant_templates`.
pub const INVARIANT_CONCRETIZATION: &str =
    include_str!("prompts/invariant_concretization.txt");

/// Extracts model structure as YAML. Placeholder: `{source_code}`.
pub const EXTRACTION: &str = include_str!("prompts/extraction.txt");

/// Fills named placeholders. Each field name matches both `{name}` and
/// `$name`. Substitution is single-pass and position-ordered: values
/// are copied verbatim, never re-scanned, and at equal positions the
/// longer placeholder wins.
pub fn instantiate(template: &str, fields: &[(&str, &str)]) -> String {
    let patterns: Vec<(String, &str)> = fields
        .iter()
        .flat_map(|(k, v)| [(format!("{{{k}}}"), *v), (format!("${k}"), *v)])
        .collect();
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while !rest.is_empty() {
        let mut best: Option<(usize, usize, &str)> = None;
        for (pat, value) in &patterns {
            if let Some(pos) = rest.find(pat.as_str()) {
                let better = match best {
                    None => true,
                    Some((bpos, blen, _)) => pos < bpos || (pos == bpos && pat.len() > blen),
                };
                if better {
                    best = Some((pos, pat.len(), value));
                }
            }
        }
        match best {
            Some((pos, len, value)) => {
                out.push_str(&rest[..pos]);
                out.push_str(value);
                rest = &rest[pos + len..];
            }
            None => {
                out.push_str(rest);
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_brace_and_dollar_forms() {
        let t = "code: {source_code}; spec: $tla_spec; brace stays {";
        let out = instantiate(t, &[("source_code", "X"), ("tla_spec", "Y")]);
        assert_eq!(out, "code: X; spec: Y; brace stays {");
    }

    #[test]
    fn substituted_values_are_not_rescanned() {
        let t = "{a} and {b}";
        let out = instantiate(t, &[("a", "{b}"), ("b", "two")]);
        assert_eq!(out, "{b} and two");
    }

    #[test]
    fn templates_carry_their_placeholders() {
        assert!(MODEL_GENERATION.contains("{file_path}"));
        assert!(MODEL_GENERATION.contains("{source_code}"));
        assert!(MODEL_GENERATION.contains("DO NOT define invariants"));
        assert!(CONFIG_GENERATION.contains("$tla_spec"));
        assert!(CONFIG_GENERATION.contains("SPECIFICATION"));
        assert!(REFINEMENT.contains("{current_model}"));
        assert!(REFINEMENT.contains("{current_tlc_cfg}"));
        assert!(REFINEMENT.contains("{syntax_errors}"));
        assert!(REFINEMENT.contains("{runtime_errors}"));
        assert!(REFINEMENT.contains("attempt {attempt_number} of {max_attempts}"));
        assert!(MAPPING.contains("{TLA_SPEC_CODE_PLACEHOLDER}"));
        assert!(MAPPING.contains("{IMPLEMENTATION_CODE_PLACEHOLDER}"));
        assert!(INVARIANT_CONCRETIZATION.contains("$tla_model"));
        assert!(INVARIANT_CONCRETIZATION.contains("$invariant_templates"));
        assert!(EXTRACTION.contains("{source_code}"));
        assert!(EXTRACTION.contains("Return ONLY the YAML content"));
    }
}
