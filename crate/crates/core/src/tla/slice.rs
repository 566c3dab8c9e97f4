//! Per-action module synthesis for sliced syntax checking.
//!
//! Each action gets a minimal standalone module: header, the original
//! EXTENDS, the declarations it needs, its dependency closure in source
//! order, and the action definition itself.

use super::actions::ActionDef;
use super::parser::TlaModule;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SliceError {
    #[error("action {action} references undefined names: {missing:?}")]
    ClosureIncomplete { action: String, missing: Vec<String> },
    #[error("action {0} not found in module")]
    UnknownAction(String),
}

/// Operator names provided by the standard modules we accept in EXTENDS.
pub fn std_symbols() -> &'static [&'static str] {
    &[
        // Naturals / Integers
        "Nat", "Int",
        // Sequences
        "Seq", "Len", "Head", "Tail", "Append", "SubSeq", "SelectSeq",
        // FiniteSets
        "Cardinality", "IsFiniteSet",
        // TLC
        "Print", "PrintT", "Assert", "TLCGet", "TLCSet", "ToString",
        // SequencesExt / common community helpers, accepted by name only
        "ToSet", "SetToSeq", "Range", "FoldSeq", "FoldSet",
        // Bags
        "BagToSet", "SetToBag", "EmptyBag",
        // Builtins
        "BOOLEAN", "STRING",
    ]
}

/// Build a standalone module exercising one action.
///
/// The action's definition body must resolve every free name against the
/// module's definitions, declarations, and standard symbols; otherwise the
/// closure is incomplete and the per-action check is scored as failed by the
/// caller. A body that does not parse is emitted as-is so the syntax checker
/// reports it.
pub fn synthesize_action_spec(
    module: &TlaModule,
    action: &ActionDef,
) -> Result<String, SliceError> {
    // Definition text: named actions use their definition; anonymous ones
    // wrap the disjunct statement under the synthetic name.
    let (def_text, root_def) = if action.anonymous {
        (format!("{} == {}", action.name, action.statement), None)
    } else {
        let def = module
            .def(&action.name)
            .ok_or_else(|| SliceError::UnknownAction(action.name.clone()))?;
        (module.def_text(def).to_string(), Some(def))
    };

    let closure = match root_def {
        Some(def) => module.dependency_closure(&def.name),
        None => {
            // Closure of an anonymous statement: every referenced defined name,
            // then their transitive dependencies.
            let mut all = BTreeSet::new();
            for t in action
                .statement
                .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            {
                if module.def(t).is_some() {
                    all.insert(t.to_string());
                    for dep in module.dependency_closure(t) {
                        all.insert(dep);
                    }
                }
            }
            module
                .defs
                .iter()
                .map(|d| d.name.clone())
                .filter(|n| all.contains(n))
                .collect()
        }
    };

    // Resolve free names when the body parses; a parse failure is left to the
    // syntax checker so the action is scored failed with a real diagnostic.
    if let Some(def) = root_def {
        if let Ok(expr) = module.def_expr(def) {
            let mut known: BTreeSet<String> = BTreeSet::new();
            known.extend(module.defs.iter().map(|d| d.name.clone()));
            known.extend(module.constants.iter().cloned());
            known.extend(module.variables.iter().cloned());
            known.extend(std_symbols().iter().map(|s| s.to_string()));
            let missing: Vec<String> = expr
                .free_names(&def.params)
                .into_iter()
                .filter(|n| !known.contains(n))
                .collect();
            if !missing.is_empty() {
                return Err(SliceError::ClosureIncomplete {
                    action: action.name.clone(),
                    missing,
                });
            }
            // The same resolution must hold through the closure.
            for dep in &closure {
                let dep_def = module.def(dep).unwrap();
                if let Ok(dep_expr) = module.def_expr(dep_def) {
                    let missing: Vec<String> = dep_expr
                        .free_names(&dep_def.params)
                        .into_iter()
                        .filter(|n| !known.contains(n))
                        .collect();
                    if !missing.is_empty() {
                        return Err(SliceError::ClosureIncomplete {
                            action: action.name.clone(),
                            missing,
                        });
                    }
                }
            }
        }
    }

    // Declarations used anywhere in the closure or the action itself.
    let mut referenced: BTreeSet<String> = BTreeSet::new();
    if let Some(def) = root_def {
        referenced.extend(module.referenced_names(def));
    } else {
        for t in action
            .statement
            .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        {
            referenced.insert(t.to_string());
        }
    }
    for dep in &closure {
        if let Some(d) = module.def(dep) {
            referenced.extend(module.referenced_names(d));
        }
    }
    let constants: Vec<&String> =
        module.constants.iter().filter(|c| referenced.contains(*c)).collect();
    let variables: Vec<&String> =
        module.variables.iter().filter(|v| referenced.contains(*v)).collect();

    let mut out = String::new();
    out.push_str(&format!("---- MODULE {}_{} ----\n", module.name, action.name));
    if !module.extends.is_empty() {
        out.push_str(&format!("EXTENDS {}\n", module.extends.join(", ")));
    }
    if !constants.is_empty() {
        out.push_str(&format!(
            "CONSTANTS {}\n",
            constants.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ));
    }
    if !variables.is_empty() {
        out.push_str(&format!(
            "VARIABLES {}\n",
            variables.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ));
    }
    out.push('\n');
    for dep in &closure {
        if let Some(d) = module.def(dep) {
            out.push_str(module.def_text(d));
            out.push_str("\n\n");
        }
    }
    out.push_str(&def_text);
    out.push_str("\n====\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tla::actions::decompose_next;
    use crate::tla::parser::parse_module;

    const SRC: &str = r#"---- MODULE lockish ----
EXTENDS Naturals
CONSTANT Threads
VARIABLES lock_state, thread_state

ThreadAt(t, s) == thread_state[t] = s

StartLock(t) ==
    /\ ThreadAt(t, "idle")
    /\ thread_state' = [thread_state EXCEPT ![t] = "spinning"]
    /\ UNCHANGED lock_state

Unlock(t) ==
    /\ ThreadAt(t, "in_cs")
    /\ lock_state' = "unlocked"
    /\ thread_state' = [thread_state EXCEPT ![t] = "idle"]

Next ==
    \/ \E t \in Threads : StartLock(t)
    \/ \E t \in Threads : Unlock(t)
====
"#;

    #[test]
    fn synthesizes_parseable_module() {
        let m = parse_module(SRC).unwrap();
        let set = decompose_next(&m, "Next").unwrap();
        let spec = synthesize_action_spec(&m, &set.actions[0]).unwrap();
        assert!(spec.starts_with("---- MODULE lockish_StartLock ----"));
        assert!(spec.contains("ThreadAt(t, s) =="));
        // StartLock's closure never touches the constant, so it is dropped.
        assert!(!spec.contains("CONSTANTS"));
        // The synthesized module itself parses.
        let sliced = parse_module(&spec).unwrap();
        assert_eq!(sliced.defs.len(), 2);
    }

    #[test]
    fn closure_incomplete_when_helper_deleted() {
        let broken = SRC.replace("ThreadAt(t, s) == thread_state[t] = s\n\n", "");
        let m = parse_module(&broken).unwrap();
        let set = decompose_next(&m, "Next").unwrap();
        match synthesize_action_spec(&m, &set.actions[0]) {
            Err(SliceError::ClosureIncomplete { missing, .. }) => {
                assert_eq!(missing, vec!["ThreadAt"]);
            }
            other => panic!("expected ClosureIncomplete, got {other:?}"),
        }
    }

    #[test]
    fn omits_unused_declarations() {
        let m = parse_module(SRC).unwrap();
        let set = decompose_next(&m, "Next").unwrap();
        let spec = synthesize_action_spec(&m, &set.actions[1]).unwrap();
        // Unlock touches both variables but no constant outside the binder.
        assert!(spec.contains("VARIABLES lock_state, thread_state"));
    }
}
