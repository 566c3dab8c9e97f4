//! End-to-end oracles over the bundled artifact: the gold model
//! satisfies every invariant template, and the canonical seeded defect
//! (deleting the compare-exchange guard) is caught by exactly the
//! MutualExclusion template.

use std::collections::BTreeMap;

use tlabench_core::artifacts::bundle;
use tlabench_core::checker::CheckerConfig;
use tlabench_core::invariants::{
    concretize_deterministic, parse_templates, run_invariant_checks, score_invariants,
    Concretization, InvariantStatus,
};
use tlabench_core::mapping::{model_elements, DEFAULT_SIMILARITY_THRESHOLD};

fn synonyms() -> BTreeMap<String, String> {
    let table = [
        ("InitState", "Init"),
        ("AcquireTry", "Acquire"),
        ("AcquireSuccess", "Acquire"),
        ("pc", "thread_state"),
        ("lock", "lock_state"),
        ("in_cs", "holding"),
    ];
    table
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn concretize_all(model: &str) -> Vec<Concretization> {
    let templates = parse_templates(bundle::INVARIANT_TEMPLATES).unwrap();
    assert_eq!(templates.len(), 5);
    let elements = model_elements(model, bundle::GOLD_CONFIG).unwrap();
    let syn = synonyms();
    templates
        .iter()
        .map(|t| {
            let c = concretize_deterministic(t, &elements, &syn, DEFAULT_SIMILARITY_THRESHOLD);
            assert!(
                matches!(c, Concretization::Ready { .. }),
                "template failed to concretize: {c:?}"
            );
            c
        })
        .collect()
}

#[test]
fn gold_model_satisfies_all_five_templates() {
    let concretizations = concretize_all(bundle::GOLD_MODEL);
    let outcomes = run_invariant_checks(
        bundle::GOLD_MODEL,
        bundle::GOLD_CONFIG,
        &concretizations,
        &CheckerConfig::default(),
    );
    assert_eq!(outcomes.len(), 5);
    for o in &outcomes {
        assert_eq!(
            o.status,
            InvariantStatus::Holds,
            "{} did not hold on the gold model: {:?}",
            o.name,
            o.status
        );
    }
    assert_eq!(score_invariants(&outcomes).to_string(), "100.00%");
}

#[test]
fn guard_deletion_violates_exactly_mutual_exclusion() {
    let mutated = bundle::guard_deleted_model();
    let concretizations = concretize_all(&mutated);
    let outcomes = run_invariant_checks(
        &mutated,
        bundle::GOLD_CONFIG,
        &concretizations,
        &CheckerConfig::default(),
    );
    assert_eq!(outcomes.len(), 5);
    for o in &outcomes {
        match o.name.as_str() {
            "MutualExclusion" => assert!(
                matches!(o.status, InvariantStatus::Violated { .. }),
                "MutualExclusion survived the guard deletion: {:?}",
                o.status
            ),
            _ => assert_eq!(
                o.status,
                InvariantStatus::Holds,
                "{} should still hold: {:?}",
                o.name,
                o.status
            ),
        }
    }
    assert_eq!(score_invariants(&outcomes).to_string(), "80.00%");
}
