//! tlabench-core: evaluation harness for candidate TLA+ models of real
//! systems. Scores candidates on four gated metrics (syntax, runtime,
//! trace conformance, invariant correctness) against instrumented
//! implementations and their execution traces.

pub mod agents;
pub mod artifacts;
pub mod checker;
pub mod conformance;
pub mod exec;
pub mod harness;
pub mod invariants;
pub mod mapping;
pub mod scoring;
pub mod tla;
