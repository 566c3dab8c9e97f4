//! The bundled spinlock artifact, embedded at compile time.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::conformance::trace::{parse_jsonl, TraceRecord};

pub const GOLD_MODEL: &str = include_str!("fixtures/spinlock.tla");
pub const GOLD_CONFIG: &str = include_str!("fixtures/spinlock.cfg");
pub const TASK_DOCUMENT: &str = include_str!("fixtures/task.toml");
pub const INVARIANT_TEMPLATES: &str = include_str!("fixtures/invariants.tmpl");
pub const IMPLEMENTATION: &str = include_str!("fixtures/spinlock_impl.rs.txt");

/// Simulator parameters that produced the bundled traces.
pub const TRACE_THREADS: u32 = 2;
pub const TRACE_STEPS: u32 = 40;

/// Bundled traces: (trace id, JSONL text), seeds 1 through 10.
pub const TRACES: [(&str, &str); 10] = [
    ("trace_s01", include_str!("fixtures/traces/trace_s01.jsonl")),
    ("trace_s02", include_str!("fixtures/traces/trace_s02.jsonl")),
    ("trace_s03", include_str!("fixtures/traces/trace_s03.jsonl")),
    ("trace_s04", include_str!("fixtures/traces/trace_s04.jsonl")),
    ("trace_s05", include_str!("fixtures/traces/trace_s05.jsonl")),
    ("trace_s06", include_str!("fixtures/traces/trace_s06.jsonl")),
    ("trace_s07", include_str!("fixtures/traces/trace_s07.jsonl")),
    ("trace_s08", include_str!("fixtures/traces/trace_s08.jsonl")),
    ("trace_s09", include_str!("fixtures/traces/trace_s09.jsonl")),
    ("trace_s10", include_str!("fixtures/traces/trace_s10.jsonl")),
];

/// Parses all bundled traces.
pub fn gold_traces() -> Vec<TraceRecord> {
    TRACES
        .iter()
        .map(|(id, text)| parse_jsonl(text, id).expect("bundled trace is well-formed"))
        .collect()
}

/// The gold model with the compare-exchange guard deleted from the
/// Acquire action: the canonical seeded defect. The resulting model
/// permits two holders, violating MutualExclusion. The pattern is
/// anchored on Acquire's first conjunct because Init carries a
/// textually identical lock_state line.
pub fn guard_deleted_model() -> String {
    let guarded =
        "    /\\ thread_state[t] = \"spinning\"\n    /\\ lock_state = \"unlocked\"\n";
    let unguarded = "    /\\ thread_state[t] = \"spinning\"\n";
    assert!(GOLD_MODEL.contains(guarded), "gold model lost its guard line");
    GOLD_MODEL.replacen(guarded, unguarded, 1)
}

/// Writes the bundle to `dir` in the layout the task document expects:
/// the task file, implementation, templates, gold model and config, and
/// a `traces/` directory. Returns the task document path.
pub fn materialize(dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(dir.join("traces"))?;
    fs::write(dir.join("spinlock.tla"), GOLD_MODEL)?;
    fs::write(dir.join("spinlock.cfg"), GOLD_CONFIG)?;
    fs::write(dir.join("spinlock_impl.rs.txt"), IMPLEMENTATION)?;
    fs::write(dir.join("invariants.tmpl"), INVARIANT_TEMPLATES)?;
    let task_path = dir.join("task.toml");
    fs::write(&task_path, TASK_DOCUMENT)?;
    for (id, text) in TRACES {
        fs::write(dir.join("traces").join(format!("{id}.jsonl")), text)?;
    }
    Ok(task_path)
}
