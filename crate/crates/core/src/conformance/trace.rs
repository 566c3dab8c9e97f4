//! Execution trace ingestion.
//!
//! Two layouts are accepted. A line-delimited JSON file holds one whole
//! trace: every line is an event, in global order, from any node. A
//! per-node directory holds one log file per node; the events carry no
//! global order, so the merge either follows shared ordering metadata
//! (a numeric `step`, `ts`, or `clock` field) or falls back to a
//! deterministic interleaving that preserves each node's local order.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file} line {line}: {reason}")]
    MalformedEvent {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("trace {0} contains no events")]
    EmptyTrace(String),
    #[error("trace directory {0} contains no trace files")]
    NoTraceFiles(PathBuf),
}

/// One observed implementation event.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    /// Instrumentation hook name.
    pub name: String,
    /// Source node id, "" when the log does not say.
    pub node: String,
    /// Role constant reported by the node, if any.
    pub role: Option<String>,
    /// Observed state snapshot after the event.
    pub state: BTreeMap<String, serde_json::Value>,
    /// Position in the merged trace, starting at 1.
    pub ordinal: u64,
    /// Fields beyond the recognized ones, kept verbatim.
    pub extras: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Jsonl,
    PerNodeLogs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub trace_id: String,
    pub source_format: TraceFormat,
    pub events: Vec<TraceEvent>,
    pub node_count: usize,
}

#[derive(Deserialize)]
struct RawEvent {
    name: String,
    #[serde(default)]
    nid: Option<serde_json::Value>,
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    state: BTreeMap<String, serde_json::Value>,
    #[serde(flatten)]
    extras: BTreeMap<String, serde_json::Value>,
}

fn id_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_line(file: &str, lineno: usize, line: &str) -> Result<TraceEvent, TraceError> {
    let raw: RawEvent =
        serde_json::from_str(line).map_err(|e| TraceError::MalformedEvent {
            file: file.to_string(),
            line: lineno,
            reason: e.to_string(),
        })?;
    Ok(TraceEvent {
        name: raw.name,
        node: raw.nid.as_ref().map(id_text).unwrap_or_default(),
        role: raw.role,
        state: raw.state,
        ordinal: 0,
        extras: raw.extras,
    })
}

/// Parses one line-delimited JSON trace held in memory.
pub fn parse_jsonl(text: &str, trace_id: &str) -> Result<TraceRecord, TraceError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut ev = parse_line(trace_id, i + 1, line)?;
        ev.ordinal = events.len() as u64 + 1;
        events.push(ev);
    }
    if events.is_empty() {
        return Err(TraceError::EmptyTrace(trace_id.to_string()));
    }
    let node_count = events
        .iter()
        .map(|e| e.node.as_str())
        .collect::<BTreeSet<&str>>()
        .len();
    Ok(TraceRecord {
        trace_id: trace_id.to_string(),
        source_format: TraceFormat::Jsonl,
        events,
        node_count,
    })
}

/// Loads one `.jsonl`/`.ndjson` trace file.
pub fn load_trace_file(path: &Path) -> Result<TraceRecord, TraceError> {
    let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_jsonl(&text, &id)
}

fn order_key(ev: &TraceEvent) -> Option<u64> {
    for k in ["step", "ts", "clock"] {
        if let Some(v) = ev.extras.get(k).and_then(|v| v.as_u64()) {
            return Some(v);
        }
    }
    None
}

/// Merges per-node logs into one trace.
///
/// Node ids come from the file stems when the events do not carry one.
/// With complete ordering metadata the merge sorts by it (node id
/// breaking ties, per-file position after that); without, the merge
/// interleaves files round-robin, preserving per-node order either way.
pub fn load_per_node_logs(paths: &[PathBuf], trace_id: &str) -> Result<TraceRecord, TraceError> {
    let mut per_node: Vec<(String, Vec<TraceEvent>)> = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io {
            path: path.clone(),
            source: e,
        })?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file_label = path.display().to_string();
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut ev = parse_line(&file_label, i + 1, line)?;
            if ev.node.is_empty() {
                ev.node = stem.clone();
            }
            events.push(ev);
        }
        per_node.push((stem, events));
    }
    per_node.sort_by(|a, b| a.0.cmp(&b.0));

    let all_keyed = per_node
        .iter()
        .flat_map(|(_, evs)| evs.iter())
        .all(|e| order_key(e).is_some());
    let any_events = per_node.iter().any(|(_, evs)| !evs.is_empty());
    if !any_events {
        return Err(TraceError::EmptyTrace(trace_id.to_string()));
    }

    let mut merged: Vec<TraceEvent> = Vec::new();
    if all_keyed {
        let mut keyed: Vec<(u64, String, usize, TraceEvent)> = Vec::new();
        for (node, evs) in per_node.iter() {
            for (i, e) in evs.iter().enumerate() {
                keyed.push((order_key(e).unwrap(), node.clone(), i, e.clone()));
            }
        }
        keyed.sort_by(|a, b| (a.0, &a.1, a.2).cmp(&(b.0, &b.1, b.2)));
        merged.extend(keyed.into_iter().map(|(_, _, _, e)| e));
    } else {
        let mut cursors = vec![0usize; per_node.len()];
        loop {
            let mut took = false;
            for (i, (_, evs)) in per_node.iter().enumerate() {
                if cursors[i] < evs.len() {
                    merged.push(evs[cursors[i]].clone());
                    cursors[i] += 1;
                    took = true;
                }
            }
            if !took {
                break;
            }
        }
    }
    for (i, e) in merged.iter_mut().enumerate() {
        e.ordinal = i as u64 + 1;
    }
    let node_count = merged
        .iter()
        .map(|e| e.node.as_str())
        .collect::<BTreeSet<&str>>()
        .len();
    Ok(TraceRecord {
        trace_id: trace_id.to_string(),
        source_format: TraceFormat::PerNodeLogs,
        events: merged,
        node_count,
    })
}

/// Loads every trace under a directory: `.jsonl`/`.ndjson` files are
/// whole traces, subdirectories are per-node log bundles. Results come
/// back sorted by trace id.
pub fn load_traces(dir: &Path) -> Result<Vec<TraceRecord>, TraceError> {
    let entries = std::fs::read_dir(dir).map_err(|e| TraceError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files = Vec::new();
    let mut subdirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| TraceError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let path = entry.path();
        if path.is_dir() {
            subdirs.push(path);
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("jsonl") | Some("ndjson")
        ) {
            files.push(path);
        }
    }
    files.sort();
    subdirs.sort();

    let mut out = Vec::new();
    for f in &files {
        out.push(load_trace_file(f)?);
    }
    for d in &subdirs {
        let mut logs: Vec<PathBuf> = std::fs::read_dir(d)
            .map_err(|e| TraceError::Io {
                path: d.clone(),
                source: e,
            })?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.is_file()
                    && matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("jsonl") | Some("ndjson") | Some("log")
                    )
            })
            .collect();
        if logs.is_empty() {
            continue;
        }
        logs.sort();
        let id = d
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| d.display().to_string());
        out.push(load_per_node_logs(&logs, &id)?);
    }
    if out.is_empty() {
        return Err(TraceError::NoTraceFiles(dir.to_path_buf()));
    }
    out.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jsonl_trace_with_extras() {
        let text = r#"{"conf": [["1","2","3"],[]], "log": 0, "name": "InitState", "nid": "1", "role": "StateFollower", "state": {"commit": 0, "term": 0, "vote": "0"}}
{"name": "BecomeLeader", "nid": "2", "state": {"term": 1}}
"#;
        let rec = parse_jsonl(text, "raft-1").unwrap();
        assert_eq!(rec.events.len(), 2);
        assert_eq!(rec.node_count, 2);
        let first = &rec.events[0];
        assert_eq!(first.name, "InitState");
        assert_eq!(first.node, "1");
        assert_eq!(first.role.as_deref(), Some("StateFollower"));
        assert_eq!(first.state["term"], serde_json::json!(0));
        assert!(first.extras.contains_key("conf"));
        assert_eq!(first.ordinal, 1);
        assert_eq!(rec.events[1].ordinal, 2);
    }

    #[test]
    fn rejects_malformed_line_with_location() {
        let text = "{\"name\": \"A\", \"state\": {}}\nnot json\n";
        match parse_jsonl(text, "t") {
            Err(TraceError::MalformedEvent { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed event, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_trace() {
        assert!(matches!(
            parse_jsonl("\n\n", "t"),
            Err(TraceError::EmptyTrace(_))
        ));
    }

    #[test]
    fn numeric_nid_becomes_text() {
        let rec = parse_jsonl(r#"{"name": "A", "nid": 7, "state": {}}"#, "t").unwrap();
        assert_eq!(rec.events[0].node, "7");
    }

    #[test]
    fn per_node_merge_follows_step_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(
            d.join("1.jsonl"),
            r#"{"name": "A", "state": {}, "step": 1}
{"name": "C", "state": {}, "step": 3}
"#,
        )
        .unwrap();
        std::fs::write(
            d.join("2.jsonl"),
            r#"{"name": "B", "state": {}, "step": 2}
"#,
        )
        .unwrap();
        let rec = load_per_node_logs(&[d.join("1.jsonl"), d.join("2.jsonl")], "t").unwrap();
        let names: Vec<&str> = rec.events.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["A", "B", "C"]);
        assert_eq!(rec.events[1].node, "2");
        assert_eq!(rec.source_format, TraceFormat::PerNodeLogs);
    }

    #[test]
    fn per_node_merge_without_metadata_preserves_local_order() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(
            d.join("a.jsonl"),
            "{\"name\": \"A1\", \"state\": {}}\n{\"name\": \"A2\", \"state\": {}}\n",
        )
        .unwrap();
        std::fs::write(d.join("b.jsonl"), "{\"name\": \"B1\", \"state\": {}}\n").unwrap();
        let rec = load_per_node_logs(&[d.join("a.jsonl"), d.join("b.jsonl")], "t").unwrap();
        let names: Vec<&str> = rec.events.iter().map(|e| e.name.as_str()).collect();
        let a1 = names.iter().position(|n| *n == "A1").unwrap();
        let a2 = names.iter().position(|n| *n == "A2").unwrap();
        assert!(a1 < a2);
        assert_eq!(rec.events.len(), 3);
    }

    #[test]
    fn directory_loader_handles_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(d.join("solo.jsonl"), "{\"name\": \"X\", \"state\": {}}\n").unwrap();
        std::fs::create_dir(d.join("multi")).unwrap();
        std::fs::write(
            d.join("multi/1.log"),
            "{\"name\": \"Y\", \"state\": {}, \"step\": 1}\n",
        )
        .unwrap();
        let recs = load_traces(d).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].trace_id, "multi");
        assert_eq!(recs[1].trace_id, "solo");
        assert_eq!(recs[0].events[0].node, "1");
    }
}
