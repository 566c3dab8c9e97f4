//! Trace compaction for prompt embedding.
//!
//! Events are flattened into a tab-separated table: one header row, one
//! row per event, cells rendered as JSON. Repeated string values are
//! replaced by short uppercase codes listed in a legend, so the table
//! stays lossless: expanding rows via header plus legend reconstructs
//! every retained event exactly. When the rendering exceeds the
//! character budget, whole traces are dropped by seeded random sampling
//! first, then events within the last remaining trace.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::trace::{TraceEvent, TraceRecord};

#[derive(Debug, Error)]
pub enum CompactError {
    #[error("no events to compact")]
    Empty,
    #[error("a single event exceeds the budget of {budget} characters")]
    BudgetImpossible { budget: usize },
    #[error("row {row} is malformed: {reason}")]
    Malformed { row: usize, reason: String },
}

/// A flattened, abbreviated trace table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactTrace {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Code to full string value; injective by construction.
    pub abbreviation_map: BTreeMap<String, String>,
}

/// One reconstructed row: the trace it came from (absent when the
/// table held a single trace) and the event itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedRow {
    pub trace: Option<String>,
    pub event: TraceEvent,
}

const COL_ORDINAL: &str = "#";
const COL_TRACE: &str = "trace";
const COL_NAME: &str = "name";
const COL_NID: &str = "nid";
const COL_ROLE: &str = "role";
const STATE_PREFIX: &str = "state.";
const EXTRA_ESCAPE: &str = "x.";

fn extras_column(key: &str) -> String {
    let reserved = matches!(key, COL_ORDINAL | COL_TRACE | COL_NAME | COL_NID | COL_ROLE);
    if reserved || key.starts_with(STATE_PREFIX) || key.starts_with(EXTRA_ESCAPE) {
        format!("{EXTRA_ESCAPE}{key}")
    } else {
        key.to_string()
    }
}

/// The canonical one-line-per-event JSON rendering, used as the
/// baseline when measuring compaction.
pub fn raw_chars(records: &[&TraceRecord]) -> usize {
    records
        .iter()
        .flat_map(|r| r.events.iter())
        .map(|e| event_json(e).to_string().len() + 1)
        .sum()
}

fn event_json(e: &TraceEvent) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("name".into(), serde_json::Value::String(e.name.clone()));
    map.insert("nid".into(), serde_json::Value::String(e.node.clone()));
    if let Some(role) = &e.role {
        map.insert("role".into(), serde_json::Value::String(role.clone()));
    }
    if !e.state.is_empty() {
        let state: serde_json::Map<String, serde_json::Value> =
            e.state.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        map.insert("state".into(), serde_json::Value::Object(state));
    }
    for (k, v) in &e.extras {
        map.insert(k.clone(), v.clone());
    }
    serde_json::Value::Object(map)
}

/// Uppercase initials of a value's words: camelCase boundaries,
/// underscores, hyphens, and spaces all split. `AcquireSuccess` becomes
/// `AS`, `in_cs` becomes `IC`.
fn initials(value: &str) -> String {
    let mut code = String::new();
    let mut word_start = true;
    for ch in value.chars() {
        if ch == '_' || ch == '-' || ch == ' ' || ch == '.' {
            word_start = true;
        } else if word_start || ch.is_uppercase() {
            code.extend(ch.to_uppercase());
            word_start = false;
        }
    }
    if code.is_empty() {
        code.push('V');
    }
    code
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    legend: BTreeMap<String, String>,
}

/// Cell values before abbreviation: either a raw ordinal, a string that
/// may be abbreviated, or an opaque JSON rendering.
#[derive(Clone)]
enum Cell {
    Absent,
    Ordinal(u64),
    Text(String),
    Json(String),
}

fn flatten(records: &[(&str, &TraceEvent)], multi: bool) -> Table {
    let mut header: Vec<String> = vec![COL_ORDINAL.to_string()];
    if multi {
        header.push(COL_TRACE.to_string());
    }
    header.push(COL_NAME.to_string());
    header.push(COL_NID.to_string());
    if records.iter().any(|(_, e)| e.role.is_some()) {
        header.push(COL_ROLE.to_string());
    }
    for (_, e) in records {
        for k in e.state.keys() {
            let col = format!("{STATE_PREFIX}{k}");
            if !header.contains(&col) {
                header.push(col);
            }
        }
    }
    for (_, e) in records {
        for k in e.extras.keys() {
            let col = extras_column(k);
            if !header.contains(&col) {
                header.push(col);
            }
        }
    }

    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(records.len());
    for (trace, e) in records {
        let mut row = Vec::with_capacity(header.len());
        for col in &header {
            let cell = match col.as_str() {
                COL_ORDINAL => Cell::Ordinal(e.ordinal),
                COL_TRACE => Cell::Text(trace.to_string()),
                COL_NAME => Cell::Text(e.name.clone()),
                COL_NID => Cell::Text(e.node.clone()),
                COL_ROLE => match &e.role {
                    Some(r) => Cell::Text(r.clone()),
                    None => Cell::Absent,
                },
                other => {
                    let value = if let Some(key) = other.strip_prefix(EXTRA_ESCAPE) {
                        e.extras.get(key)
                    } else if let Some(key) = other.strip_prefix(STATE_PREFIX) {
                        e.state.get(key)
                    } else {
                        e.extras.get(other)
                    };
                    match value {
                        None => Cell::Absent,
                        Some(serde_json::Value::String(s)) => Cell::Text(s.clone()),
                        Some(v) => Cell::Json(v.to_string()),
                    }
                }
            };
            row.push(cell);
        }
        cells.push(row);
    }

    // Count string values; abbreviate those that repeat and whose code
    // is shorter than the quoted rendering.
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for row in &cells {
        for cell in row {
            if let Cell::Text(s) = cell {
                *counts.entry(s.as_str()).or_default() += 1;
            }
        }
    }
    let mut by_value: BTreeMap<String, String> = BTreeMap::new();
    let mut taken: BTreeMap<String, String> = BTreeMap::new();
    for (value, count) in &counts {
        if *count < 2 || value.len() < 4 {
            continue;
        }
        let base = initials(value);
        let mut code = base.clone();
        let mut n = 2;
        while taken.contains_key(&code) {
            code = format!("{base}{n}");
            n += 1;
        }
        if code.len() < value.len() + 2 {
            taken.insert(code.clone(), value.to_string());
            by_value.insert(value.to_string(), code);
        }
    }

    let rows = cells
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|cell| match cell {
                    Cell::Absent => String::new(),
                    Cell::Ordinal(n) => n.to_string(),
                    Cell::Json(j) => j,
                    Cell::Text(s) => match by_value.get(&s) {
                        Some(code) => code.clone(),
                        None => serde_json::Value::String(s).to_string(),
                    },
                })
                .collect()
        })
        .collect();
    Table { header, rows, legend: taken }
}

impl CompactTrace {
    /// Text form for prompt embedding: legend lines, blank line, then
    /// the tab-separated table. This is the string the character budget
    /// is measured against.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (code, value) in &self.abbreviation_map {
            out.push_str(code);
            out.push('=');
            out.push_str(value);
            out.push('\n');
        }
        if !self.abbreviation_map.is_empty() {
            out.push('\n');
        }
        out.push_str(&self.header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Reconstructs the retained events exactly. Inverse of compaction
    /// for every row that survived sampling.
    pub fn expand(&self) -> Result<Vec<ExpandedRow>, CompactError> {
        let mut out = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(CompactError::Malformed {
                    row: i,
                    reason: format!(
                        "arity {} does not match header arity {}",
                        row.len(),
                        self.header.len()
                    ),
                });
            }
            let mut trace = None;
            let mut name = None;
            let mut node = None;
            let mut role = None;
            let mut ordinal = 0u64;
            let mut state = BTreeMap::new();
            let mut extras = BTreeMap::new();
            for (col, cell) in self.header.iter().zip(row) {
                if cell.is_empty() {
                    continue;
                }
                let value = self.decode_cell(cell, i)?;
                match col.as_str() {
                    COL_ORDINAL => {
                        ordinal = value.as_u64().ok_or_else(|| CompactError::Malformed {
                            row: i,
                            reason: format!("ordinal cell {cell:?} is not an integer"),
                        })?;
                    }
                    COL_TRACE => trace = value.as_str().map(String::from),
                    COL_NAME => name = value.as_str().map(String::from),
                    COL_NID => node = value.as_str().map(String::from),
                    COL_ROLE => role = value.as_str().map(String::from),
                    other => {
                        if let Some(key) = other.strip_prefix(EXTRA_ESCAPE) {
                            extras.insert(key.to_string(), value);
                        } else if let Some(key) = other.strip_prefix(STATE_PREFIX) {
                            state.insert(key.to_string(), value);
                        } else {
                            extras.insert(other.to_string(), value);
                        }
                    }
                }
            }
            let name = name.ok_or_else(|| CompactError::Malformed {
                row: i,
                reason: "missing event name".into(),
            })?;
            let node = node.ok_or_else(|| CompactError::Malformed {
                row: i,
                reason: "missing node id".into(),
            })?;
            out.push(ExpandedRow {
                trace,
                event: TraceEvent { name, node, role, state, ordinal, extras },
            });
        }
        Ok(out)
    }

    fn decode_cell(&self, cell: &str, row: usize) -> Result<serde_json::Value, CompactError> {
        if let Some(full) = self.abbreviation_map.get(cell) {
            return Ok(serde_json::Value::String(full.clone()));
        }
        serde_json::from_str(cell).map_err(|e| CompactError::Malformed {
            row,
            reason: format!("cell {cell:?}: {e}"),
        })
    }
}

/// Compacts a set of traces into one table under `char_budget`
/// characters of rendered text. Over budget, whole traces are removed
/// by seeded random sampling; once a single trace remains, its events
/// are sampled the same way. A single retained event that still busts
/// the budget is impossible to fit.
pub fn compact_traces(
    records: &[&TraceRecord],
    char_budget: usize,
    seed: u64,
) -> Result<CompactTrace, CompactError> {
    if records.iter().all(|r| r.events.is_empty()) {
        return Err(CompactError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let multi = records.len() > 1;

    let mut trace_order: Vec<usize> = (0..records.len()).collect();
    trace_order.shuffle(&mut rng);
    let mut kept_traces: Vec<usize> = (0..records.len()).collect();
    let mut drop_cursor = 0;

    loop {
        let pairs: Vec<(&str, &TraceEvent)> = kept_traces
            .iter()
            .flat_map(|&i| {
                records[i]
                    .events
                    .iter()
                    .map(move |e| (records[i].trace_id.as_str(), e))
            })
            .collect();
        let table = flatten(&pairs, multi);
        let compact = CompactTrace {
            header: table.header,
            rows: table.rows,
            abbreviation_map: table.legend,
        };
        if compact.render().len() <= char_budget {
            return Ok(compact);
        }
        if kept_traces.len() > 1 {
            let victim = trace_order[drop_cursor];
            drop_cursor += 1;
            kept_traces.retain(|&i| i != victim);
            continue;
        }
        // One trace left: sample its events.
        let record = records[kept_traces[0]];
        return compact_events(record, multi, char_budget, &mut rng);
    }
}

/// Compacts a single trace, sampling events when over budget.
pub fn compact_trace(
    record: &TraceRecord,
    char_budget: usize,
    seed: u64,
) -> Result<CompactTrace, CompactError> {
    compact_traces(&[record], char_budget, seed)
}

fn compact_events(
    record: &TraceRecord,
    multi: bool,
    char_budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CompactTrace, CompactError> {
    let mut drop_order: Vec<usize> = (0..record.events.len()).collect();
    drop_order.shuffle(rng);
    let mut kept: Vec<bool> = vec![true; record.events.len()];
    let mut drop_cursor = 0;
    loop {
        let pairs: Vec<(&str, &TraceEvent)> = record
            .events
            .iter()
            .enumerate()
            .filter(|(i, _)| kept[*i])
            .map(|(_, e)| (record.trace_id.as_str(), e))
            .collect();
        let table = flatten(&pairs, multi);
        let compact = CompactTrace {
            header: table.header,
            rows: table.rows,
            abbreviation_map: table.legend,
        };
        if compact.render().len() <= char_budget {
            return Ok(compact);
        }
        if pairs.len() <= 1 {
            return Err(CompactError::BudgetImpossible { budget: char_budget });
        }
        kept[drop_order[drop_cursor]] = false;
        drop_cursor += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformance::trace::parse_jsonl;

    fn spin_trace() -> TraceRecord {
        let lines = r#"{"name":"InitState","nid":"0","state":{"lock_state":"unlocked","thread_state":{"1":"idle","2":"idle"}},"step":0}
{"name":"StartLock","nid":"1","state":{"lock_state":"unlocked","thread_state":{"1":"spinning","2":"idle"}},"step":1}
{"name":"AcquireTry","nid":"1","state":{"lock_state":"unlocked","thread_state":{"1":"spinning","2":"idle"}},"step":2}
{"name":"AcquireSuccess","nid":"1","state":{"lock_state":"locked","thread_state":{"1":"holding","2":"idle"}},"step":3}
{"name":"AcquireSuccess","nid":"2","state":{"lock_state":"locked","thread_state":{"1":"idle","2":"holding"}},"step":4}
{"name":"Unlock","nid":"1","state":{"lock_state":"unlocked","thread_state":{"1":"idle","2":"idle"}},"step":5}"#;
        parse_jsonl(lines, "t1").unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let record = spin_trace();
        let compact = compact_trace(&record, usize::MAX, 7).unwrap();
        let expanded = compact.expand().unwrap();
        assert_eq!(expanded.len(), record.events.len());
        for (row, original) in expanded.iter().zip(&record.events) {
            assert_eq!(row.trace, None);
            assert_eq!(&row.event, original);
        }
    }

    #[test]
    fn repeated_values_get_injective_codes() {
        let record = spin_trace();
        let compact = compact_trace(&record, usize::MAX, 7).unwrap();
        // AcquireSuccess repeats and must be abbreviated to initials.
        assert_eq!(
            compact.abbreviation_map.get("AS").map(String::as_str),
            Some("AcquireSuccess")
        );
        let mut values: Vec<&String> = compact.abbreviation_map.values().collect();
        let before = values.len();
        values.sort();
        values.dedup();
        assert_eq!(values.len(), before, "two codes map to the same value");
        // Codes never collide with a JSON rendering: they start with an
        // uppercase letter and carry no quotes.
        for code in compact.abbreviation_map.keys() {
            assert!(code.chars().next().unwrap().is_ascii_uppercase());
            assert!(serde_json::from_str::<serde_json::Value>(code).is_err());
        }
    }

    #[test]
    fn reduction_on_spinlock_trace_is_at_least_forty_percent() {
        let record = spin_trace();
        let baseline = raw_chars(&[&record]);
        let compact = compact_trace(&record, usize::MAX, 7).unwrap();
        let rendered = compact.render().len();
        assert!(
            rendered * 10 <= baseline * 6,
            "rendered {rendered} chars vs baseline {baseline}"
        );
    }

    #[test]
    fn tight_budget_samples_events_deterministically() {
        let record = spin_trace();
        let full = compact_trace(&record, usize::MAX, 3).unwrap();
        let budget = full.render().len() - 1;
        let a = compact_trace(&record, budget, 3).unwrap();
        let b = compact_trace(&record, budget, 3).unwrap();
        assert!(a.rows.len() < record.events.len());
        assert!(!a.rows.is_empty());
        assert!(a.render().len() <= budget);
        assert_eq!(a.rows, b.rows);
        // Retained rows still expand to exact originals.
        for row in a.expand().unwrap() {
            let original = &record.events[(row.event.ordinal - 1) as usize];
            assert_eq!(&row.event, original);
        }
    }

    #[test]
    fn impossible_budget_is_reported() {
        let record = spin_trace();
        assert!(matches!(
            compact_trace(&record, 10, 1),
            Err(CompactError::BudgetImpossible { budget: 10 })
        ));
    }

    #[test]
    fn multi_trace_sampling_drops_whole_traces() {
        let t1 = spin_trace();
        let mut t2 = spin_trace();
        t2.trace_id = "t2".into();
        let full = compact_traces(&[&t1, &t2], usize::MAX, 11).unwrap();
        assert!(full.header.contains(&"trace".to_string()));
        let both = full.render().len();
        let one_only = compact_traces(&[&t1, &t2], both - 1, 11).unwrap();
        let ids: std::collections::BTreeSet<Option<String>> = one_only
            .expand()
            .unwrap()
            .into_iter()
            .map(|r| r.trace)
            .collect();
        assert_eq!(ids.len(), 1, "events from more than one trace survived");
        assert_eq!(one_only.rows.len(), 6);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            compact_traces(&[], 1000, 0),
            Err(CompactError::Empty)
        ));
    }
}
