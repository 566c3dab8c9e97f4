//! Metric arithmetic and stage gating.
//!
//! Scores are exact rationals so printed table values like 7.69% stay
//! reproducible: 1/13 is stored as 1/13, not as a float that happens to
//! print the same today. Display rounds half-up to two decimals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::checker::{SyntaxResult, TlcResult};

/// An exact fraction in [0, 1], reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Score {
    pub const ZERO: Score = Score { num: 0, den: 1 };
    pub const ONE: Score = Score { num: 1, den: 1 };

    /// A score of `num` out of `den`. Panics when `den` is zero or the
    /// fraction exceeds 1; scores are counts over denominators by
    /// construction.
    pub fn ratio(num: u64, den: u64) -> Score {
        assert!(den > 0, "score denominator must be positive");
        assert!(num <= den, "score {num}/{den} exceeds 1");
        let g = gcd(num, den);
        Score {
            num: num / g,
            den: den / g,
        }
    }

    pub fn of_counts(part: usize, whole: usize) -> Score {
        Score::ratio(part as u64, whole as u64)
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact product, reduced.
    pub fn times(self, other: Score) -> Score {
        let num = self.num as u128 * other.num as u128;
        let den = self.den as u128 * other.den as u128;
        let g = gcd128(num, den);
        Score {
            num: (num / g) as u64,
            den: (den / g) as u64,
        }
    }

    /// Percentage in basis points (two decimals), rounded half-up.
    pub fn basis_points(&self) -> u32 {
        let num = self.num as u128;
        let den = self.den as u128;
        ((num * 20_000 + den) / (2 * den)) as u32
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for Score {
    /// Renders as a percentage with two decimals, e.g. `69.23%`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bp = self.basis_points();
        write!(f, "{}.{:02}%", bp / 100, bp % 100)
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        let left = self.num as u128 * other.den as u128;
        let right = other.num as u128 * self.den as u128;
        left.cmp(&right)
    }
}

// ---------------------------------------------------------------------------
// Stage scores
// ---------------------------------------------------------------------------

/// Syntax metric: a model that passes as a whole earns 100%; otherwise
/// credit is half the fraction of actions whose sliced single-action
/// modules pass on their own.
pub fn score_syntax(overall: &SyntaxResult, per_action: &[SyntaxResult]) -> Score {
    if overall.passed {
        return Score::ONE;
    }
    if per_action.is_empty() {
        return Score::ZERO;
    }
    let passes = per_action.iter().filter(|r| r.passed).count();
    Score::ratio(1, 2).times(Score::of_counts(passes, per_action.len()))
}

/// Everything the runtime metric needs from one or more checker runs.
/// Coverage is unioned across runs; error attribution keeps the first
/// message seen per action, so callers list deterministic (exhaustive)
/// results before randomized ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeEvidence {
    pub covered: BTreeMap<String, u64>,
    pub errored: BTreeMap<String, String>,
    pub init_error: Option<String>,
    /// At least one run finished its full search/run budget without any
    /// error: the gate's "one complete clean behavior" witness.
    pub clean_complete_behavior: bool,
}

impl RuntimeEvidence {
    pub fn from_results<'a>(results: impl IntoIterator<Item = &'a TlcResult>) -> Self {
        let mut ev = RuntimeEvidence::default();
        for r in results {
            for (name, count) in &r.coverage {
                if *count > 0 {
                    *ev.covered.entry(name.clone()).or_insert(0) += count;
                }
            }
            for (action, msg) in &r.runtime_errors {
                match action {
                    Some(a) => {
                        ev.errored.entry(a.clone()).or_insert_with(|| msg.clone());
                    }
                    None => {
                        if ev.init_error.is_none() {
                            ev.init_error = Some(msg.clone());
                        }
                    }
                }
            }
            if r.complete && r.runtime_errors.is_empty() && (r.runs_attempted == 0 || r.clean_runs > 0)
            {
                ev.clean_complete_behavior = true;
            }
        }
        ev
    }
}

/// Runtime metric M_r: fraction of model actions covered by checking
/// with no attributed runtime error. An initial-predicate error means
/// nothing ran, so the score is 0 regardless of the denominator.
pub fn score_runtime(evidence: &RuntimeEvidence, actions: &[String]) -> Score {
    if actions.is_empty() || evidence.init_error.is_some() {
        return Score::ZERO;
    }
    let clean = actions
        .iter()
        .filter(|a| evidence.covered.contains_key(*a) && !evidence.errored.contains_key(*a))
        .count();
    Score::of_counts(clean, actions.len())
}

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Syntax,
    Runtime,
    Conformance,
    Invariant,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Syntax => "syntax",
            Stage::Runtime => "runtime",
            Stage::Conformance => "conformance",
            Stage::Invariant => "invariant",
        })
    }
}

/// Whether a stage is evaluated at all, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageGate {
    pub stage: Stage,
    pub passed: bool,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateThresholds {
    /// Minimum M_r for conformance/invariant checking to proceed.
    pub runtime_threshold: Score,
    /// Additionally require one complete error-free behavior.
    pub require_clean_behavior: bool,
}

impl Default for GateThresholds {
    fn default() -> Self {
        GateThresholds {
            runtime_threshold: Score::ratio(1, 4),
            require_clean_behavior: true,
        }
    }
}

/// Summary of the runtime stage consumed by the gate decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeGateInput {
    pub coverage: Score,
    pub clean_complete_behavior: bool,
}

/// Computes all four stage gates. `runtime` is `None` when the runtime
/// stage never ran (closed syntax gate or hard tool failure).
pub fn decide_gates(
    syntax: Score,
    runtime: Option<&RuntimeGateInput>,
    thresholds: &GateThresholds,
) -> Vec<StageGate> {
    let mut gates = Vec::with_capacity(4);
    gates.push(StageGate {
        stage: Stage::Syntax,
        passed: true,
        reason: "syntax checking always runs".to_string(),
    });

    let syntax_ok = syntax.is_one();
    gates.push(StageGate {
        stage: Stage::Runtime,
        passed: syntax_ok,
        reason: if syntax_ok {
            "syntax score is 100.00%".to_string()
        } else {
            format!("syntax score {syntax} is below 100.00%; the model does not compile")
        },
    });

    let (downstream, reason) = match runtime {
        None if !syntax_ok => (false, "runtime stage was not evaluated".to_string()),
        None => (
            false,
            "runtime stage produced no checker result".to_string(),
        ),
        Some(r) => {
            if thresholds.require_clean_behavior && !r.clean_complete_behavior {
                (
                    false,
                    "no complete error-free behavior was observed".to_string(),
                )
            } else if r.coverage < thresholds.runtime_threshold {
                (
                    false,
                    format!(
                        "action coverage {} is below the gate threshold {}",
                        r.coverage, thresholds.runtime_threshold
                    ),
                )
            } else {
                (
                    true,
                    format!(
                        "action coverage {} meets the gate threshold {}",
                        r.coverage, thresholds.runtime_threshold
                    ),
                )
            }
        }
    };
    for stage in [Stage::Conformance, Stage::Invariant] {
        gates.push(StageGate {
            stage,
            passed: downstream,
            reason: reason.clone(),
        });
    }
    gates
}

// ---------------------------------------------------------------------------
// Metric sets and aggregates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AggregateRates {
    /// M_ar: models passing runtime checking over models generated.
    pub runtime_pass_rate: Option<Score>,
    /// M_ac: traces fully validated over traces checked.
    pub conformance_pass_rate: Option<Score>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub syntax: Score,
    pub runtime: Option<Score>,
    pub conformance: Option<Score>,
    pub invariant: Option<Score>,
    pub aggregates: Option<AggregateRates>,
}

/// Renders an optional metric the way the result tables do: a closed
/// gate shows "-".
pub fn render_metric(metric: Option<Score>) -> String {
    match metric {
        Some(s) => s.to_string(),
        None => "-".to_string(),
    }
}

/// Pooled pass rates over many evaluations; `None` when nothing was
/// evaluated (not-evaluated is distinct from zero).
pub fn aggregate_pass_rates(
    model_runtime_clean: &[bool],
    trace_validated: &[bool],
) -> AggregateRates {
    let rate = |outcomes: &[bool]| {
        if outcomes.is_empty() {
            None
        } else {
            Some(Score::of_counts(
                outcomes.iter().filter(|b| **b).count(),
                outcomes.len(),
            ))
        }
    };
    AggregateRates {
        runtime_pass_rate: rate(model_runtime_clean),
        conformance_pass_rate: rate(trace_validated),
    }
}

/// Per-action syntax verdicts, retained so reports can show which
/// action slices passed.
pub fn per_action_passes(per_action: &[(String, SyntaxResult)]) -> BTreeSet<String> {
    per_action
        .iter()
        .filter(|(_, r)| r.passed)
        .map(|(n, _)| n.clone())
        .collect()
}
