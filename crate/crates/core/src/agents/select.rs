//! Candidate selection.
//!
//! The winning candidate is the lexicographic maximum over
//! (syntax, runtime, conformance, invariant correctness). A metric
//! behind a closed gate ranks below every attained value, so any
//! measured score beats an unmeasured one. Ties keep the earliest
//! candidate.

use std::cmp::Ordering;

use crate::scoring::Score;

/// Per-candidate metric vector. `None` means the metric's gate never
/// opened for this candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateScores {
    pub syntax: Score,
    pub runtime: Option<Score>,
    pub conformance: Option<Score>,
    pub invariant: Option<Score>,
}

impl CandidateScores {
    fn key(&self) -> (Score, Option<Score>, Option<Score>, Option<Score>) {
        // Option's ordering puts None below any Some, which is exactly
        // the "unmeasured ranks below zero" rule since scores are
        // nonnegative.
        (self.syntax, self.runtime, self.conformance, self.invariant)
    }
}

/// Index of the best-scoring candidate, or `None` for an empty slate.
pub fn select_best(scores: &[CandidateScores]) -> Option<usize> {
    let mut best: Option<(usize, CandidateScores)> = None;
    for (i, s) in scores.iter().enumerate() {
        let beats = match &best {
            None => true,
            Some((_, b)) => s.key().partial_cmp(&b.key()) == Some(Ordering::Greater),
        };
        if beats {
            best = Some((i, *s));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(num: u64, den: u64) -> Score {
        Score::of_counts(num as usize, den as usize)
    }

    #[test]
    fn higher_syntax_wins_before_anything_else() {
        let scores = [
            CandidateScores {
                syntax: s(1, 2),
                runtime: Some(s(1, 1)),
                conformance: Some(s(1, 1)),
                invariant: Some(s(1, 1)),
            },
            CandidateScores {
                syntax: s(1, 1),
                runtime: None,
                conformance: None,
                invariant: None,
            },
        ];
        assert_eq!(select_best(&scores), Some(1));
    }

    #[test]
    fn gated_metric_ranks_below_zero() {
        let scores = [
            CandidateScores {
                syntax: s(1, 1),
                runtime: Some(s(0, 4)),
                conformance: None,
                invariant: None,
            },
            CandidateScores {
                syntax: s(1, 1),
                runtime: None,
                conformance: None,
                invariant: None,
            },
        ];
        // A measured zero beats an unmeasured metric.
        assert_eq!(select_best(&scores), Some(0));
    }

    #[test]
    fn later_metrics_break_earlier_ties() {
        let base = CandidateScores {
            syntax: s(1, 1),
            runtime: Some(s(3, 4)),
            conformance: Some(s(1, 2)),
            invariant: Some(s(2, 5)),
        };
        let better_invariant = CandidateScores {
            invariant: Some(s(3, 5)),
            ..base
        };
        assert_eq!(select_best(&[base, better_invariant]), Some(1));
    }

    #[test]
    fn exact_tie_keeps_earliest() {
        let c = CandidateScores {
            syntax: s(1, 1),
            runtime: Some(s(1, 1)),
            conformance: Some(s(2, 4)),
            invariant: None,
        };
        let same_value_different_counts = CandidateScores {
            conformance: Some(s(1, 2)),
            ..c
        };
        assert_eq!(select_best(&[c, same_value_different_counts, c]), Some(0));
        assert_eq!(select_best(&[]), None);
    }
}
