//! Execution strategy for fan-out work.
//!
//! Evaluation fans out in several places: per-action syntax checks,
//! per-trace validations, per-template liveness runs, per-candidate
//! scoring. All of them are order-preserving maps over independent
//! items, so one primitive serves them all. The `parallel` feature
//! wires the map through rayon; without it, or when sequential mode is
//! requested, the same work runs on one thread in input order. Results
//! are positionally identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How fan-out work runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Data-parallel on the rayon pool when compiled in; silently
    /// downgrades to sequential otherwise.
    #[default]
    Parallel,
    /// Single-threaded, input order.
    Sequential,
}

/// The mode that will actually run: `Parallel` only when the feature
/// is compiled in.
pub fn effective_mode(requested: ExecMode) -> ExecMode {
    match requested {
        ExecMode::Parallel if cfg!(feature = "parallel") => ExecMode::Parallel,
        _ => ExecMode::Sequential,
    }
}

/// Order-preserving map: `out[i] = f(&items[i])`, with `f` applied in
/// parallel when the mode and feature allow.
pub fn map_ordered<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    match effective_mode(mode) {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..500).collect();
        let f = |x: &u64| x * x + 1;
        let par = map_ordered(ExecMode::Parallel, &items, f);
        let seq = map_ordered(ExecMode::Sequential, &items, f);
        assert_eq!(par, seq);
        assert_eq!(par[3], 10);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_mode_is_effective_when_compiled_in() {
        assert_eq!(effective_mode(ExecMode::Parallel), ExecMode::Parallel);
        assert_eq!(effective_mode(ExecMode::Sequential), ExecMode::Sequential);
    }

    proptest! {
        #[test]
        fn parallel_and_sequential_agree(items in proptest::collection::vec(any::<i64>(), 0..200)) {
            let f = |x: &i64| x.wrapping_mul(31).wrapping_add(7);
            prop_assert_eq!(
                map_ordered(ExecMode::Parallel, &items, f),
                map_ordered(ExecMode::Sequential, &items, f)
            );
        }
    }
}
