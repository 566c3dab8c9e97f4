//! State-space exploration: exhaustive breadth-first search and seeded
//! random simulation over the decomposed next-state actions.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checker::eval::{enumerate_action, enumerate_init, eval_state_pred, Evaluator};
use crate::checker::value::{State, Value};
use crate::tla::ast::Expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedAction {
    pub name: String,
    pub statement: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Action that produced this state; `None` for an initial state.
    pub action: Option<String>,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: String,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeFailure {
    /// `None` when the initial predicate itself failed.
    pub action: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub action: usize,
    pub to: usize,
}

/// The labeled reachability graph BFS produces; liveness checking runs
/// on top of it.
#[derive(Debug, Clone, Default)]
pub struct StateGraph {
    pub states: Vec<State>,
    pub init_states: Vec<usize>,
    pub edges: Vec<Vec<(Edge, Vec<Value>)>>,
    /// Predecessor used for counterexample reconstruction.
    pub pred: Vec<Option<(usize, usize)>>,
    pub action_names: Vec<String>,
}

impl StateGraph {
    pub fn trace_to(&self, target: usize) -> Vec<TraceStep> {
        let mut rev = Vec::new();
        let mut cur = target;
        loop {
            match self.pred[cur] {
                Some((parent, action)) => {
                    rev.push(TraceStep {
                        action: Some(self.action_names[action].clone()),
                        state: self.states[cur].clone(),
                    });
                    cur = parent;
                }
                None => {
                    rev.push(TraceStep {
                        action: None,
                        state: self.states[cur].clone(),
                    });
                    break;
                }
            }
        }
        rev.reverse();
        rev
    }
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub max_states: u64,
    pub max_depth: u32,
    pub time_budget: Duration,
    pub check_deadlock: bool,
    /// Stop at the first invariant violation or runtime error, the way
    /// an exhaustive TLC run does. When false, keep going and collect
    /// one violation per invariant.
    pub halt_at_first_error: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_states: 1_000_000,
            max_depth: 50,
            time_budget: Duration::from_secs(300),
            check_deadlock: false,
            halt_at_first_error: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExploreResult {
    pub graph: StateGraph,
    pub states_generated: u64,
    pub distinct_states: u64,
    pub max_depth_reached: u32,
    pub coverage: BTreeMap<String, u64>,
    pub violations: Vec<Violation>,
    pub runtime_failures: Vec<RuntimeFailure>,
    pub deadlock: Option<Vec<TraceStep>>,
    pub complete: bool,
}

pub fn explore(
    ev: &Evaluator,
    init: &Expr,
    actions: &[NamedAction],
    invariants: &[(String, Expr)],
    opts: &ExploreOptions,
) -> ExploreResult {
    let started = Instant::now();
    let mut result = ExploreResult {
        graph: StateGraph {
            action_names: actions.iter().map(|a| a.name.clone()).collect(),
            ..StateGraph::default()
        },
        complete: true,
        ..ExploreResult::default()
    };
    for a in actions {
        result.coverage.insert(a.name.clone(), 0);
    }

    let init_states = match enumerate_init(ev, init) {
        Ok(s) => s,
        Err(e) => {
            result.runtime_failures.push(RuntimeFailure {
                action: None,
                message: e.msg,
            });
            result.complete = false;
            return result;
        }
    };

    let mut index: HashMap<State, usize> = HashMap::new();
    let mut depth_of: Vec<u32> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut violated: Vec<String> = Vec::new();

    let check_state = |result: &mut ExploreResult, graph_idx: usize, state: &State, violated: &mut Vec<String>| -> bool {
        for (name, pred) in invariants {
            if violated.iter().any(|v| v == name) {
                continue;
            }
            match eval_state_pred(ev, pred, state) {
                Ok(true) => {}
                Ok(false) => {
                    violated.push(name.clone());
                    let trace = result.graph.trace_to(graph_idx);
                    result.violations.push(Violation {
                        invariant: name.clone(),
                        trace,
                    });
                    if opts.halt_at_first_error {
                        return false;
                    }
                }
                Err(e) => {
                    result.runtime_failures.push(RuntimeFailure {
                        action: Some(name.clone()),
                        message: e.msg,
                    });
                    if opts.halt_at_first_error {
                        return false;
                    }
                }
            }
        }
        true
    };

    for s in init_states {
        result.states_generated += 1;
        if index.contains_key(&s) {
            continue;
        }
        let idx = result.graph.states.len();
        index.insert(s.clone(), idx);
        result.graph.states.push(s.clone());
        result.graph.edges.push(Vec::new());
        result.graph.pred.push(None);
        result.graph.init_states.push(idx);
        depth_of.push(0);
        queue.push_back(idx);
        if !check_state(&mut result, idx, &s, &mut violated) {
            result.distinct_states = result.graph.states.len() as u64;
            result.complete = false;
            return result;
        }
    }

    let mut expansions = 0u64;
    'bfs: while let Some(cur) = queue.pop_front() {
        expansions += 1;
        if expansions % 256 == 0 && started.elapsed() > opts.time_budget {
            result.complete = false;
            break;
        }
        let depth = depth_of[cur];
        result.max_depth_reached = result.max_depth_reached.max(depth);
        if depth >= opts.max_depth {
            result.complete = false;
            continue;
        }
        let state = result.graph.states[cur].clone();
        let mut any_successor = false;
        for (aidx, action) in actions.iter().enumerate() {
            let succs = match enumerate_action(ev, &action.statement, &state) {
                Ok(s) => s,
                Err(e) => {
                    let failure = RuntimeFailure {
                        action: Some(action.name.clone()),
                        message: e.msg,
                    };
                    if !result.runtime_failures.contains(&failure) {
                        result.runtime_failures.push(failure);
                    }
                    if opts.halt_at_first_error {
                        result.complete = false;
                        break 'bfs;
                    }
                    continue;
                }
            };
            for (binding, next) in succs {
                if let Some(missing) = ev.vars.iter().find(|v| !next.contains_key(*v)) {
                    let failure = RuntimeFailure {
                        action: Some(action.name.clone()),
                        message: format!(
                            "successor state is not completely specified ({missing}' is missing)"
                        ),
                    };
                    if !result.runtime_failures.contains(&failure) {
                        result.runtime_failures.push(failure);
                    }
                    if opts.halt_at_first_error {
                        result.complete = false;
                        break 'bfs;
                    }
                    continue;
                }
                any_successor = true;
                result.states_generated += 1;
                *result.coverage.get_mut(&action.name).unwrap() += 1;
                let next_idx = match index.get(&next) {
                    Some(&i) => i,
                    None => {
                        let idx = result.graph.states.len();
                        index.insert(next.clone(), idx);
                        result.graph.states.push(next.clone());
                        result.graph.edges.push(Vec::new());
                        result.graph.pred.push(Some((cur, aidx)));
                        depth_of.push(depth + 1);
                        queue.push_back(idx);
                        if !check_state(&mut result, idx, &next, &mut violated) {
                            result.distinct_states = result.graph.states.len() as u64;
                            result.complete = false;
                            return result;
                        }
                        if result.graph.states.len() as u64 >= opts.max_states {
                            result.complete = false;
                            result.graph.edges[cur].push((
                                Edge {
                                    action: aidx,
                                    to: idx,
                                },
                                binding,
                            ));
                            break 'bfs;
                        }
                        idx
                    }
                };
                result.graph.edges[cur].push((
                    Edge {
                        action: aidx,
                        to: next_idx,
                    },
                    binding,
                ));
            }
        }
        if !any_successor && opts.check_deadlock && result.deadlock.is_none() {
            result.deadlock = Some(result.graph.trace_to(cur));
            if opts.halt_at_first_error {
                result.complete = false;
                break 'bfs;
            }
        }
    }
    result.distinct_states = result.graph.states.len() as u64;
    result
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub runs: u32,
    pub max_depth: u32,
    pub seed: u64,
    pub check_deadlock: bool,
    pub time_budget: Duration,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            runs: 100,
            max_depth: 50,
            seed: 0,
            check_deadlock: false,
            time_budget: Duration::from_secs(300),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimResult {
    pub runs_attempted: u32,
    /// Runs that finished without a runtime error, invariant violation,
    /// or (when checked) deadlock.
    pub clean_runs: u32,
    pub states_generated: u64,
    pub coverage: BTreeMap<String, u64>,
    pub violations: Vec<Violation>,
    pub runtime_failures: Vec<RuntimeFailure>,
    pub deadlocks: u32,
}

pub fn simulate(
    ev: &Evaluator,
    init: &Expr,
    actions: &[NamedAction],
    invariants: &[(String, Expr)],
    opts: &SimOptions,
) -> SimResult {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut result = SimResult::default();
    for a in actions {
        result.coverage.insert(a.name.clone(), 0);
    }

    let init_states = match enumerate_init(ev, init) {
        Ok(s) if !s.is_empty() => s,
        Ok(_) => {
            result.runtime_failures.push(RuntimeFailure {
                action: None,
                message: "the initial predicate is unsatisfiable".to_string(),
            });
            return result;
        }
        Err(e) => {
            result.runtime_failures.push(RuntimeFailure {
                action: None,
                message: e.msg,
            });
            return result;
        }
    };
    result.states_generated += init_states.len() as u64;

    'runs: for _ in 0..opts.runs {
        if started.elapsed() > opts.time_budget {
            break;
        }
        result.runs_attempted += 1;
        let mut trace = vec![TraceStep {
            action: None,
            state: init_states[rng.gen_range(0..init_states.len())].clone(),
        }];
        let mut clean = true;
        for _ in 0..opts.max_depth {
            let state = &trace.last().unwrap().state;
            for (name, pred) in invariants {
                match eval_state_pred(ev, pred, state) {
                    Ok(true) => {}
                    Ok(false) => {
                        if !result.violations.iter().any(|v| &v.invariant == name) {
                            result.violations.push(Violation {
                                invariant: name.clone(),
                                trace: trace.clone(),
                            });
                        }
                        clean = false;
                    }
                    Err(e) => {
                        result.runtime_failures.push(RuntimeFailure {
                            action: Some(name.clone()),
                            message: e.msg,
                        });
                        clean = false;
                    }
                }
            }
            if !clean {
                continue 'runs;
            }
            let mut choices: Vec<(usize, State)> = Vec::new();
            for (aidx, action) in actions.iter().enumerate() {
                match enumerate_action(ev, &action.statement, state) {
                    Ok(succs) => {
                        for (_, next) in succs {
                            if ev.vars.iter().all(|v| next.contains_key(v)) {
                                choices.push((aidx, next));
                            } else {
                                let failure = RuntimeFailure {
                                    action: Some(action.name.clone()),
                                    message: "successor state is not completely specified"
                                        .to_string(),
                                };
                                if !result.runtime_failures.contains(&failure) {
                                    result.runtime_failures.push(failure);
                                }
                                clean = false;
                            }
                        }
                    }
                    Err(e) => {
                        let failure = RuntimeFailure {
                            action: Some(action.name.clone()),
                            message: e.msg,
                        };
                        if !result.runtime_failures.contains(&failure) {
                            result.runtime_failures.push(failure);
                        }
                        clean = false;
                    }
                }
            }
            if !clean {
                continue 'runs;
            }
            if choices.is_empty() {
                if opts.check_deadlock {
                    result.deadlocks += 1;
                } else {
                    result.clean_runs += 1;
                }
                continue 'runs;
            }
            let (aidx, next) = choices.choose(&mut rng).unwrap().clone();
            *result.coverage.get_mut(&actions[aidx].name).unwrap() += 1;
            result.states_generated += 1;
            trace.push(TraceStep {
                action: Some(actions[aidx].name.clone()),
                state: next,
            });
        }
        if clean {
            result.clean_runs += 1;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::config::parse_tlc_config;
    use crate::tla::parser::parse_module;

    const COUNTER: &str = r#"---- MODULE counter ----
EXTENDS Naturals
VARIABLE x

Init == x = 0

Inc ==
    /\ x < 2
    /\ x' = x + 1

Broken ==
    /\ x = 2
    /\ x' = y + 1

Next == Inc
====
"#;

    fn setup(src: &str) -> Evaluator {
        let m = parse_module(src).unwrap();
        let cfg = parse_tlc_config("").unwrap();
        Evaluator::from_module(&m, cfg.constants).unwrap()
    }

    fn actions(ev: &Evaluator, names: &[&str]) -> Vec<NamedAction> {
        names
            .iter()
            .map(|n| NamedAction {
                name: n.to_string(),
                statement: ev.defs[*n].body.clone(),
            })
            .collect()
    }

    #[test]
    fn exhaustive_search_counts_states_and_coverage() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let r = explore(&ev, &init, &actions(&ev, &["Inc"]), &[], &ExploreOptions::default());
        assert!(r.complete);
        assert_eq!(r.distinct_states, 3);
        assert_eq!(r.coverage["Inc"], 2);
        assert_eq!(r.graph.init_states, vec![0]);
    }

    #[test]
    fn invariant_violation_comes_with_a_trace() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let inv = crate::tla::expr::parse_expr_tokens(&crate::tla::lexer::lex("x <= 1").unwrap())
            .unwrap();
        let r = explore(
            &ev,
            &init,
            &actions(&ev, &["Inc"]),
            &[("Bounded".to_string(), inv)],
            &ExploreOptions::default(),
        );
        assert_eq!(r.violations.len(), 1);
        let v = &r.violations[0];
        assert_eq!(v.invariant, "Bounded");
        assert_eq!(v.trace.len(), 3);
        assert_eq!(v.trace[0].action, None);
        assert_eq!(v.trace[2].action.as_deref(), Some("Inc"));
        assert_eq!(v.trace[2].state["x"], Value::Int(2));
    }

    #[test]
    fn deadlock_is_reported_when_checked() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let mut opts = ExploreOptions::default();
        let quiet = explore(&ev, &init, &actions(&ev, &["Inc"]), &[], &opts);
        assert!(quiet.deadlock.is_none());
        opts.check_deadlock = true;
        let r = explore(&ev, &init, &actions(&ev, &["Inc"]), &[], &opts);
        let dl = r.deadlock.expect("x = 2 is terminal");
        assert_eq!(dl.last().unwrap().state["x"], Value::Int(2));
    }

    #[test]
    fn runtime_errors_are_attributed_to_the_action() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let r = explore(
            &ev,
            &init,
            &actions(&ev, &["Inc", "Broken"]),
            &[],
            &ExploreOptions::default(),
        );
        assert!(r.complete);
        assert_eq!(r.runtime_failures.len(), 1);
        let f = &r.runtime_failures[0];
        assert_eq!(f.action.as_deref(), Some("Broken"));
        assert!(f.message.contains("identifier y is undefined"));
        // The clean action still explored the full space.
        assert_eq!(r.distinct_states, 3);
    }

    #[test]
    fn state_budget_marks_result_incomplete() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let opts = ExploreOptions {
            max_states: 2,
            ..ExploreOptions::default()
        };
        let r = explore(&ev, &init, &actions(&ev, &["Inc"]), &[], &opts);
        assert!(!r.complete);
        assert!(r.distinct_states <= 2);
    }

    #[test]
    fn simulation_is_deterministic_per_seed_and_counts_clean_runs() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let opts = SimOptions {
            runs: 20,
            max_depth: 10,
            seed: 7,
            ..SimOptions::default()
        };
        let a = simulate(&ev, &init, &actions(&ev, &["Inc"]), &[], &opts);
        let b = simulate(&ev, &init, &actions(&ev, &["Inc"]), &[], &opts);
        assert_eq!(a.clean_runs, 20);
        assert_eq!(a.clean_runs, b.clean_runs);
        assert_eq!(a.states_generated, b.states_generated);
        assert!(a.coverage["Inc"] > 0);
    }

    #[test]
    fn simulation_records_failures_without_counting_them_clean() {
        let ev = setup(COUNTER);
        let init = ev.defs["Init"].body.clone();
        let opts = SimOptions {
            runs: 10,
            max_depth: 10,
            seed: 3,
            ..SimOptions::default()
        };
        let r = simulate(&ev, &init, &actions(&ev, &["Inc", "Broken"]), &[], &opts);
        // Every run reaches x = 2 where Broken's body blows up.
        assert_eq!(r.clean_runs, 0);
        assert!(r
            .runtime_failures
            .iter()
            .any(|f| f.action.as_deref() == Some("Broken")));
    }
}
