//! Temporal property checking over the explored state graph.
//!
//! A property is refuted by exhibiting a fair behavior that violates
//! it: a finite prefix followed by either a cycle or permanent
//! stuttering, where every declared weak/strong fairness constraint is
//! satisfied along the repeated part. Supported property shapes:
//! optional leading universal quantifiers over constant domains, then
//! []P, <>P, P ~> Q, []<>P, or <>[]P with state-level operands.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::checker::eval::{
    eval_const_expr_with, eval_state_pred_with, EvalError, Evaluator,
};
use crate::checker::explore::{StateGraph, TraceStep};
use crate::checker::value::Value;
use crate::tla::ast::{Expr, QuantKind};

#[derive(Debug, Error)]
pub enum LivenessError {
    #[error("unsupported specification shape: {0}")]
    UnsupportedSpec(String),
    #[error("unsupported property shape: {0}")]
    UnsupportedProperty(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One ground fairness constraint, e.g. `WF_vars(Unlock("t1"))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessInstance {
    pub strong: bool,
    pub action: String,
    pub args: Vec<Value>,
    /// Fairness on the whole next-state relation; matches every edge.
    pub whole_next: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecStructure {
    pub init: String,
    pub next: String,
    pub fairness: Vec<FairnessInstance>,
}

/// Pulls `Init`, `Next`, and the fairness constraints out of a
/// `Spec == Init /\ [][Next]_vars /\ ...` definition.
pub fn extract_spec_structure(
    ev: &Evaluator,
    spec_name: &str,
) -> Result<SpecStructure, LivenessError> {
    let def = ev
        .defs
        .get(spec_name)
        .ok_or_else(|| LivenessError::UnsupportedSpec(format!("{spec_name} is not defined")))?;
    let body = def.body.clone();
    let mut init = None;
    let mut next = None;
    let mut fairness = Vec::new();
    for conj in body.conjuncts() {
        match conj {
            Expr::Ident(n) if ev.defs.contains_key(n) && init.is_none() && next.is_none() => {
                let b = &ev.defs[n].body;
                if b.has_temporal() || b.has_prime() {
                    collect_fairness(ev, conj, &mut Vec::new(), &mut fairness)?;
                } else {
                    init = Some(n.clone());
                }
            }
            Expr::Always(inner) => match inner.as_ref() {
                Expr::BoxAction { action, .. } => match action.as_ref() {
                    Expr::Ident(n) => next = Some(n.clone()),
                    _ => {
                        return Err(LivenessError::UnsupportedSpec(
                            "[][A]_v with a non-name action".to_string(),
                        ))
                    }
                },
                _ => {
                    return Err(LivenessError::UnsupportedSpec(
                        "[]P conjunct in a specification".to_string(),
                    ))
                }
            },
            other => collect_fairness(ev, other, &mut Vec::new(), &mut fairness)?,
        }
    }
    let init = init.ok_or_else(|| {
        LivenessError::UnsupportedSpec("no initial predicate conjunct".to_string())
    })?;
    let next = next.ok_or_else(|| {
        LivenessError::UnsupportedSpec("no [][Next]_vars conjunct".to_string())
    })?;
    for f in &mut fairness {
        if f.action == next {
            f.whole_next = true;
        }
    }
    Ok(SpecStructure {
        init,
        next,
        fairness,
    })
}

fn collect_fairness(
    ev: &Evaluator,
    e: &Expr,
    bindings: &mut Vec<(String, Value)>,
    out: &mut Vec<FairnessInstance>,
) -> Result<(), LivenessError> {
    match e {
        Expr::Binary(crate::tla::ast::BinOp::And, ..) => {
            for c in e.conjuncts() {
                collect_fairness(ev, c, bindings, out)?;
            }
            Ok(())
        }
        Expr::Ident(n) => match ev.defs.get(n) {
            Some(def) if def.params.is_empty() => {
                let body = def.body.clone();
                collect_fairness(ev, &body, bindings, out)
            }
            _ => Err(LivenessError::UnsupportedSpec(format!(
                "unrecognized conjunct {n}"
            ))),
        },
        Expr::Quant {
            kind: QuantKind::Forall,
            binders,
            body,
        } => {
            fn expand(
                ev: &Evaluator,
                binders: &[(String, Vec<Value>)],
                i: usize,
                body: &Expr,
                bindings: &mut Vec<(String, Value)>,
                out: &mut Vec<FairnessInstance>,
            ) -> Result<(), LivenessError> {
                if i == binders.len() {
                    return collect_fairness(ev, body, bindings, out);
                }
                for v in &binders[i].1 {
                    bindings.push((binders[i].0.clone(), v.clone()));
                    expand(ev, binders, i + 1, body, bindings, out)?;
                    bindings.pop();
                }
                Ok(())
            }
            let mut flat = Vec::new();
            for b in binders {
                let dom = eval_const_expr_with(ev, &b.domain, bindings)?;
                let members = dom.domain_members().ok_or_else(|| {
                    LivenessError::UnsupportedSpec("fairness domain is not a set".to_string())
                })?;
                for v in &b.vars {
                    flat.push((v.clone(), members.clone()));
                }
            }
            expand(ev, &flat, 0, body, bindings, out)
        }
        Expr::Fairness {
            strong, action, ..
        } => {
            let (name, args) = match action.as_ref() {
                Expr::Ident(n) => (n.clone(), Vec::new()),
                Expr::Apply(n, arg_exprs) => {
                    let vals = arg_exprs
                        .iter()
                        .map(|a| eval_const_expr_with(ev, a, bindings))
                        .collect::<Result<Vec<_>, _>>()?;
                    (n.clone(), vals)
                }
                _ => {
                    return Err(LivenessError::UnsupportedSpec(
                        "fairness on a non-name action".to_string(),
                    ))
                }
            };
            out.push(FairnessInstance {
                strong: *strong,
                action: name,
                args,
                whole_next: false,
            });
            Ok(())
        }
        _ => Err(LivenessError::UnsupportedSpec(
            "unrecognized specification conjunct".to_string(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalCounterexample {
    pub trace: Vec<TraceStep>,
    /// Index into `trace` where the repeated suffix starts; `None` for
    /// a plain safety refutation.
    pub loop_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemporalVerdict {
    Holds,
    Violated(TemporalCounterexample),
}

enum Shape {
    Always(Expr),
    Eventually(Expr),
    LeadsTo(Expr, Expr),
    AlwaysEventually(Expr),
    EventuallyAlways(Expr),
    InitialState(Expr),
}

fn classify(ev: &Evaluator, e: &Expr) -> Result<Shape, LivenessError> {
    let resolved = resolve_named(ev, e, 0)?;
    let unsupported =
        |what: &str| Err(LivenessError::UnsupportedProperty(what.to_string()));
    match &resolved {
        Expr::Always(p) => match p.as_ref() {
            Expr::Eventually(q) if !q.has_temporal() => Ok(Shape::AlwaysEventually((**q).clone())),
            q if !q.has_temporal() && !q.has_prime() => Ok(Shape::Always((*q).clone())),
            Expr::Binary(crate::tla::ast::BinOp::Implies, a, b) => match b.as_ref() {
                Expr::Eventually(q) if !a.has_temporal() && !q.has_temporal() => {
                    Ok(Shape::LeadsTo((**a).clone(), (**q).clone()))
                }
                _ => unsupported("nested temporal operator under []"),
            },
            _ => unsupported("nested temporal operator under []"),
        },
        Expr::Eventually(p) => match p.as_ref() {
            Expr::Always(q) if !q.has_temporal() => Ok(Shape::EventuallyAlways((**q).clone())),
            q if !q.has_temporal() && !q.has_prime() => Ok(Shape::Eventually((*q).clone())),
            _ => unsupported("nested temporal operator under <>"),
        },
        Expr::LeadsTo(p, q) => {
            if p.has_temporal() || q.has_temporal() {
                return unsupported("temporal operand of ~>");
            }
            Ok(Shape::LeadsTo((**p).clone(), (**q).clone()))
        }
        other if !other.has_temporal() && !other.has_prime() => {
            Ok(Shape::InitialState((*other).clone()))
        }
        _ => unsupported("property shape"),
    }
}

/// Looks through definition names so `PROPERTY Liveness` works when
/// `Liveness == <>P`.
fn resolve_named(ev: &Evaluator, e: &Expr, depth: u32) -> Result<Expr, LivenessError> {
    if depth > 16 {
        return Err(LivenessError::UnsupportedProperty(
            "definition recursion too deep".to_string(),
        ));
    }
    if let Expr::Ident(n) = e {
        if let Some(def) = ev.defs.get(n) {
            if def.params.is_empty() && (def.body.has_temporal()) {
                return resolve_named(ev, &def.body.clone(), depth + 1);
            }
        }
    }
    Ok(e.clone())
}

pub fn check_property(
    ev: &Evaluator,
    graph: &StateGraph,
    fairness: &[FairnessInstance],
    prop: &Expr,
) -> Result<TemporalVerdict, LivenessError> {
    for f in fairness {
        if !f.whole_next && !graph.action_names.iter().any(|n| n == &f.action) {
            return Err(LivenessError::UnsupportedSpec(format!(
                "fairness action {} does not name a next-state disjunct",
                f.action
            )));
        }
    }
    let mut bindings = Vec::new();
    check_bound(ev, graph, fairness, prop, &mut bindings)
}

fn check_bound(
    ev: &Evaluator,
    graph: &StateGraph,
    fairness: &[FairnessInstance],
    prop: &Expr,
    bindings: &mut Vec<(String, Value)>,
) -> Result<TemporalVerdict, LivenessError> {
    // Expand leading universal quantifiers into ground instances.
    let resolved = resolve_named(ev, prop, 0)?;
    if let Expr::Quant {
        kind: QuantKind::Forall,
        binders,
        body,
    } = &resolved
    {
        let mut doms = Vec::new();
        for b in binders {
            let dom = eval_const_expr_with(ev, &b.domain, bindings)?;
            let members = dom.domain_members().ok_or_else(|| {
                LivenessError::UnsupportedProperty("quantifier domain is not a set".to_string())
            })?;
            for v in &b.vars {
                doms.push((v.clone(), members.clone()));
            }
        }
        return expand_forall(ev, graph, fairness, body, bindings, &doms, 0);
    }
    let shape = classify(ev, &resolved)?;
    check_shape(ev, graph, fairness, &shape, bindings)
}

fn expand_forall(
    ev: &Evaluator,
    graph: &StateGraph,
    fairness: &[FairnessInstance],
    body: &Expr,
    bindings: &mut Vec<(String, Value)>,
    doms: &[(String, Vec<Value>)],
    i: usize,
) -> Result<TemporalVerdict, LivenessError> {
    if i == doms.len() {
        return check_bound(ev, graph, fairness, body, bindings);
    }
    for v in &doms[i].1 {
        bindings.push((doms[i].0.clone(), v.clone()));
        let r = expand_forall(ev, graph, fairness, body, bindings, doms, i + 1);
        bindings.pop();
        match r? {
            TemporalVerdict::Holds => {}
            violated => return Ok(violated),
        }
    }
    Ok(TemporalVerdict::Holds)
}

fn pred_mask(
    ev: &Evaluator,
    graph: &StateGraph,
    pred: &Expr,
    bindings: &[(String, Value)],
) -> Result<Vec<bool>, EvalError> {
    graph
        .states
        .iter()
        .map(|s| eval_state_pred_with(ev, pred, s, bindings))
        .collect()
}

fn check_shape(
    ev: &Evaluator,
    graph: &StateGraph,
    fairness: &[FairnessInstance],
    shape: &Shape,
    bindings: &[(String, Value)],
) -> Result<TemporalVerdict, LivenessError> {
    let n = graph.states.len();
    match shape {
        Shape::InitialState(p) => {
            for &i in &graph.init_states {
                if !eval_state_pred_with(ev, p, &graph.states[i], bindings)? {
                    return Ok(TemporalVerdict::Violated(TemporalCounterexample {
                        trace: graph.trace_to(i),
                        loop_index: None,
                    }));
                }
            }
            Ok(TemporalVerdict::Holds)
        }
        Shape::Always(p) => {
            let mask = pred_mask(ev, graph, p, bindings)?;
            for i in 0..n {
                if !mask[i] {
                    return Ok(TemporalVerdict::Violated(TemporalCounterexample {
                        trace: graph.trace_to(i),
                        loop_index: None,
                    }));
                }
            }
            Ok(TemporalVerdict::Holds)
        }
        Shape::Eventually(p) => {
            let p_mask = pred_mask(ev, graph, p, bindings)?;
            let allowed: Vec<bool> = p_mask.iter().map(|b| !b).collect();
            let starts: Vec<usize> = graph
                .init_states
                .iter()
                .copied()
                .filter(|&i| allowed[i])
                .collect();
            match find_fair_suffix(graph, fairness, &allowed, &starts, None) {
                Some(w) => Ok(TemporalVerdict::Violated(witness_trace(
                    graph, &w, /*prefix_anywhere=*/ false,
                ))),
                None => Ok(TemporalVerdict::Holds),
            }
        }
        Shape::LeadsTo(p, q) => {
            let p_mask = pred_mask(ev, graph, p, bindings)?;
            let q_mask = pred_mask(ev, graph, q, bindings)?;
            let allowed: Vec<bool> = q_mask.iter().map(|b| !b).collect();
            let starts: Vec<usize> = (0..n).filter(|&i| p_mask[i] && !q_mask[i]).collect();
            match find_fair_suffix(graph, fairness, &allowed, &starts, None) {
                Some(w) => Ok(TemporalVerdict::Violated(witness_trace(
                    graph, &w, /*prefix_anywhere=*/ true,
                ))),
                None => Ok(TemporalVerdict::Holds),
            }
        }
        Shape::AlwaysEventually(p) => {
            let p_mask = pred_mask(ev, graph, p, bindings)?;
            let allowed: Vec<bool> = p_mask.iter().map(|b| !b).collect();
            let starts: Vec<usize> = (0..n).filter(|&i| allowed[i]).collect();
            match find_fair_suffix(graph, fairness, &allowed, &starts, None) {
                Some(w) => Ok(TemporalVerdict::Violated(witness_trace(
                    graph, &w, /*prefix_anywhere=*/ true,
                ))),
                None => Ok(TemporalVerdict::Holds),
            }
        }
        Shape::EventuallyAlways(p) => {
            let p_mask = pred_mask(ev, graph, p, bindings)?;
            let not_p: Vec<bool> = p_mask.iter().map(|b| !b).collect();
            let allowed = vec![true; n];
            let starts: Vec<usize> = (0..n).collect();
            match find_fair_suffix(graph, fairness, &allowed, &starts, Some(&not_p)) {
                Some(w) => Ok(TemporalVerdict::Violated(witness_trace(
                    graph, &w, /*prefix_anywhere=*/ true,
                ))),
                None => Ok(TemporalVerdict::Holds),
            }
        }
    }
}

/// A fair repeating suffix: the path from `start` runs inside the
/// allowed subgraph; the steps from `loop_offset` onward repeat
/// forever. An empty `cycle` means permanent stuttering at the last
/// path state.
struct FairWitness {
    start: usize,
    /// (action index, state index) steps from start.
    path: Vec<(usize, usize)>,
    /// Steps of the repeated cycle, starting and ending at the path's
    /// last state. Empty for a stuttering witness.
    cycle: Vec<(usize, usize)>,
}

fn witness_trace(graph: &StateGraph, w: &FairWitness, prefix_anywhere: bool) -> TemporalCounterexample {
    let mut trace = if prefix_anywhere {
        graph.trace_to(w.start)
    } else {
        vec![TraceStep {
            action: None,
            state: graph.states[w.start].clone(),
        }]
    };
    for &(a, s) in &w.path {
        trace.push(TraceStep {
            action: Some(graph.action_names[a].clone()),
            state: graph.states[s].clone(),
        });
    }
    let loop_index = trace.len() - 1;
    for &(a, s) in &w.cycle {
        trace.push(TraceStep {
            action: Some(graph.action_names[a].clone()),
            state: graph.states[s].clone(),
        });
    }
    TemporalCounterexample {
        trace,
        loop_index: Some(loop_index),
    }
}

fn instance_matches(
    inst: &FairnessInstance,
    graph: &StateGraph,
    edge_action: usize,
    binding: &[Value],
) -> bool {
    if inst.whole_next {
        return true;
    }
    graph.action_names[edge_action] == inst.action && binding == inst.args.as_slice()
}

/// `ENABLED <A>_v`: some outgoing edge matches and changes the state.
fn instance_enabled(inst: &FairnessInstance, graph: &StateGraph, s: usize) -> bool {
    graph.edges[s]
        .iter()
        .any(|(e, b)| e.to != s && instance_matches(inst, graph, e.action, b))
}

fn find_fair_suffix(
    graph: &StateGraph,
    fairness: &[FairnessInstance],
    allowed: &[bool],
    starts: &[usize],
    must_include: Option<&[bool]>,
) -> Option<FairWitness> {
    let n = graph.states.len();
    // Reachability from the starts inside the allowed subgraph.
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut reach = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in starts {
        if allowed[s] && !reach[s] {
            reach[s] = true;
            queue.push_back(s);
        }
    }
    let mut order = Vec::new();
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for (e, _) in &graph.edges[u] {
            if allowed[e.to] && !reach[e.to] {
                reach[e.to] = true;
                pred[e.to] = Some((u, e.action));
                queue.push_back(e.to);
            }
        }
    }
    if order.is_empty() {
        return None;
    }

    let path_from_start = |target: usize| -> (usize, Vec<(usize, usize)>) {
        let mut rev = Vec::new();
        let mut cur = target;
        while let Some((p, a)) = pred[cur] {
            rev.push((a, cur));
            cur = p;
        }
        rev.reverse();
        (cur, rev)
    };

    // Permanent stuttering: fair iff every instance is disabled.
    for &s in &order {
        if must_include.map_or(true, |m| m[s])
            && fairness.iter().all(|f| !instance_enabled(f, graph, s))
        {
            let (start, path) = path_from_start(s);
            return Some(FairWitness {
                start,
                path,
                cycle: Vec::new(),
            });
        }
    }

    // Fair cycle search over the strongly connected components of the
    // reachable allowed subgraph (self-loop edges are stuttering steps
    // and never count as action occurrences).
    let members: Vec<usize> = order.clone();
    let in_sub: Vec<bool> = {
        let mut v = vec![false; n];
        for &s in &members {
            v[s] = true;
        }
        v
    };
    let sccs = kosaraju(graph, &in_sub);
    for scc in sccs {
        if let Some(cycle) = fair_cycle_in(graph, fairness, &scc, must_include) {
            let entry = cycle[0].1;
            // The cycle starts at entry; rotate so path joins cleanly.
            let (start, path) = path_from_start(entry);
            return Some(FairWitness {
                start,
                path,
                cycle,
            });
        }
    }
    None
}

/// Kosaraju over the subgraph induced by `in_sub`; returns components
/// in some order, singletons without self-edges excluded later.
fn kosaraju(graph: &StateGraph, in_sub: &[bool]) -> Vec<Vec<usize>> {
    let n = graph.states.len();
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        if !in_sub[u] {
            continue;
        }
        for (e, _) in &graph.edges[u] {
            if e.to != u && in_sub[e.to] {
                adj[u].push(e.to);
                radj[e.to].push(u);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut finish = Vec::new();
    for s in 0..n {
        if !in_sub[s] || seen[s] {
            continue;
        }
        // Iterative DFS with a postorder marker.
        let mut stack = vec![(s, false)];
        while let Some((u, done)) = stack.pop() {
            if done {
                finish.push(u);
                continue;
            }
            if seen[u] {
                continue;
            }
            seen[u] = true;
            stack.push((u, true));
            for &v in &adj[u] {
                if !seen[v] {
                    stack.push((v, false));
                }
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    for &s in finish.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sccs.len();
        let mut stack = vec![s];
        let mut group = Vec::new();
        comp[s] = id;
        while let Some(u) = stack.pop() {
            group.push(u);
            for &v in &radj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    stack.push(v);
                }
            }
        }
        group.sort_unstable();
        sccs.push(group);
    }
    sccs
}

/// Checks whether a fair cycle exists inside the component, refining
/// away states that break strong fairness. Returns the cycle as steps
/// from its first state back to itself.
fn fair_cycle_in(
    graph: &StateGraph,
    fairness: &[FairnessInstance],
    scc: &[usize],
    must_include: Option<&[bool]>,
) -> Option<Vec<(usize, usize)>> {
    let members: BTreeSet<usize> = scc.iter().copied().collect();
    // Internal non-stuttering edges.
    let mut edges: Vec<(usize, usize, usize, Vec<Value>)> = Vec::new();
    for &u in scc {
        for (e, b) in &graph.edges[u] {
            if e.to != u && members.contains(&e.to) {
                edges.push((u, e.to, e.action, b.clone()));
            }
        }
    }
    if edges.is_empty() {
        return None;
    }
    if let Some(m) = must_include {
        if !scc.iter().any(|&s| m[s]) {
            return None;
        }
    }
    for f in fairness {
        let has_edge = edges
            .iter()
            .any(|(_, _, a, b)| instance_matches(f, graph, *a, b));
        if has_edge {
            continue;
        }
        let enabled_states: Vec<usize> = scc
            .iter()
            .copied()
            .filter(|&s| instance_enabled(f, graph, s))
            .collect();
        if enabled_states.is_empty() {
            continue;
        }
        if !f.strong {
            // Weak fairness also tolerates being disabled somewhere in
            // the cycle; shrinking the component cannot fix a component
            // where it is enabled everywhere and never taken.
            if enabled_states.len() == scc.len() {
                return None;
            }
            continue;
        }
        // Strong fairness: drop the enabled states and retry on the
        // remaining sub-components.
        let mut in_sub = vec![false; graph.states.len()];
        for &s in scc {
            in_sub[s] = true;
        }
        for &s in &enabled_states {
            in_sub[s] = false;
        }
        for sub in kosaraju(graph, &in_sub) {
            if let Some(c) = fair_cycle_in(graph, fairness, &sub, must_include) {
                return Some(c);
            }
        }
        return None;
    }
    // All constraints pass on this component: a closed walk covering
    // every internal edge satisfies each of them.
    Some(edge_cover_walk(graph, scc, &edges))
}

fn edge_cover_walk(
    graph: &StateGraph,
    scc: &[usize],
    edges: &[(usize, usize, usize, Vec<Value>)],
) -> Vec<(usize, usize)> {
    let members: BTreeSet<usize> = scc.iter().copied().collect();
    // Shortest internal path between component states.
    let shortest = |from: usize, to: usize| -> Vec<(usize, usize)> {
        if from == to {
            return Vec::new();
        }
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; graph.states.len()];
        let mut seen = vec![false; graph.states.len()];
        let mut q = VecDeque::new();
        seen[from] = true;
        q.push_back(from);
        while let Some(u) = q.pop_front() {
            if u == to {
                break;
            }
            for (e, _) in &graph.edges[u] {
                if e.to != u && members.contains(&e.to) && !seen[e.to] {
                    seen[e.to] = true;
                    pred[e.to] = Some((u, e.action));
                    q.push_back(e.to);
                }
            }
        }
        let mut rev = Vec::new();
        let mut cur = to;
        while cur != from {
            let (p, a) = pred[cur].expect("SCC is strongly connected");
            rev.push((a, cur));
            cur = p;
        }
        rev.reverse();
        rev
    };
    let first = edges[0].0;
    let mut walk: Vec<(usize, usize)> = Vec::new();
    let mut cur = first;
    for (u, v, a, _) in edges {
        walk.extend(shortest(cur, *u));
        walk.push((*a, *v));
        cur = *v;
    }
    walk.extend(shortest(cur, first));
    walk
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::config::parse_tlc_config;
    use crate::checker::explore::{explore, ExploreOptions, NamedAction};
    use crate::tla::parser::parse_module;

    const LOOP: &str = r#"---- MODULE looped ----
VARIABLE x

Init == x = "a"

Go ==
    /\ x = "a"
    /\ x' = "b"

Back ==
    /\ x = "b"
    /\ x' = "a"

Stop ==
    /\ x = "a"
    /\ x' = "done"

Next == Go \/ Back \/ Stop

Spec == Init /\ [][Next]_x /\ WF_x(Stop)
====
"#;

    fn graph_for(src: &str, action_names: &[&str]) -> (Evaluator, StateGraph) {
        let m = parse_module(src).unwrap();
        let cfg = parse_tlc_config("").unwrap();
        let ev = Evaluator::from_module(&m, cfg.constants).unwrap();
        let actions: Vec<NamedAction> = action_names
            .iter()
            .map(|n| NamedAction {
                name: n.to_string(),
                statement: ev.defs[*n].body.clone(),
            })
            .collect();
        let init = ev.defs["Init"].body.clone();
        let r = explore(&ev, &init, &actions, &[], &ExploreOptions::default());
        assert!(r.complete && r.runtime_failures.is_empty());
        (ev, r.graph)
    }

    fn prop(ev: &Evaluator, text: &str) -> Expr {
        let _ = ev;
        crate::tla::expr::parse_expr_tokens(&crate::tla::lexer::lex(text).unwrap()).unwrap()
    }

    #[test]
    fn spec_structure_extraction() {
        let (ev, _) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        let s = extract_spec_structure(&ev, "Spec").unwrap();
        assert_eq!(s.init, "Init");
        assert_eq!(s.next, "Next");
        assert_eq!(
            s.fairness,
            vec![FairnessInstance {
                strong: false,
                action: "Stop".to_string(),
                args: vec![],
                whole_next: false,
            }]
        );
    }

    #[test]
    fn eventually_violated_without_fairness() {
        let (ev, graph) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        // Nothing forces Stop: the a/b loop is a fair cycle when no
        // fairness constraints exist.
        let v = check_property(&ev, &graph, &[], &prop(&ev, "<>(x = \"done\")")).unwrap();
        match v {
            TemporalVerdict::Violated(cex) => {
                // With no fairness constraints, stuttering at "a"
                // forever is already a fair counterexample.
                let at = cex.loop_index.expect("liveness witness has a loop");
                assert!(at < cex.trace.len());
            }
            TemporalVerdict::Holds => panic!("expected a violation"),
        }
    }

    #[test]
    fn strong_fairness_separates_from_weak() {
        let (ev, graph) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        let wf_back = FairnessInstance {
            strong: false,
            action: "Back".to_string(),
            args: vec![],
            whole_next: false,
        };
        let stop = |strong| FairnessInstance {
            strong,
            action: "Stop".to_string(),
            args: vec![],
            whole_next: false,
        };
        // Stop is enabled at "a" and disabled at "b". The a/b loop sees
        // it enabled only intermittently, so weak fairness on Stop
        // admits the loop and <>done is violated.
        let weak = [wf_back.clone(), stop(false)];
        let v = check_property(&ev, &graph, &weak, &prop(&ev, "<>(x = \"done\")")).unwrap();
        assert!(matches!(v, TemporalVerdict::Violated(_)));
        // Strong fairness does not: infinitely many chances at "a"
        // force Stop to fire. WF(Back) is needed either way, else the
        // behavior may simply stutter at "b" forever.
        let strong = [wf_back, stop(true)];
        let v = check_property(&ev, &graph, &strong, &prop(&ev, "<>(x = \"done\")")).unwrap();
        assert_eq!(v, TemporalVerdict::Holds);
    }

    #[test]
    fn stuttering_respects_enabled_actions() {
        let (ev, graph) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        // At "done" every action is disabled: stuttering there is fair,
        // so <>(x = "a" again) is violated.
        let sf = vec![FairnessInstance {
            strong: true,
            action: "Back".to_string(),
            args: vec![],
            whole_next: false,
        }];
        let v = check_property(&ev, &graph, &sf, &prop(&ev, "[]<>(x = \"a\")")).unwrap();
        assert!(matches!(v, TemporalVerdict::Violated(_)));
    }

    #[test]
    fn leads_to_holds_with_whole_next_fairness() {
        let (ev, graph) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        let wf_next = vec![FairnessInstance {
            strong: false,
            action: "Next".to_string(),
            args: vec![],
            whole_next: true,
        }];
        // WF(Next) only forbids stopping while something is enabled; the
        // a/b loop still never reaches "done".
        let v = check_property(&ev, &graph, &wf_next, &prop(&ev, "x = \"a\" ~> x = \"done\""))
            .unwrap();
        assert!(matches!(v, TemporalVerdict::Violated(_)));
        // But it does guarantee the loop keeps moving: from "a" we
        // always come back to "a" or reach "done" eventually... with
        // weak fairness on the whole relation, permanent stuttering at
        // "a" or "b" is unfair, so <> leaving "b" holds.
        let v = check_property(&ev, &graph, &wf_next, &prop(&ev, "x = \"b\" ~> x /= \"b\""))
            .unwrap();
        assert_eq!(v, TemporalVerdict::Holds);
    }

    #[test]
    fn state_predicate_property_checks_initial_states() {
        let (ev, graph) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        let v = check_property(&ev, &graph, &[], &prop(&ev, "x = \"a\"")).unwrap();
        assert_eq!(v, TemporalVerdict::Holds);
        let v = check_property(&ev, &graph, &[], &prop(&ev, "x = \"b\"")).unwrap();
        assert!(matches!(v, TemporalVerdict::Violated(_)));
    }

    #[test]
    fn unknown_fairness_target_is_rejected() {
        let (ev, graph) = graph_for(LOOP, &["Go", "Back", "Stop"]);
        let bogus = vec![FairnessInstance {
            strong: false,
            action: "Vanish".to_string(),
            args: vec![],
            whole_next: false,
        }];
        let e = check_property(&ev, &graph, &bogus, &prop(&ev, "<>(x = \"done\")")).unwrap_err();
        assert!(matches!(e, LivenessError::UnsupportedSpec(_)));
    }
}
