//! Next-state decomposition into action disjuncts.
//!
//! The next-state definition is split on its top-level disjunction. Each
//! disjunct normally names an action (directly or under \E binders); anything
//! else becomes an anonymous action named by position. Names ending in
//! `_<digits>` are classified as interactions: numbered intermediate steps
//! that are excluded from metric denominators.

use super::ast::{Expr, QuantKind};
use super::lexer::{Tok, Token};
use super::parser::TlaModule;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("next-state definition {0} not found")]
    MissingNext(String),
    #[error("next-state definition {name} does not parse: {msg}")]
    UnparseableNext { name: String, msg: String },
}

/// One disjunct of the next-state relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDef {
    pub name: String,
    /// Exact source statement of the disjunct (without its bullet).
    pub statement: String,
    /// Parsed disjunct expression.
    pub expr: Expr,
    /// True when the disjunct did not name a defined operator.
    pub anonymous: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionSet {
    pub actions: Vec<ActionDef>,
    pub interactions: Vec<ActionDef>,
}

impl ActionSet {
    pub fn action_names(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.name.clone()).collect()
    }
}

fn is_interaction_name(name: &str) -> bool {
    match name.rsplit_once('_') {
        Some((head, digits)) => {
            !head.is_empty() && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

/// Innermost applied operator name of a disjunct, looking through \E binders.
fn head_name(expr: &Expr) -> Option<&str> {
    match expr {
        Expr::Apply(name, _) => Some(name),
        Expr::Ident(name) => Some(name),
        Expr::Quant { kind: QuantKind::Exists, body, .. } => head_name(body),
        _ => None,
    }
}

/// Split the body token range at depth-0 \/ tokens. The parsed disjunct
/// count is the authority; a mismatch (e.g. an implication at top level)
/// collapses the split into a single statement.
fn split_disjuncts(toks: &[Token]) -> Vec<(usize, usize)> {
    let mut pieces = Vec::new();
    let mut depth = 0i64;
    let mut let_depth = 0i64;
    let mut start = 0usize;
    for (i, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::LParen | Tok::LBracket | Tok::LBrace | Tok::LTuple => depth += 1,
            Tok::RParen | Tok::RBracket | Tok::RBrace | Tok::RTuple => depth -= 1,
            Tok::Let => let_depth += 1,
            Tok::InKw => {
                if let_depth > 0 {
                    let_depth -= 1
                }
            }
            Tok::Or if depth == 0 && let_depth == 0 => {
                if i > start {
                    pieces.push((start, i));
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < toks.len() {
        pieces.push((start, toks.len()));
    }
    pieces
}

/// Decompose the named next-state definition into actions and interactions.
pub fn decompose_next(module: &TlaModule, next_name: &str) -> Result<ActionSet, DecomposeError> {
    let def = module
        .def(next_name)
        .ok_or_else(|| DecomposeError::MissingNext(next_name.to_string()))?;
    let expr = module.def_expr(def).map_err(|e| DecomposeError::UnparseableNext {
        name: next_name.to_string(),
        msg: e.to_string(),
    })?;

    let parsed_disjuncts = expr.disjuncts();
    let body = &module.tokens[def.body_toks.0..def.body_toks.1];
    let mut pieces = split_disjuncts(body);
    if pieces.len() != parsed_disjuncts.len() {
        pieces = vec![(0, body.len())];
    }

    let mut set = ActionSet::default();
    for (ordinal, (lo, hi)) in pieces.iter().enumerate() {
        let slice = &body[*lo..*hi];
        let statement = module.source
            [slice.first().unwrap().span.start..slice.last().unwrap().span.end]
            .to_string();
        let piece_expr = if pieces.len() == parsed_disjuncts.len() && pieces.len() > 1 {
            parsed_disjuncts[ordinal].clone()
        } else {
            expr.clone()
        };
        let (name, anonymous) = match head_name(&piece_expr) {
            Some(n) if module.def(n).is_some() => (n.to_string(), false),
            _ => (format!("{next_name}_{}", ordinal + 1), true),
        };
        let action = ActionDef { name: name.clone(), statement, expr: piece_expr, anonymous };
        if is_interaction_name(&name) && !anonymous {
            set.interactions.push(action);
        } else {
            set.actions.push(action);
        }
    }
    Ok(set)
}

/// Render the extracted structure as the structured document used in
/// mapping prompts: spec name, constants, variables, actions with their
/// statements, and interactions.
pub fn extraction_doc(module: &TlaModule, set: &ActionSet) -> String {
    let mut out = String::new();
    out.push_str(&format!("spec_name: {}\n", module.name));
    out.push_str("constants:\n");
    for c in &module.constants {
        out.push_str(&format!("  - name: {c}\n"));
    }
    out.push_str("variables:\n");
    for v in &module.variables {
        out.push_str(&format!("  - name: {v}\n"));
    }
    out.push_str("actions:\n");
    for a in &set.actions {
        out.push_str(&format!("  - name: {}\n", a.name));
        let params = binder_params(&a.expr);
        if !params.is_empty() {
            out.push_str("    parameters:\n");
            for (p, src) in params {
                out.push_str(&format!("      - name: {p}\n        source: {src}\n"));
            }
        }
        out.push_str(&format!("    stmt: {}\n", a.statement.replace('\n', " ")));
    }
    out.push_str("interactions:\n");
    for a in &set.interactions {
        out.push_str(&format!("  - name: {}\n", a.name));
    }
    out
}

/// Binder variables and their domain text for quantified disjuncts.
fn binder_params(expr: &Expr) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut cur = expr;
    while let Expr::Quant { kind: QuantKind::Exists, binders, body } = cur {
        for b in binders {
            for v in &b.vars {
                out.push((v.clone(), domain_text(&b.domain)));
            }
        }
        cur = body;
    }
    out
}

fn domain_text(e: &Expr) -> String {
    match e {
        Expr::Ident(n) => n.clone(),
        other => format!("{other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tla::parser::parse_module;

    fn module(body: &str) -> TlaModule {
        let src = format!(
            "---- MODULE t ----\nCONSTANT Threads\nVARIABLE x\n\
A(t) == x' = t\nB == x' = x\nIntermediateAction_1 == x' = x\n\
Next == {body}\n====\n"
        );
        parse_module(&src).unwrap()
    }

    #[test]
    fn splits_named_disjuncts() {
        let m = module("(\\E t \\in Threads : A(t)) \\/ B");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.action_names(), vec!["A", "B"]);
        assert!(set.interactions.is_empty());
    }

    #[test]
    fn splits_bulleted_disjuncts() {
        let m = module("\n    \\/ \\E t \\in Threads : A(t)\n    \\/ B");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.action_names(), vec!["A", "B"]);
    }

    #[test]
    fn quantifier_scoped_disjunction_is_one_disjunct() {
        // \E extends to the end of the expression, so the \/ is inside it.
        let m = module("\\E t \\in Threads : A(t) \\/ B");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.actions.len(), 1);
        assert_eq!(set.actions[0].name, "Next_1");
    }

    #[test]
    fn classifies_interactions() {
        let m = module("B \\/ IntermediateAction_1");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.action_names(), vec!["B"]);
        assert_eq!(set.interactions[0].name, "IntermediateAction_1");
    }

    #[test]
    fn names_anonymous_disjuncts_by_position() {
        let m = module("B \\/ (x' = x + 1)");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.action_names(), vec!["B", "Next_2"]);
        assert!(set.actions[1].anonymous);
    }

    #[test]
    fn single_conjunction_is_one_action() {
        let m = module("/\\ x' = x\n        /\\ TRUE");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.actions.len(), 1);
        assert_eq!(set.actions[0].name, "Next_1");
    }

    #[test]
    fn statement_preserves_source_text() {
        let m = module("(\\E t \\in Threads : A(t)) \\/ B");
        let set = decompose_next(&m, "Next").unwrap();
        assert_eq!(set.actions[0].statement, "(\\E t \\in Threads : A(t))");
        assert_eq!(set.actions[1].statement, "B");
    }

    #[test]
    fn determinism() {
        let m = module("(\\E t \\in Threads : A(t)) \\/ B");
        let a = decompose_next(&m, "Next").unwrap();
        let b = decompose_next(&m, "Next").unwrap();
        assert_eq!(a, b);
    }
}
