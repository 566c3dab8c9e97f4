//! Expression AST for the supported TLA+ subset.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Eq,
    Neq,
    Lt,
    Leq,
    Gt,
    Geq,
    Plus,
    Minus,
    Mul,
    Div,
    Mod,
    Range, // a..b
    And,
    Or,
    Implies,
    Equiv,
    In,
    NotIn,
    Cup,
    Cap,
    SetMinus,
    Subseteq,
    Concat,
}

/// One binder group: `x, y \in S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binder {
    pub vars: Vec<String>,
    pub domain: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuantKind {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExceptPath {
    Index(Expr),
    Field(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(i64),
    Str(String),
    Bool(bool),
    Ident(String),
    /// Named operator application `Op(a, b)`.
    Apply(String, Vec<Expr>),
    /// Function application `f[x]` (multi-arg sugar for tuple index).
    FnApply(Box<Expr>, Vec<Expr>),
    Prime(Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Quant {
        kind: QuantKind,
        binders: Vec<Binder>,
        body: Box<Expr>,
    },
    Choose {
        binder: Binder,
        body: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Case {
        arms: Vec<(Expr, Expr)>,
        other: Option<Box<Expr>>,
    },
    Let {
        defs: Vec<LetDef>,
        body: Box<Expr>,
    },
    SetEnum(Vec<Expr>),
    /// `{x \in S : P}`
    SetFilter {
        binder: Binder,
        pred: Box<Expr>,
    },
    /// `{e : x \in S}`
    SetMap {
        expr: Box<Expr>,
        binders: Vec<Binder>,
    },
    Tuple(Vec<Expr>),
    Record(Vec<(String, Expr)>),
    /// `[field : S]` record set constructor.
    RecordSet(Vec<(String, Expr)>),
    /// `[x \in S |-> e]`
    FnDef {
        binders: Vec<Binder>,
        body: Box<Expr>,
    },
    /// `[S -> T]`
    FnSet {
        dom: Box<Expr>,
        rng: Box<Expr>,
    },
    Except {
        base: Box<Expr>,
        specs: Vec<(Vec<ExceptPath>, Expr)>,
    },
    Dot(Box<Expr>, String),
    /// `@` inside an EXCEPT replacement.
    AtRef,
    Unchanged(Box<Expr>),
    Enabled(Box<Expr>),
    Domain(Box<Expr>),
    Powerset(Box<Expr>),
    BigUnion(Box<Expr>),
    // Temporal layer; evaluated only by the liveness checker.
    Always(Box<Expr>),
    Eventually(Box<Expr>),
    LeadsTo(Box<Expr>, Box<Expr>),
    /// `[A]_sub`
    BoxAction {
        action: Box<Expr>,
        sub: Box<Expr>,
    },
    /// `<<A>>_sub`
    AngleAction {
        action: Box<Expr>,
        sub: Box<Expr>,
    },
    Fairness {
        strong: bool,
        sub: Box<Expr>,
        action: Box<Expr>,
    },
}

impl Expr {
    /// Flatten nested conjunctions into a list.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::Binary(BinOp::And, a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Flatten nested disjunctions into a list.
    pub fn disjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::Binary(BinOp::Or, a, b) => {
                let mut out = a.disjuncts();
                out.extend(b.disjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// True if the expression contains a primed subexpression.
    pub fn has_prime(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Prime(_) | Expr::Unchanged(_)) {
                found = true;
            }
        });
        found
    }

    /// True if the expression contains a temporal operator.
    pub fn has_temporal(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(
                e,
                Expr::Always(_)
                    | Expr::Eventually(_)
                    | Expr::LeadsTo(..)
                    | Expr::BoxAction { .. }
                    | Expr::AngleAction { .. }
                    | Expr::Fairness { .. }
            ) {
                found = true;
            }
        });
        found
    }

    /// Names referenced free in this expression, given names already bound.
    pub fn free_names(&self, bound: &[String]) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        let mut scope: Vec<String> = bound.to_vec();
        self.collect_free(&mut scope, &mut out);
        out
    }

    fn collect_free(
        &self,
        scope: &mut Vec<String>,
        out: &mut std::collections::BTreeSet<String>,
    ) {
        let with_binders =
            |binders: &[Binder],
             scope: &mut Vec<String>,
             out: &mut std::collections::BTreeSet<String>,
             inner: &dyn Fn(&mut Vec<String>, &mut std::collections::BTreeSet<String>)| {
                let depth = scope.len();
                for b in binders {
                    b.domain.collect_free(scope, out);
                    scope.extend(b.vars.iter().cloned());
                }
                inner(scope, out);
                scope.truncate(depth);
            };
        match self {
            Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) | Expr::AtRef => {}
            Expr::Ident(n) => {
                if !scope.iter().any(|s| s == n) {
                    out.insert(n.clone());
                }
            }
            Expr::Apply(n, args) => {
                if !scope.iter().any(|s| s == n) {
                    out.insert(n.clone());
                }
                for a in args {
                    a.collect_free(scope, out);
                }
            }
            Expr::FnApply(b, args) => {
                b.collect_free(scope, out);
                for a in args {
                    a.collect_free(scope, out);
                }
            }
            Expr::Prime(e)
            | Expr::Unary(_, e)
            | Expr::Unchanged(e)
            | Expr::Enabled(e)
            | Expr::Domain(e)
            | Expr::Powerset(e)
            | Expr::BigUnion(e)
            | Expr::Always(e)
            | Expr::Eventually(e)
            | Expr::Dot(e, _) => e.collect_free(scope, out),
            Expr::Binary(_, a, b) | Expr::LeadsTo(a, b) => {
                a.collect_free(scope, out);
                b.collect_free(scope, out);
            }
            Expr::Quant { binders, body, .. } => {
                with_binders(binders, scope, out, &|s, o| body.collect_free(s, o));
            }
            Expr::Choose { binder, body } => {
                with_binders(std::slice::from_ref(binder), scope, out, &|s, o| {
                    body.collect_free(s, o)
                });
            }
            Expr::If { cond, then, els } => {
                cond.collect_free(scope, out);
                then.collect_free(scope, out);
                els.collect_free(scope, out);
            }
            Expr::Case { arms, other } => {
                for (g, e) in arms {
                    g.collect_free(scope, out);
                    e.collect_free(scope, out);
                }
                if let Some(o) = other {
                    o.collect_free(scope, out);
                }
            }
            Expr::Let { defs, body } => {
                let depth = scope.len();
                for d in defs {
                    let inner_depth = scope.len();
                    scope.extend(d.params.iter().cloned());
                    d.body.collect_free(scope, out);
                    scope.truncate(inner_depth);
                    scope.push(d.name.clone());
                }
                body.collect_free(scope, out);
                scope.truncate(depth);
            }
            Expr::SetEnum(es) | Expr::Tuple(es) => {
                for e in es {
                    e.collect_free(scope, out);
                }
            }
            Expr::SetFilter { binder, pred } => {
                with_binders(std::slice::from_ref(binder), scope, out, &|s, o| {
                    pred.collect_free(s, o)
                });
            }
            Expr::SetMap { expr, binders } => {
                with_binders(binders, scope, out, &|s, o| expr.collect_free(s, o));
            }
            Expr::Record(fields) | Expr::RecordSet(fields) => {
                for (_, e) in fields {
                    e.collect_free(scope, out);
                }
            }
            Expr::FnDef { binders, body } => {
                with_binders(binders, scope, out, &|s, o| body.collect_free(s, o));
            }
            Expr::FnSet { dom, rng } => {
                dom.collect_free(scope, out);
                rng.collect_free(scope, out);
            }
            Expr::Except { base, specs } => {
                base.collect_free(scope, out);
                for (paths, v) in specs {
                    for p in paths {
                        if let ExceptPath::Index(e) = p {
                            e.collect_free(scope, out);
                        }
                    }
                    v.collect_free(scope, out);
                }
            }
            Expr::BoxAction { action, sub } | Expr::AngleAction { action, sub } => {
                action.collect_free(scope, out);
                sub.collect_free(scope, out);
            }
            Expr::Fairness { sub, action, .. } => {
                sub.collect_free(scope, out);
                action.collect_free(scope, out);
            }
        }
    }

    /// Pre-order traversal over all subexpressions.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_)
            | Expr::Str(_)
            | Expr::Bool(_)
            | Expr::Ident(_)
            | Expr::AtRef => {}
            Expr::Apply(_, args) => args.iter().for_each(|a| a.walk(f)),
            Expr::FnApply(b, args) => {
                b.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            Expr::Prime(e)
            | Expr::Unary(_, e)
            | Expr::Unchanged(e)
            | Expr::Enabled(e)
            | Expr::Domain(e)
            | Expr::Powerset(e)
            | Expr::BigUnion(e)
            | Expr::Always(e)
            | Expr::Eventually(e) => e.walk(f),
            Expr::Binary(_, a, b) | Expr::LeadsTo(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Quant { binders, body, .. } => {
                binders.iter().for_each(|b| b.domain.walk(f));
                body.walk(f);
            }
            Expr::Choose { binder, body } => {
                binder.domain.walk(f);
                body.walk(f);
            }
            Expr::If { cond, then, els } => {
                cond.walk(f);
                then.walk(f);
                els.walk(f);
            }
            Expr::Case { arms, other } => {
                for (g, e) in arms {
                    g.walk(f);
                    e.walk(f);
                }
                if let Some(o) = other {
                    o.walk(f);
                }
            }
            Expr::Let { defs, body } => {
                defs.iter().for_each(|d| d.body.walk(f));
                body.walk(f);
            }
            Expr::SetEnum(es) | Expr::Tuple(es) => es.iter().for_each(|e| e.walk(f)),
            Expr::SetFilter { binder, pred } => {
                binder.domain.walk(f);
                pred.walk(f);
            }
            Expr::SetMap { expr, binders } => {
                expr.walk(f);
                binders.iter().for_each(|b| b.domain.walk(f));
            }
            Expr::Record(fields) | Expr::RecordSet(fields) => {
                fields.iter().for_each(|(_, e)| e.walk(f))
            }
            Expr::FnDef { binders, body } => {
                binders.iter().for_each(|b| b.domain.walk(f));
                body.walk(f);
            }
            Expr::FnSet { dom, rng } => {
                dom.walk(f);
                rng.walk(f);
            }
            Expr::Except { base, specs } => {
                base.walk(f);
                for (paths, v) in specs {
                    for p in paths {
                        if let ExceptPath::Index(e) = p {
                            e.walk(f);
                        }
                    }
                    v.walk(f);
                }
            }
            Expr::Dot(b, _) => b.walk(f),
            Expr::BoxAction { action, sub } | Expr::AngleAction { action, sub } => {
                action.walk(f);
                sub.walk(f);
            }
            Expr::Fairness { sub, action, .. } => {
                sub.walk(f);
                action.walk(f);
            }
        }
    }
}
