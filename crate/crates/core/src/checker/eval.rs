//! Expression evaluation and successor enumeration for the builtin
//! checker.
//!
//! Actions are evaluated the way TLC evaluates them: conjuncts left to
//! right, binding a primed variable at `x' = e` / `x' \in S` /
//! `UNCHANGED x`, branching at disjunctions and existentials, and
//! failing on any guard that reads a primed variable before a binding
//! for it exists. Those failures surface as runtime errors attributed
//! to the enclosing action.

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::checker::value::{State, Value};
use crate::tla::ast::{BinOp, Binder, Expr, ExceptPath, QuantKind, UnOp};
use crate::tla::parser::TlaModule;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{msg}")]
pub struct EvalError {
    pub msg: String,
}

fn err<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError { msg: msg.into() })
}

#[derive(Debug, Clone)]
pub struct OpDef {
    pub params: Vec<String>,
    pub body: Expr,
}

/// A module with parsed operator bodies plus the constant assignment,
/// ready to evaluate.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub module_name: String,
    pub defs: BTreeMap<String, OpDef>,
    pub def_order: Vec<String>,
    pub constants: BTreeMap<String, Value>,
    pub vars: Vec<String>,
}

impl Evaluator {
    pub fn from_module(
        module: &TlaModule,
        constants: BTreeMap<String, Value>,
    ) -> Result<Evaluator, EvalError> {
        for c in &module.constants {
            if !constants.contains_key(c) {
                return err(format!("constant {c} has no value in the configuration"));
            }
        }
        let mut defs = BTreeMap::new();
        let mut def_order = Vec::new();
        for d in &module.defs {
            let body = module.def_expr(d).map_err(|e| EvalError {
                msg: format!("definition {} does not parse: {e}", d.name),
            })?;
            def_order.push(d.name.clone());
            defs.insert(
                d.name.clone(),
                OpDef {
                    params: d.params.clone(),
                    body,
                },
            );
        }
        Ok(Evaluator {
            module_name: module.name.clone(),
            defs,
            def_order,
            constants,
            vars: module.variables.clone(),
        })
    }

    fn is_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v == name)
    }
}

#[derive(Debug, Clone)]
enum Local {
    Val(Value),
    Op(Rc<LetClosure>),
}

#[derive(Debug)]
struct LetClosure {
    params: Vec<String>,
    body: Expr,
    captured: Vec<(String, Local)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Bare variable identifiers bind into the partial state.
    Init,
    /// Primed variables bind into the partial state; bare identifiers
    /// read the current state.
    Action,
}

struct Cx<'a> {
    ev: &'a Evaluator,
    state: Option<&'a State>,
    locals: Vec<(String, Local)>,
    mode: Mode,
}

impl<'a> Cx<'a> {
    fn lookup_local(&self, name: &str) -> Option<Local> {
        self.locals
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, l)| l.clone())
    }
}

fn lookup_ident(cx: &mut Cx, target: Option<&State>, name: &str) -> Result<Value, EvalError> {
    if let Some(local) = cx.lookup_local(name) {
        return match local {
            Local::Val(v) => Ok(v),
            Local::Op(cl) if cl.params.is_empty() => apply_closure(cx, target, &cl, &[]),
            Local::Op(_) => err(format!("operator {name} requires arguments")),
        };
    }
    if cx.ev.is_var(name) {
        let source = match cx.mode {
            Mode::Init => target,
            Mode::Action => cx.state,
        };
        if let Some(v) = source.and_then(|s| s.get(name)) {
            return Ok(v.clone());
        }
        return err(format!("variable {name} is undefined at this point"));
    }
    if let Some(v) = cx.ev.constants.get(name) {
        return Ok(v.clone());
    }
    if let Some(def) = cx.ev.defs.get(name) {
        if !def.params.is_empty() {
            return err(format!("operator {name} requires arguments"));
        }
        let body = def.body.clone();
        let saved = std::mem::take(&mut cx.locals);
        let r = eval(cx, target, &body);
        cx.locals = saved;
        return r;
    }
    match name {
        "BOOLEAN" => Ok(Value::set([Value::Bool(false), Value::Bool(true)])),
        "Nat" | "Int" | "STRING" => err(format!("{name} is an infinite set and cannot be evaluated")),
        _ => err(format!("identifier {name} is undefined")),
    }
}

fn apply_closure(
    cx: &mut Cx,
    target: Option<&State>,
    cl: &LetClosure,
    args: &[Value],
) -> Result<Value, EvalError> {
    if args.len() != cl.params.len() {
        return err(format!(
            "operator expects {} arguments, got {}",
            cl.params.len(),
            args.len()
        ));
    }
    let saved = std::mem::replace(&mut cx.locals, cl.captured.clone());
    for (p, a) in cl.params.iter().zip(args) {
        cx.locals.push((p.clone(), Local::Val(a.clone())));
    }
    let r = eval(cx, target, &cl.body);
    cx.locals = saved;
    r
}

fn apply_def(
    cx: &mut Cx,
    target: Option<&State>,
    name: &str,
    args: &[Value],
) -> Result<Value, EvalError> {
    let def = match cx.ev.defs.get(name) {
        Some(d) => d.clone(),
        None => return err(format!("operator {name} is undefined")),
    };
    if def.params.len() != args.len() {
        return err(format!(
            "operator {name} expects {} arguments, got {}",
            def.params.len(),
            args.len()
        ));
    }
    let saved = std::mem::take(&mut cx.locals);
    for (p, a) in def.params.iter().zip(args) {
        cx.locals.push((p.clone(), Local::Val(a.clone())));
    }
    let r = eval(cx, target, &def.body);
    cx.locals = saved;
    r
}

fn expect_bool(v: Value, what: &str) -> Result<bool, EvalError> {
    v.as_bool()
        .ok_or_else(|| EvalError {
            msg: format!("{what} must be a boolean, found {}", v.type_name()),
        })
}

fn expect_int(v: &Value, what: &str) -> Result<i64, EvalError> {
    v.as_int().ok_or_else(|| EvalError {
        msg: format!("{what} must be an integer, found {}", v.type_name()),
    })
}

fn expect_set(v: Value, what: &str) -> Result<std::collections::BTreeSet<Value>, EvalError> {
    match v {
        Value::Set(s) => Ok(s),
        other => err(format!("{what} must be a set, found {}", other.type_name())),
    }
}

/// Enumerates all assignments of the binder groups, invoking `f` with
/// the locals pushed. Stops early when `f` returns `Some`.
fn for_each_binding<T>(
    cx: &mut Cx,
    target: Option<&State>,
    binders: &[Binder],
    f: &mut dyn FnMut(&mut Cx) -> Result<Option<T>, EvalError>,
) -> Result<Option<T>, EvalError> {
    fn rec<T>(
        cx: &mut Cx,
        target: Option<&State>,
        binders: &[Binder],
        group: usize,
        var: usize,
        f: &mut dyn FnMut(&mut Cx) -> Result<Option<T>, EvalError>,
    ) -> Result<Option<T>, EvalError> {
        if group == binders.len() {
            return f(cx);
        }
        let b = &binders[group];
        if var == b.vars.len() {
            return rec(cx, target, binders, group + 1, 0, f);
        }
        let dom = eval(cx, target, &b.domain)?;
        let members = dom
            .domain_members()
            .ok_or_else(|| EvalError {
                msg: format!("quantifier domain must be a finite set, found {}", dom.type_name()),
            })?;
        for m in members {
            cx.locals.push((b.vars[var].clone(), Local::Val(m)));
            let r = rec(cx, target, binders, group, var + 1, f);
            cx.locals.pop();
            if let Some(v) = r? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }
    rec(cx, target, binders, 0, 0, f)
}

fn eval_builtin(
    cx: &mut Cx,
    target: Option<&State>,
    name: &str,
    args: &[Expr],
) -> Option<Result<Value, EvalError>> {
    let unary = |cx: &mut Cx, args: &[Expr]| -> Result<Value, EvalError> {
        if args.len() != 1 {
            return err(format!("{name} takes one argument"));
        }
        eval(cx, target, &args[0])
    };
    let result = match name {
        "Len" => match unary(cx, args) {
            Ok(Value::Seq(s)) => Ok(Value::Int(s.len() as i64)),
            Ok(other) => err(format!("Len expects a sequence, found {}", other.type_name())),
            Err(e) => Err(e),
        },
        "Head" => match unary(cx, args) {
            Ok(Value::Seq(s)) => s
                .first()
                .cloned()
                .ok_or_else(|| EvalError {
                    msg: "Head applied to an empty sequence".to_string(),
                }),
            Ok(other) => err(format!("Head expects a sequence, found {}", other.type_name())),
            Err(e) => Err(e),
        },
        "Tail" => match unary(cx, args) {
            Ok(Value::Seq(s)) => {
                if s.is_empty() {
                    err("Tail applied to an empty sequence")
                } else {
                    Ok(Value::Seq(s[1..].to_vec()))
                }
            }
            Ok(other) => err(format!("Tail expects a sequence, found {}", other.type_name())),
            Err(e) => Err(e),
        },
        "Append" => (|| {
            if args.len() != 2 {
                return err("Append takes two arguments");
            }
            let s = eval(cx, target, &args[0])?;
            let v = eval(cx, target, &args[1])?;
            match s {
                Value::Seq(mut items) => {
                    items.push(v);
                    Ok(Value::Seq(items))
                }
                other => err(format!("Append expects a sequence, found {}", other.type_name())),
            }
        })(),
        "SubSeq" => (|| {
            if args.len() != 3 {
                return err("SubSeq takes three arguments");
            }
            let s = eval(cx, target, &args[0])?;
            let a = expect_int(&eval(cx, target, &args[1])?, "SubSeq start")?;
            let b = expect_int(&eval(cx, target, &args[2])?, "SubSeq end")?;
            match s {
                Value::Seq(items) => {
                    if a < 1 || b > items.len() as i64 {
                        if a > b {
                            return Ok(Value::Seq(Vec::new()));
                        }
                        return err("SubSeq range out of bounds");
                    }
                    if a > b {
                        return Ok(Value::Seq(Vec::new()));
                    }
                    Ok(Value::Seq(items[(a - 1) as usize..b as usize].to_vec()))
                }
                other => err(format!("SubSeq expects a sequence, found {}", other.type_name())),
            }
        })(),
        "Cardinality" => match unary(cx, args) {
            Ok(Value::Set(s)) => Ok(Value::Int(s.len() as i64)),
            Ok(other) => err(format!(
                "Cardinality expects a finite set, found {}",
                other.type_name()
            )),
            Err(e) => Err(e),
        },
        "IsFiniteSet" => match unary(cx, args) {
            Ok(Value::Set(_)) => Ok(Value::Bool(true)),
            Ok(other) => err(format!(
                "IsFiniteSet expects a set, found {}",
                other.type_name()
            )),
            Err(e) => Err(e),
        },
        "Assert" => (|| {
            if args.len() != 2 {
                return err("Assert takes two arguments");
            }
            let cond = expect_bool(eval(cx, target, &args[0])?, "Assert condition")?;
            if cond {
                Ok(Value::Bool(true))
            } else {
                let msg = eval(cx, target, &args[1])?;
                err(format!("assertion failed: {msg}"))
            }
        })(),
        "Print" => (|| {
            if args.len() != 2 {
                return err("Print takes two arguments");
            }
            eval(cx, target, &args[0])?;
            eval(cx, target, &args[1])
        })(),
        "PrintT" => match unary(cx, args) {
            Ok(_) => Ok(Value::Bool(true)),
            Err(e) => Err(e),
        },
        "Seq" => err("Seq(S) is an infinite set and cannot be evaluated"),
        _ => return None,
    };
    Some(result)
}

fn eval(cx: &mut Cx, target: Option<&State>, e: &Expr) -> Result<Value, EvalError> {
    match e {
        Expr::Num(n) => Ok(Value::Int(*n)),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Ident(n) => lookup_ident(cx, target, n),
        Expr::AtRef => match cx.lookup_local("@") {
            Some(Local::Val(v)) => Ok(v),
            _ => err("@ used outside EXCEPT"),
        },
        Expr::Prime(inner) => {
            let name = match inner.as_ref() {
                Expr::Ident(n) => n,
                _ => return err("only variables can be primed"),
            };
            if cx.mode == Mode::Init {
                return err(format!("primed variable {name}' in an initial predicate"));
            }
            if !cx.ev.is_var(name) {
                return err(format!("{name}' is not a declared variable"));
            }
            match target.and_then(|t| t.get(name)) {
                Some(v) => Ok(v.clone()),
                None => err(format!("the primed variable {name}' is undefined here")),
            }
        }
        Expr::Apply(name, args) => {
            if cx.lookup_local(name).is_some() {
                let vals = args
                    .iter()
                    .map(|a| eval(cx, target, a))
                    .collect::<Result<Vec<_>, _>>()?;
                return match cx.lookup_local(name) {
                    Some(Local::Op(cl)) => apply_closure(cx, target, &cl, &vals),
                    Some(Local::Val(_)) => err(format!("{name} is not an operator")),
                    None => unreachable!(),
                };
            }
            if cx.ev.defs.contains_key(name) {
                let vals = args
                    .iter()
                    .map(|a| eval(cx, target, a))
                    .collect::<Result<Vec<_>, _>>()?;
                return apply_def(cx, target, name, &vals);
            }
            match eval_builtin(cx, target, name, args) {
                Some(r) => r,
                None => err(format!("operator {name} is undefined")),
            }
        }
        Expr::FnApply(f, args) => {
            let fv = eval(cx, target, f)?;
            let key = if args.len() == 1 {
                eval(cx, target, &args[0])?
            } else {
                Value::Seq(
                    args.iter()
                        .map(|a| eval(cx, target, a))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            };
            apply_value(&fv, &key)
        }
        Expr::Unary(UnOp::Not, inner) => {
            let v = expect_bool(eval(cx, target, inner)?, "~ operand")?;
            Ok(Value::Bool(!v))
        }
        Expr::Unary(UnOp::Neg, inner) => {
            let v = expect_int(&eval(cx, target, inner)?, "- operand")?;
            Ok(Value::Int(-v))
        }
        Expr::Binary(op, a, b) => eval_binary(cx, target, *op, a, b),
        Expr::Quant { kind, binders, body } => {
            let forall = matches!(kind, QuantKind::Forall);
            let hit = for_each_binding(cx, target, binders, &mut |cx| {
                let v = expect_bool(eval(cx, target, body)?, "quantifier body")?;
                if v != forall {
                    // Found a witness (exists) or a counterexample (forall).
                    Ok(Some(()))
                } else {
                    Ok(None)
                }
            })?;
            Ok(Value::Bool(if forall { hit.is_none() } else { hit.is_some() }))
        }
        Expr::Choose { binder, body } => {
            let found = for_each_binding(
                cx,
                target,
                std::slice::from_ref(binder),
                &mut |cx| {
                    let ok = expect_bool(eval(cx, target, body)?, "CHOOSE body")?;
                    if ok {
                        match cx.lookup_local(&binder.vars[0]) {
                            Some(Local::Val(v)) => Ok(Some(v)),
                            _ => err("CHOOSE binder lookup failed"),
                        }
                    } else {
                        Ok(None)
                    }
                },
            )?;
            found.ok_or_else(|| EvalError {
                msg: "CHOOSE has no witness".to_string(),
            })
        }
        Expr::If { cond, then, els } => {
            let c = expect_bool(eval(cx, target, cond)?, "IF condition")?;
            eval(cx, target, if c { then } else { els })
        }
        Expr::Case { arms, other } => {
            for (cond, val) in arms {
                if expect_bool(eval(cx, target, cond)?, "CASE guard")? {
                    return eval(cx, target, val);
                }
            }
            match other {
                Some(o) => eval(cx, target, o),
                None => err("CASE has no arm whose guard is true"),
            }
        }
        Expr::Let { defs, body } => {
            let depth = cx.locals.len();
            for d in defs {
                if d.params.is_empty() {
                    let v = eval(cx, target, &d.body)?;
                    cx.locals.push((d.name.clone(), Local::Val(v)));
                } else {
                    let cl = LetClosure {
                        params: d.params.clone(),
                        body: d.body.clone(),
                        captured: cx.locals.clone(),
                    };
                    cx.locals.push((d.name.clone(), Local::Op(Rc::new(cl))));
                }
            }
            let r = eval(cx, target, body);
            cx.locals.truncate(depth);
            r
        }
        Expr::SetEnum(items) => {
            let mut out = std::collections::BTreeSet::new();
            for it in items {
                out.insert(eval(cx, target, it)?);
            }
            Ok(Value::Set(out))
        }
        Expr::SetFilter { binder, pred } => {
            let mut out = std::collections::BTreeSet::new();
            for_each_binding::<()>(cx, target, std::slice::from_ref(binder), &mut |cx| {
                if expect_bool(eval(cx, target, pred)?, "set filter predicate")? {
                    match cx.lookup_local(&binder.vars[0]) {
                        Some(Local::Val(v)) => {
                            out.insert(v);
                        }
                        _ => return err("set filter binder lookup failed"),
                    }
                }
                Ok(None)
            })?;
            Ok(Value::Set(out))
        }
        Expr::SetMap { expr, binders } => {
            let mut out = std::collections::BTreeSet::new();
            for_each_binding::<()>(cx, target, binders, &mut |cx| {
                out.insert(eval(cx, target, expr)?);
                Ok(None)
            })?;
            Ok(Value::Set(out))
        }
        Expr::Tuple(items) => Ok(Value::Seq(
            items
                .iter()
                .map(|i| eval(cx, target, i))
                .collect::<Result<Vec<_>, _>>()?,
        )),
        Expr::Record(fields) => {
            let mut out = BTreeMap::new();
            for (k, v) in fields {
                out.insert(k.clone(), eval(cx, target, v)?);
            }
            Ok(Value::Record(out))
        }
        Expr::RecordSet(fields) => {
            let mut doms = Vec::new();
            for (k, d) in fields {
                let set = expect_set(eval(cx, target, d)?, "record set field domain")?;
                doms.push((k.clone(), set.into_iter().collect::<Vec<_>>()));
            }
            let mut out = std::collections::BTreeSet::new();
            let mut current = BTreeMap::new();
            fn rec(
                doms: &[(String, Vec<Value>)],
                i: usize,
                current: &mut BTreeMap<String, Value>,
                out: &mut std::collections::BTreeSet<Value>,
            ) {
                if i == doms.len() {
                    out.insert(Value::Record(current.clone()));
                    return;
                }
                for v in &doms[i].1 {
                    current.insert(doms[i].0.clone(), v.clone());
                    rec(doms, i + 1, current, out);
                }
                current.remove(&doms[i].0);
            }
            rec(&doms, 0, &mut current, &mut out);
            Ok(Value::Set(out))
        }
        Expr::FnDef { binders, body } => {
            let total_vars: usize = binders.iter().map(|b| b.vars.len()).sum();
            let mut map = BTreeMap::new();
            for_each_binding::<()>(cx, target, binders, &mut |cx| {
                let mut keyparts = Vec::new();
                for b in binders {
                    for v in &b.vars {
                        match cx.lookup_local(v) {
                            Some(Local::Val(val)) => keyparts.push(val),
                            _ => return err("function binder lookup failed"),
                        }
                    }
                }
                let key = if total_vars == 1 {
                    keyparts.pop().unwrap()
                } else {
                    Value::Seq(keyparts)
                };
                let val = eval(cx, target, body)?;
                map.insert(key, val);
                Ok(None)
            })?;
            Ok(Value::Func(map))
        }
        Expr::FnSet { dom, rng } => {
            let d = expect_set(eval(cx, target, dom)?, "function set domain")?;
            let r = expect_set(eval(cx, target, rng)?, "function set range")?;
            let keys: Vec<Value> = d.into_iter().collect();
            let vals: Vec<Value> = r.into_iter().collect();
            let count = (vals.len() as f64).powi(keys.len() as i32);
            if count > 65536.0 {
                return err("function set is too large to enumerate");
            }
            let mut out = std::collections::BTreeSet::new();
            let mut current = BTreeMap::new();
            fn rec(
                keys: &[Value],
                vals: &[Value],
                i: usize,
                current: &mut BTreeMap<Value, Value>,
                out: &mut std::collections::BTreeSet<Value>,
            ) {
                if i == keys.len() {
                    out.insert(Value::Func(current.clone()));
                    return;
                }
                for v in vals {
                    current.insert(keys[i].clone(), v.clone());
                    rec(keys, vals, i + 1, current, out);
                }
                current.remove(&keys[i]);
            }
            rec(&keys, &vals, 0, &mut current, &mut out);
            Ok(Value::Set(out))
        }
        Expr::Except { base, specs } => {
            let mut value = eval(cx, target, base)?;
            for (paths, repl) in specs {
                let keys = paths
                    .iter()
                    .map(|p| match p {
                        ExceptPath::Index(ix) => eval(cx, target, ix),
                        ExceptPath::Field(f) => Ok(Value::Str(f.clone())),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                value = except_update(cx, target, value, &keys, repl)?;
            }
            Ok(value)
        }
        Expr::Dot(base, field) => {
            let v = eval(cx, target, base)?;
            match v {
                Value::Record(fields) => fields.get(field).cloned().ok_or_else(|| EvalError {
                    msg: format!("record has no field {field}"),
                }),
                other => err(format!(".{field} applied to {}", other.type_name())),
            }
        }
        Expr::Domain(inner) => {
            let v = eval(cx, target, inner)?;
            match v {
                Value::Func(m) => Ok(Value::Set(m.keys().cloned().collect())),
                Value::Seq(s) => Ok(Value::Set(
                    (1..=s.len() as i64).map(Value::Int).collect(),
                )),
                Value::Record(r) => Ok(Value::Set(
                    r.keys().map(|k| Value::Str(k.clone())).collect(),
                )),
                other => err(format!("DOMAIN applied to {}", other.type_name())),
            }
        }
        Expr::Powerset(inner) => {
            let s = expect_set(eval(cx, target, inner)?, "SUBSET operand")?;
            if s.len() > 16 {
                return err("SUBSET operand is too large to enumerate");
            }
            let items: Vec<Value> = s.into_iter().collect();
            let mut out = std::collections::BTreeSet::new();
            for mask in 0u32..(1 << items.len()) {
                let mut sub = std::collections::BTreeSet::new();
                for (i, item) in items.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        sub.insert(item.clone());
                    }
                }
                out.insert(Value::Set(sub));
            }
            Ok(Value::Set(out))
        }
        Expr::BigUnion(inner) => {
            let s = expect_set(eval(cx, target, inner)?, "UNION operand")?;
            let mut out = std::collections::BTreeSet::new();
            for member in s {
                out.extend(expect_set(member, "UNION member")?);
            }
            Ok(Value::Set(out))
        }
        Expr::Unchanged(inner) => {
            // In a pure boolean position UNCHANGED compares primed and
            // current values; enumeration handles the binding form.
            let names = resolve_unchanged(cx.ev, inner)?;
            let state = cx
                .state
                .ok_or_else(|| EvalError {
                    msg: "UNCHANGED outside an action".to_string(),
                })?;
            for n in &names {
                let cur = state.get(n).cloned().ok_or_else(|| EvalError {
                    msg: format!("variable {n} is undefined"),
                })?;
                let nxt = target.and_then(|t| t.get(n)).cloned().ok_or_else(|| EvalError {
                    msg: format!("the primed variable {n}' is undefined here"),
                })?;
                if cur != nxt {
                    return Ok(Value::Bool(false));
                }
            }
            Ok(Value::Bool(true))
        }
        Expr::Enabled(action) => {
            let state = cx
                .state
                .ok_or_else(|| EvalError {
                    msg: "ENABLED outside a state context".to_string(),
                })?;
            let mut sub = Cx {
                ev: cx.ev,
                state: Some(state),
                locals: cx.locals.clone(),
                mode: Mode::Action,
            };
            let succ = step_one(&mut sub, action, State::new())?;
            Ok(Value::Bool(!succ.is_empty()))
        }
        Expr::Always(_)
        | Expr::Eventually(_)
        | Expr::LeadsTo(..)
        | Expr::BoxAction { .. }
        | Expr::AngleAction { .. }
        | Expr::Fairness { .. } => err("temporal operator outside a property context"),
    }
}

fn apply_value(f: &Value, key: &Value) -> Result<Value, EvalError> {
    match f {
        Value::Func(map) => map.get(key).cloned().ok_or_else(|| EvalError {
            msg: format!("function applied outside its domain: {key}"),
        }),
        Value::Seq(items) => {
            let ix = expect_int(key, "sequence index")?;
            if ix < 1 || ix as usize > items.len() {
                return err(format!("sequence index {ix} out of range 1..{}", items.len()));
            }
            Ok(items[(ix - 1) as usize].clone())
        }
        Value::Record(fields) => match key {
            Value::Str(s) => fields.get(s).cloned().ok_or_else(|| EvalError {
                msg: format!("record has no field {s}"),
            }),
            other => err(format!("record selected with {}", other.type_name())),
        },
        other => err(format!("{} applied as a function", other.type_name())),
    }
}

fn except_update(
    cx: &mut Cx,
    target: Option<&State>,
    base: Value,
    keys: &[Value],
    repl: &Expr,
) -> Result<Value, EvalError> {
    let key = &keys[0];
    let old = apply_value(&base, key)?;
    let new_val = if keys.len() == 1 {
        cx.locals.push(("@".to_string(), Local::Val(old)));
        let r = eval(cx, target, repl);
        cx.locals.pop();
        r?
    } else {
        except_update(cx, target, old, &keys[1..], repl)?
    };
    match base {
        Value::Func(mut map) => {
            map.insert(key.clone(), new_val);
            Ok(Value::Func(map))
        }
        Value::Seq(mut items) => {
            let ix = expect_int(key, "sequence index")? as usize;
            items[ix - 1] = new_val;
            Ok(Value::Seq(items))
        }
        Value::Record(mut fields) => {
            let name = match key {
                Value::Str(s) => s.clone(),
                other => return err(format!("record updated with {}", other.type_name())),
            };
            fields.insert(name, new_val);
            Ok(Value::Record(fields))
        }
        other => err(format!("EXCEPT applied to {}", other.type_name())),
    }
}

fn eval_binary(
    cx: &mut Cx,
    target: Option<&State>,
    op: BinOp,
    a: &Expr,
    b: &Expr,
) -> Result<Value, EvalError> {
    match op {
        BinOp::And => {
            let av = expect_bool(eval(cx, target, a)?, "/\\ operand")?;
            if !av {
                return Ok(Value::Bool(false));
            }
            let bv = expect_bool(eval(cx, target, b)?, "/\\ operand")?;
            Ok(Value::Bool(bv))
        }
        BinOp::Or => {
            let av = expect_bool(eval(cx, target, a)?, "\\/ operand")?;
            if av {
                return Ok(Value::Bool(true));
            }
            let bv = expect_bool(eval(cx, target, b)?, "\\/ operand")?;
            Ok(Value::Bool(bv))
        }
        BinOp::Implies => {
            let av = expect_bool(eval(cx, target, a)?, "=> operand")?;
            if !av {
                return Ok(Value::Bool(true));
            }
            let bv = expect_bool(eval(cx, target, b)?, "=> operand")?;
            Ok(Value::Bool(bv))
        }
        BinOp::Equiv => {
            let av = expect_bool(eval(cx, target, a)?, "<=> operand")?;
            let bv = expect_bool(eval(cx, target, b)?, "<=> operand")?;
            Ok(Value::Bool(av == bv))
        }
        BinOp::Eq | BinOp::Neq => {
            let av = eval(cx, target, a)?;
            let bv = eval(cx, target, b)?;
            let eq = av == bv;
            Ok(Value::Bool(if matches!(op, BinOp::Eq) { eq } else { !eq }))
        }
        BinOp::In | BinOp::NotIn => {
            let av = eval(cx, target, a)?;
            let bv = expect_set(eval(cx, target, b)?, "\\in right operand")?;
            let has = bv.contains(&av);
            Ok(Value::Bool(if matches!(op, BinOp::In) { has } else { !has }))
        }
        BinOp::Lt | BinOp::Leq | BinOp::Gt | BinOp::Geq => {
            let av = expect_int(&eval(cx, target, a)?, "comparison operand")?;
            let bv = expect_int(&eval(cx, target, b)?, "comparison operand")?;
            let r = match op {
                BinOp::Lt => av < bv,
                BinOp::Leq => av <= bv,
                BinOp::Gt => av > bv,
                _ => av >= bv,
            };
            Ok(Value::Bool(r))
        }
        BinOp::Plus | BinOp::Minus | BinOp::Mul | BinOp::Div | BinOp::Mod => {
            let av = expect_int(&eval(cx, target, a)?, "arithmetic operand")?;
            let bv = expect_int(&eval(cx, target, b)?, "arithmetic operand")?;
            let r = match op {
                BinOp::Plus => av + bv,
                BinOp::Minus => av - bv,
                BinOp::Mul => av * bv,
                BinOp::Div => {
                    if bv == 0 {
                        return err("division by zero");
                    }
                    av.div_euclid(bv)
                }
                _ => {
                    if bv == 0 {
                        return err("modulus by zero");
                    }
                    av.rem_euclid(bv)
                }
            };
            Ok(Value::Int(r))
        }
        BinOp::Range => {
            let av = expect_int(&eval(cx, target, a)?, ".. operand")?;
            let bv = expect_int(&eval(cx, target, b)?, ".. operand")?;
            Ok(Value::Set((av..=bv).map(Value::Int).collect()))
        }
        BinOp::Cup | BinOp::Cap | BinOp::SetMinus => {
            let av = expect_set(eval(cx, target, a)?, "set operand")?;
            let bv = expect_set(eval(cx, target, b)?, "set operand")?;
            let r = match op {
                BinOp::Cup => av.union(&bv).cloned().collect(),
                BinOp::Cap => av.intersection(&bv).cloned().collect(),
                _ => av.difference(&bv).cloned().collect(),
            };
            Ok(Value::Set(r))
        }
        BinOp::Subseteq => {
            let av = expect_set(eval(cx, target, a)?, "\\subseteq operand")?;
            let bv = expect_set(eval(cx, target, b)?, "\\subseteq operand")?;
            Ok(Value::Bool(av.is_subset(&bv)))
        }
        BinOp::Concat => {
            let av = eval(cx, target, a)?;
            let bv = eval(cx, target, b)?;
            match (av, bv) {
                (Value::Seq(mut x), Value::Seq(y)) => {
                    x.extend(y);
                    Ok(Value::Seq(x))
                }
                (x, y) => err(format!(
                    "\\o expects sequences, found {} and {}",
                    x.type_name(),
                    y.type_name()
                )),
            }
        }
    }
}

/// Resolves the argument of `UNCHANGED` to variable names, looking
/// through operator definitions like `vars == <<a, b>>`.
pub fn resolve_unchanged(ev: &Evaluator, e: &Expr) -> Result<Vec<String>, EvalError> {
    match e {
        Expr::Ident(n) => {
            if ev.is_var(n) {
                Ok(vec![n.clone()])
            } else if let Some(def) = ev.defs.get(n) {
                if !def.params.is_empty() {
                    return err(format!("UNCHANGED {n}: operator takes arguments"));
                }
                let body = def.body.clone();
                resolve_unchanged(ev, &body)
            } else {
                err(format!("UNCHANGED {n}: not a variable"))
            }
        }
        Expr::Tuple(items) => {
            let mut out = Vec::new();
            for it in items {
                out.extend(resolve_unchanged(ev, it)?);
            }
            Ok(out)
        }
        _ => err("UNCHANGED applied to an unsupported expression"),
    }
}

fn step_one(cx: &mut Cx, e: &Expr, partial: State) -> Result<Vec<State>, EvalError> {
    match e {
        Expr::Binary(BinOp::And, ..) => {
            let mut current = vec![partial];
            for conj in e.conjuncts() {
                let mut next = Vec::new();
                for p in current {
                    next.extend(step_one(cx, conj, p)?);
                }
                current = next;
                if current.is_empty() {
                    break;
                }
            }
            Ok(current)
        }
        Expr::Binary(BinOp::Or, ..) => {
            let mut out = Vec::new();
            for dis in e.disjuncts() {
                out.extend(step_one(cx, dis, partial.clone())?);
            }
            Ok(out)
        }
        Expr::Quant {
            kind: QuantKind::Exists,
            binders,
            body,
        } => {
            let mut out = Vec::new();
            for_each_binding::<()>(cx, Some(&partial), binders, &mut |cx| {
                out.extend(step_one(cx, body, partial.clone())?);
                Ok(None)
            })?;
            Ok(out)
        }
        Expr::Binary(BinOp::Eq, lhs, rhs) => {
            if let Some(name) = bind_target(cx, lhs) {
                if !partial.contains_key(&name) {
                    let v = eval(cx, Some(&partial), rhs)?;
                    let mut p = partial;
                    p.insert(name, v);
                    return Ok(vec![p]);
                }
            }
            filter(cx, e, partial)
        }
        Expr::Binary(BinOp::In, lhs, rhs) => {
            if let Some(name) = bind_target(cx, lhs) {
                if !partial.contains_key(&name) {
                    let dom = expect_set(eval(cx, Some(&partial), rhs)?, "\\in right operand")?;
                    let mut out = Vec::new();
                    for v in dom {
                        let mut p = partial.clone();
                        p.insert(name.clone(), v);
                        out.push(p);
                    }
                    return Ok(out);
                }
            }
            filter(cx, e, partial)
        }
        Expr::Unchanged(inner) => {
            if cx.mode == Mode::Init {
                return err("UNCHANGED in an initial predicate");
            }
            let names = resolve_unchanged(cx.ev, inner)?;
            let state = cx.state.expect("action mode has a state");
            let mut p = partial;
            for n in names {
                let cur = state.get(&n).cloned().ok_or_else(|| EvalError {
                    msg: format!("variable {n} is undefined"),
                })?;
                match p.get(&n) {
                    Some(existing) if *existing != cur => return Ok(Vec::new()),
                    Some(_) => {}
                    None => {
                        p.insert(n, cur);
                    }
                }
            }
            Ok(vec![p])
        }
        Expr::If { cond, then, els } => {
            let c = expect_bool(eval(cx, Some(&partial), cond)?, "IF condition")?;
            step_one(cx, if c { then } else { els }, partial)
        }
        Expr::Case { arms, other } => {
            for (cond, val) in arms {
                if expect_bool(eval(cx, Some(&partial), cond)?, "CASE guard")? {
                    return step_one(cx, val, partial);
                }
            }
            match other {
                Some(o) => step_one(cx, o, partial),
                None => err("CASE has no arm whose guard is true"),
            }
        }
        Expr::Let { defs, body } => {
            let depth = cx.locals.len();
            for d in defs {
                if d.params.is_empty() {
                    let v = eval(cx, Some(&partial), &d.body)?;
                    cx.locals.push((d.name.clone(), Local::Val(v)));
                } else {
                    let cl = LetClosure {
                        params: d.params.clone(),
                        body: d.body.clone(),
                        captured: cx.locals.clone(),
                    };
                    cx.locals.push((d.name.clone(), Local::Op(Rc::new(cl))));
                }
            }
            let r = step_one(cx, body, partial);
            cx.locals.truncate(depth);
            r
        }
        Expr::Ident(n) => {
            if cx.lookup_local(n).is_none() {
                if let Some(def) = cx.ev.defs.get(n) {
                    if def.params.is_empty() {
                        let body = def.body.clone();
                        let saved = std::mem::take(&mut cx.locals);
                        let r = step_one(cx, &body, partial);
                        cx.locals = saved;
                        return r;
                    }
                }
            }
            filter(cx, e, partial)
        }
        Expr::Apply(n, args) => {
            if cx.lookup_local(n).is_none() {
                if let Some(def) = cx.ev.defs.get(n).cloned() {
                    if def.params.len() != args.len() {
                        return err(format!(
                            "operator {n} expects {} arguments, got {}",
                            def.params.len(),
                            args.len()
                        ));
                    }
                    let vals = args
                        .iter()
                        .map(|a| eval(cx, Some(&partial), a))
                        .collect::<Result<Vec<_>, _>>()?;
                    let saved = std::mem::take(&mut cx.locals);
                    for (p, a) in def.params.iter().zip(vals) {
                        cx.locals.push((p.clone(), Local::Val(a)));
                    }
                    let r = step_one(cx, &def.body, partial);
                    cx.locals = saved;
                    return r;
                }
            }
            filter(cx, e, partial)
        }
        _ => filter(cx, e, partial),
    }
}

/// The variable a conjunct may bind in the current mode: `x'` in an
/// action, bare `x` in an initial predicate.
fn bind_target(cx: &Cx, lhs: &Expr) -> Option<String> {
    match (cx.mode, lhs) {
        (Mode::Action, Expr::Prime(inner)) => match inner.as_ref() {
            Expr::Ident(n) if cx.ev.is_var(n) => Some(n.clone()),
            _ => None,
        },
        (Mode::Init, Expr::Ident(n)) if cx.ev.is_var(n) && cx.lookup_local(n).is_none() => {
            Some(n.clone())
        }
        _ => None,
    }
}

fn filter(cx: &mut Cx, e: &Expr, partial: State) -> Result<Vec<State>, EvalError> {
    let v = expect_bool(eval(cx, Some(&partial), e)?, "action conjunct")?;
    Ok(if v { vec![partial] } else { Vec::new() })
}

/// Enumerates the states satisfying an initial predicate.
pub fn enumerate_init(ev: &Evaluator, init: &Expr) -> Result<Vec<State>, EvalError> {
    let mut cx = Cx {
        ev,
        state: None,
        locals: Vec::new(),
        mode: Mode::Init,
    };
    let states = step_one(&mut cx, init, State::new())?;
    for s in &states {
        for v in &ev.vars {
            if !s.contains_key(v) {
                return err(format!("the initial predicate does not assign {v}"));
            }
        }
    }
    Ok(states)
}

/// Enumerates the successor states an action statement produces from
/// `state`. Each successor is labeled with the values of the
/// statement's outermost existential binders, which identifies the
/// action instance for fairness analysis.
pub fn enumerate_action(
    ev: &Evaluator,
    statement: &Expr,
    state: &State,
) -> Result<Vec<(Vec<Value>, State)>, EvalError> {
    let mut out = Vec::new();
    let mut cx = Cx {
        ev,
        state: Some(state),
        locals: Vec::new(),
        mode: Mode::Action,
    };
    enumerate_instances(&mut cx, statement, Vec::new(), &mut out)?;
    Ok(out)
}

fn enumerate_instances(
    cx: &mut Cx,
    e: &Expr,
    binding: Vec<Value>,
    out: &mut Vec<(Vec<Value>, State)>,
) -> Result<(), EvalError> {
    if let Expr::Quant {
        kind: QuantKind::Exists,
        binders,
        body,
    } = e
    {
        let empty = State::new();
        for_each_binding::<()>(cx, Some(&empty), binders, &mut |cx| {
            let mut sub_binding = binding.clone();
            for b in binders {
                for v in &b.vars {
                    match cx.lookup_local(v) {
                        Some(Local::Val(val)) => sub_binding.push(val),
                        _ => return err("binder lookup failed"),
                    }
                }
            }
            enumerate_instances(cx, body, sub_binding, out)?;
            Ok(None)
        })?;
        return Ok(());
    }
    for next in step_one(cx, e, State::new())? {
        out.push((binding.clone(), next));
    }
    Ok(())
}

/// Evaluates a state predicate (no primes, no temporal operators).
pub fn eval_state_pred(ev: &Evaluator, pred: &Expr, state: &State) -> Result<bool, EvalError> {
    eval_state_pred_with(ev, pred, state, &[])
}

/// State predicate evaluation with extra name bindings, used when a
/// property's leading universal quantifiers have been expanded.
pub fn eval_state_pred_with(
    ev: &Evaluator,
    pred: &Expr,
    state: &State,
    bindings: &[(String, Value)],
) -> Result<bool, EvalError> {
    let mut cx = Cx {
        ev,
        state: Some(state),
        locals: bindings
            .iter()
            .map(|(n, v)| (n.clone(), Local::Val(v.clone())))
            .collect(),
        mode: Mode::Action,
    };
    expect_bool(eval(&mut cx, None, pred)?, "state predicate")
}

/// Evaluates a constant-level expression (no state at all).
pub fn eval_const_expr(ev: &Evaluator, e: &Expr) -> Result<Value, EvalError> {
    eval_const_expr_with(ev, e, &[])
}

pub fn eval_const_expr_with(
    ev: &Evaluator,
    e: &Expr,
    bindings: &[(String, Value)],
) -> Result<Value, EvalError> {
    let mut cx = Cx {
        ev,
        state: None,
        locals: bindings
            .iter()
            .map(|(n, v)| (n.clone(), Local::Val(v.clone())))
            .collect(),
        mode: Mode::Action,
    };
    eval(&mut cx, None, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::config::parse_tlc_config;
    use crate::tla::parser::parse_module;

    fn evaluator(src: &str, cfg: &str) -> Evaluator {
        let m = parse_module(src).unwrap();
        let c = parse_tlc_config(cfg).unwrap();
        Evaluator::from_module(&m, c.constants).unwrap()
    }

    const LOCKISH: &str = r#"---- MODULE lockish ----
EXTENDS Naturals, FiniteSets
CONSTANT Threads
VARIABLES lock_state, thread_state

vars == <<lock_state, thread_state>>

ThreadAt(t, s) == thread_state[t] = s

Init ==
    /\ lock_state = "unlocked"
    /\ thread_state = [t \in Threads |-> "idle"]

StartLock(t) ==
    /\ ThreadAt(t, "idle")
    /\ thread_state' = [thread_state EXCEPT ![t] = "spinning"]
    /\ UNCHANGED lock_state

Acquire(t) ==
    /\ ThreadAt(t, "spinning")
    /\ lock_state = "unlocked"
    /\ lock_state' = "locked"
    /\ thread_state' = [thread_state EXCEPT ![t] = "in_cs"]

BadGuard(t) ==
    /\ thread_state'[t] = "in_cs"
    /\ lock_state' = "locked"
    /\ UNCHANGED thread_state

Busy == Cardinality({t \in Threads : ThreadAt(t, "in_cs")}) <= 1

Next == \E t \in Threads : StartLock(t)
====
"#;

    const LOCKISH_CFG: &str = "CONSTANT Threads = {\"t1\", \"t2\"}\n";

    #[test]
    fn init_enumerates_single_state() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let init = ev.defs["Init"].body.clone();
        let states = enumerate_init(&ev, &init).unwrap();
        assert_eq!(states.len(), 1);
        let s = &states[0];
        assert_eq!(s["lock_state"], Value::str("unlocked"));
        match &s["thread_state"] {
            Value::Func(m) => {
                assert_eq!(m[&Value::str("t1")], Value::str("idle"));
                assert_eq!(m[&Value::str("t2")], Value::str("idle"));
            }
            other => panic!("wrong shape: {other:?}"),
        }
    }

    #[test]
    fn action_binds_primes_in_order_and_labels_instances() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let init = enumerate_init(&ev, &ev.defs["Init"].body.clone()).unwrap();
        let next = ev.defs["Next"].body.clone();
        let succs = enumerate_action(&ev, &next, &init[0]).unwrap();
        // Both threads can start spinning from the initial state.
        assert_eq!(succs.len(), 2);
        assert_eq!(succs[0].0, vec![Value::str("t1")]);
        assert_eq!(succs[1].0, vec![Value::str("t2")]);
        match &succs[0].1["thread_state"] {
            Value::Func(m) => assert_eq!(m[&Value::str("t1")], Value::str("spinning")),
            other => panic!("wrong shape: {other:?}"),
        }
    }

    #[test]
    fn guard_filters_branches() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let init = enumerate_init(&ev, &ev.defs["Init"].body.clone()).unwrap();
        // Acquire requires a spinning thread; none is spinning initially.
        let stmt = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("\\E t \\in Threads : Acquire(t)").unwrap(),
        )
        .unwrap();
        let succs = enumerate_action(&ev, &stmt, &init[0]).unwrap();
        assert!(succs.is_empty());
    }

    #[test]
    fn reading_an_unbound_prime_is_a_runtime_error() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let init = enumerate_init(&ev, &ev.defs["Init"].body.clone()).unwrap();
        let stmt = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("\\E t \\in Threads : BadGuard(t)").unwrap(),
        )
        .unwrap();
        let e = enumerate_action(&ev, &stmt, &init[0]).unwrap_err();
        assert!(e.msg.contains("thread_state'"), "msg: {}", e.msg);
    }

    #[test]
    fn state_predicates_evaluate_with_std_operators() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let init = enumerate_init(&ev, &ev.defs["Init"].body.clone()).unwrap();
        let busy = ev.defs["Busy"].body.clone();
        assert!(eval_state_pred(&ev, &busy, &init[0]).unwrap());
    }

    #[test]
    fn choose_is_deterministic() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let e = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("CHOOSE x \\in {3, 1, 2} : x > 1").unwrap(),
        )
        .unwrap();
        // Ordered domains make CHOOSE pick the smallest witness.
        assert_eq!(eval_const_expr(&ev, &e).unwrap(), Value::Int(2));
    }

    #[test]
    fn function_sets_enumerate() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let e = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("Cardinality([Threads -> {\"idle\", \"spinning\"}])").unwrap(),
        )
        .unwrap();
        assert_eq!(eval_const_expr(&ev, &e).unwrap(), Value::Int(4));
    }

    #[test]
    fn except_supports_at_and_nested_paths() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let e = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("[[a |-> <<1, 2>>] EXCEPT !.a[2] = @ + 10].a").unwrap(),
        )
        .unwrap();
        assert_eq!(
            eval_const_expr(&ev, &e).unwrap(),
            Value::Seq(vec![Value::Int(1), Value::Int(12)])
        );
    }

    #[test]
    fn unchanged_resolves_through_vars_tuple() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let e = crate::tla::expr::parse_expr_tokens(&crate::tla::lexer::lex("vars").unwrap()).unwrap();
        assert_eq!(
            resolve_unchanged(&ev, &e).unwrap(),
            vec!["lock_state", "thread_state"]
        );
    }

    #[test]
    fn enabled_reports_action_feasibility() {
        let ev = evaluator(LOCKISH, LOCKISH_CFG);
        let init = enumerate_init(&ev, &ev.defs["Init"].body.clone()).unwrap();
        let e = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("ENABLED (\\E t \\in Threads : StartLock(t))").unwrap(),
        )
        .unwrap();
        assert!(eval_state_pred(&ev, &e, &init[0]).unwrap());
        let e2 = crate::tla::expr::parse_expr_tokens(
            &crate::tla::lexer::lex("ENABLED (\\E t \\in Threads : Acquire(t))").unwrap(),
        )
        .unwrap();
        assert!(!eval_state_pred(&ev, &e2, &init[0]).unwrap());
    }
}
