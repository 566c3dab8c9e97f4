//! Expression parser: precedence climbing plus TLA+ junction lists.
//!
//! Junction lists are column-sensitive. Each bullet list records its column;
//! a /\ or \/ token at a column at or left of the innermost open bullet ends
//! the current item rather than binding as an infix operator.

use super::ast::*;
use super::lexer::{Tok, Token};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{msg} at line {line}, column {col}")]
pub struct ExprError {
    pub msg: String,
    pub line: u32,
    pub col: u32,
}

pub struct ExprParser<'a> {
    toks: &'a [Token],
    pos: usize,
    /// Columns of open junction lists, innermost last.
    floors: Vec<u32>,
}

const PREC_EQUIV: u8 = 1;
const PREC_LEADSTO: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_CMP: u8 = 6;
const PREC_RANGE: u8 = 7;
const PREC_SETOP: u8 = 8;
const PREC_ADD: u8 = 9;
const PREC_MUL: u8 = 10;
const PREC_CONCAT: u8 = 11;

fn infix_prec(tok: &Tok) -> Option<(BinOp, u8)> {
    Some(match tok {
        Tok::Equiv => (BinOp::Equiv, PREC_EQUIV),
        Tok::Implies => (BinOp::Implies, PREC_EQUIV),
        Tok::Or => (BinOp::Or, PREC_OR),
        Tok::And => (BinOp::And, PREC_AND),
        Tok::Eq => (BinOp::Eq, PREC_CMP),
        Tok::Neq => (BinOp::Neq, PREC_CMP),
        Tok::Lt => (BinOp::Lt, PREC_CMP),
        Tok::Leq => (BinOp::Leq, PREC_CMP),
        Tok::Gt => (BinOp::Gt, PREC_CMP),
        Tok::Geq => (BinOp::Geq, PREC_CMP),
        Tok::In => (BinOp::In, PREC_CMP),
        Tok::NotIn => (BinOp::NotIn, PREC_CMP),
        Tok::Subseteq => (BinOp::Subseteq, PREC_CMP),
        Tok::DotDot => (BinOp::Range, PREC_RANGE),
        Tok::Cup => (BinOp::Cup, PREC_SETOP),
        Tok::Cap => (BinOp::Cap, PREC_SETOP),
        Tok::SetMinus => (BinOp::SetMinus, PREC_SETOP),
        Tok::Plus => (BinOp::Plus, PREC_ADD),
        Tok::Minus => (BinOp::Minus, PREC_ADD),
        Tok::Star => (BinOp::Mul, PREC_MUL),
        Tok::Div => (BinOp::Div, PREC_MUL),
        Tok::Percent => (BinOp::Mod, PREC_MUL),
        Tok::Concat => (BinOp::Concat, PREC_CONCAT),
        _ => None?,
    })
}

impl<'a> ExprParser<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        ExprParser { toks, pos: 0, floors: Vec::new() }
    }

    /// Parse the whole token slice as one expression.
    pub fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.parse_expr(0)?;
        if self.pos < self.toks.len() {
            return Err(self.err_here("unexpected trailing tokens"));
        }
        Ok(e)
    }

    fn err_here(&self, msg: &str) -> ExprError {
        let (line, col) = self
            .toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|t| (t.line, t.col))
            .unwrap_or((0, 0));
        ExprError { msg: msg.to_string(), line, col }
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_kind_col(&self) -> Option<(Tok, u32)> {
        self.toks.get(self.pos).map(|t| (t.tok.clone(), t.col))
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ExprError> {
        match self.peek_tok() {
            Some(t) if t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(&format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ExprError> {
        match self.peek_tok() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err_here(&format!("expected {what}"))),
        }
    }

    /// True when the junction token at the current position closes the
    /// innermost open bullet list.
    fn hits_floor(&self) -> bool {
        match (self.floors.last(), self.toks.get(self.pos)) {
            (Some(&floor), Some(tok)) => tok.col <= floor,
            _ => false,
        }
    }

    pub fn parse_expr(&mut self, min_prec: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let Some(kind) = self.peek_tok().cloned() else { break };
            match kind {
                Tok::LeadsTo => {
                    if PREC_LEADSTO < min_prec {
                        break;
                    }
                    self.advance();
                    let rhs = self.parse_expr(PREC_LEADSTO + 1)?;
                    lhs = Expr::LeadsTo(Box::new(lhs), Box::new(rhs));
                }
                Tok::And | Tok::Or => {
                    if self.hits_floor() {
                        break;
                    }
                    let (op, prec) = infix_prec(&kind).unwrap();
                    if prec < min_prec {
                        break;
                    }
                    self.advance();
                    let rhs = self.parse_expr(prec + 1)?;
                    lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
                other => {
                    let Some((op, prec)) = infix_prec(&other) else { break };
                    if prec < min_prec {
                        break;
                    }
                    self.advance();
                    let rhs = self.parse_expr(prec + 1)?;
                    lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
            }
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, ExprError> {
        let Some((kind, _col)) = self.peek_kind_col() else {
            return Err(self.err_here("expected expression, found end of input"));
        };
        match kind {
            Tok::And | Tok::Or => self.parse_junction(),
            Tok::Not => {
                self.advance();
                let e = self.parse_expr(PREC_AND + 1)?;
                Ok(Expr::Unary(UnOp::Not, Box::new(e)))
            }
            Tok::Minus => {
                self.advance();
                let e = self.parse_expr(PREC_MUL + 1)?;
                Ok(Expr::Unary(UnOp::Neg, Box::new(e)))
            }
            Tok::Box => {
                self.advance();
                if self.peek_tok() == Some(&Tok::LBracket) {
                    let act = self.parse_bracket()?;
                    match act {
                        e @ Expr::BoxAction { .. } => Ok(Expr::Always(Box::new(e))),
                        _ => Err(self.err_here("expected [A]_v after []")),
                    }
                } else {
                    let e = self.parse_expr(PREC_AND + 1)?;
                    Ok(Expr::Always(Box::new(e)))
                }
            }
            Tok::Diamond => {
                self.advance();
                let e = self.parse_expr(PREC_AND + 1)?;
                Ok(Expr::Eventually(Box::new(e)))
            }
            Tok::Wf | Tok::Sf => {
                let strong = kind == Tok::Sf;
                self.advance();
                let sub = self.parse_subscript_operand()?;
                self.expect(&Tok::LParen, "( after fairness subscript")?;
                let action = self.parse_expr(0)?;
                self.expect(&Tok::RParen, ") after fairness action")?;
                Ok(Expr::Fairness { strong, sub: Box::new(sub), action: Box::new(action) })
            }
            Tok::Unchanged => {
                self.advance();
                let e = self.parse_expr(PREC_CMP + 1)?;
                Ok(Expr::Unchanged(Box::new(e)))
            }
            Tok::Enabled => {
                self.advance();
                let e = self.parse_expr(PREC_CMP + 1)?;
                Ok(Expr::Enabled(Box::new(e)))
            }
            Tok::Domain => {
                self.advance();
                let e = self.parse_expr(PREC_CONCAT)?;
                Ok(Expr::Domain(Box::new(e)))
            }
            Tok::SubsetKw => {
                self.advance();
                let e = self.parse_expr(PREC_CONCAT)?;
                Ok(Expr::Powerset(Box::new(e)))
            }
            Tok::UnionKw => {
                self.advance();
                let e = self.parse_expr(PREC_CONCAT)?;
                Ok(Expr::BigUnion(Box::new(e)))
            }
            Tok::Forall | Tok::Exists => {
                let qk = if kind == Tok::Forall { QuantKind::Forall } else { QuantKind::Exists };
                self.advance();
                let binders = self.parse_binders()?;
                self.expect(&Tok::Colon, ": after quantifier binders")?;
                let body = self.parse_expr(0)?;
                Ok(Expr::Quant { kind: qk, binders, body: Box::new(body) })
            }
            Tok::Choose => {
                self.advance();
                let name = self.ident("bound name after CHOOSE")?;
                self.expect(&Tok::In, "\\in after CHOOSE binder")?;
                let domain = self.parse_expr(PREC_CMP + 1)?;
                self.expect(&Tok::Colon, ": after CHOOSE binder")?;
                let body = self.parse_expr(0)?;
                Ok(Expr::Choose {
                    binder: Binder { vars: vec![name], domain: Box::new(domain) },
                    body: Box::new(body),
                })
            }
            Tok::If => {
                self.advance();
                let cond = self.parse_expr(0)?;
                self.expect(&Tok::Then, "THEN")?;
                let then = self.parse_expr(0)?;
                self.expect(&Tok::Else, "ELSE")?;
                let els = self.parse_expr(0)?;
                Ok(Expr::If { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) })
            }
            Tok::Case => {
                self.advance();
                let mut arms = Vec::new();
                let mut other = None;
                loop {
                    if self.peek_tok() == Some(&Tok::Other) {
                        self.advance();
                        self.expect(&Tok::Arrow, "-> after OTHER")?;
                        other = Some(Box::new(self.parse_expr(0)?));
                    } else {
                        let guard = self.parse_expr(0)?;
                        self.expect(&Tok::Arrow, "-> in CASE arm")?;
                        let e = self.parse_expr(0)?;
                        arms.push((guard, e));
                    }
                    if self.peek_tok() == Some(&Tok::Box) {
                        self.advance();
                        if other.is_some() {
                            return Err(self.err_here("CASE arm after OTHER"));
                        }
                    } else {
                        break;
                    }
                }
                Ok(Expr::Case { arms, other })
            }
            Tok::Let => {
                self.advance();
                let mut defs = Vec::new();
                loop {
                    let name = self.ident("definition name in LET")?;
                    let mut params = Vec::new();
                    if self.peek_tok() == Some(&Tok::LParen) {
                        self.advance();
                        loop {
                            params.push(self.ident("parameter name")?);
                            if self.peek_tok() == Some(&Tok::Comma) {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                        self.expect(&Tok::RParen, ") after parameters")?;
                    }
                    self.expect(&Tok::DefEq, "== in LET definition")?;
                    let body = self.parse_expr(0)?;
                    defs.push(LetDef { name, params, body });
                    match self.peek_tok() {
                        Some(Tok::InKw) => {
                            self.advance();
                            break;
                        }
                        Some(Tok::Ident(_)) => continue,
                        _ => return Err(self.err_here("expected IN after LET definitions")),
                    }
                }
                let body = self.parse_expr(0)?;
                Ok(Expr::Let { defs, body: Box::new(body) })
            }
            Tok::LParen => {
                self.advance();
                self.floors.push(0);
                let e = self.parse_expr(0)?;
                self.floors.pop();
                self.expect(&Tok::RParen, ")")?;
                self.parse_postfix(e)
            }
            Tok::LBrace => self.parse_set(),
            Tok::LTuple => self.parse_tuple(),
            Tok::LBracket => {
                let e = self.parse_bracket()?;
                self.parse_postfix(e)
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        let Some((kind, _)) = self.peek_kind_col() else {
            return Err(self.err_here("expected expression"));
        };
        let e = match kind {
            Tok::Number(n) => {
                self.advance();
                Expr::Num(n)
            }
            Tok::Str(s) => {
                self.advance();
                Expr::Str(s)
            }
            Tok::BoolTrue => {
                self.advance();
                Expr::Bool(true)
            }
            Tok::BoolFalse => {
                self.advance();
                Expr::Bool(false)
            }
            Tok::At => {
                self.advance();
                Expr::AtRef
            }
            Tok::Ident(name) => {
                self.advance();
                if self.peek_tok() == Some(&Tok::LParen) {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek_tok() != Some(&Tok::RParen) {
                        self.floors.push(0);
                        loop {
                            args.push(self.parse_expr(0)?);
                            if self.peek_tok() == Some(&Tok::Comma) {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                        self.floors.pop();
                    }
                    self.expect(&Tok::RParen, ") after arguments")?;
                    Expr::Apply(name, args)
                } else {
                    Expr::Ident(name)
                }
            }
            Tok::Bang => return Err(self.err_here("module references (!) are not supported")),
            other => {
                return Err(self.err_here(&format!("unexpected token {other:?} in expression")))
            }
        };
        self.parse_postfix(e)
    }

    fn parse_postfix(&mut self, mut e: Expr) -> Result<Expr, ExprError> {
        loop {
            match self.peek_tok() {
                Some(Tok::Prime) => {
                    self.advance();
                    e = Expr::Prime(Box::new(e));
                }
                Some(Tok::LBracket) => {
                    self.advance();
                    self.floors.push(0);
                    let mut args = Vec::new();
                    loop {
                        args.push(self.parse_expr(0)?);
                        if self.peek_tok() == Some(&Tok::Comma) {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                    self.floors.pop();
                    self.expect(&Tok::RBracket, "] after function arguments")?;
                    e = Expr::FnApply(Box::new(e), args);
                }
                Some(Tok::Dot) => {
                    self.advance();
                    let field = self.ident("field name after .")?;
                    e = Expr::Dot(Box::new(e), field);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn parse_junction(&mut self) -> Result<Expr, ExprError> {
        let (kind, col) = self.peek_kind_col().unwrap();
        let op = if kind == Tok::And { BinOp::And } else { BinOp::Or };
        let mut items = Vec::new();
        loop {
            self.advance(); // bullet
            self.floors.push(col);
            let item = self.parse_expr(0)?;
            self.floors.pop();
            items.push(item);
            match self.toks.get(self.pos) {
                Some(t) if t.tok == kind && t.col == col => continue,
                _ => break,
            }
        }
        let mut it = items.into_iter();
        let mut acc = it.next().unwrap();
        for next in it {
            acc = Expr::Binary(op, Box::new(acc), Box::new(next));
        }
        Ok(acc)
    }

    fn parse_binders(&mut self) -> Result<Vec<Binder>, ExprError> {
        let mut binders = Vec::new();
        loop {
            let mut vars = vec![self.ident("bound name")?];
            while self.peek_tok() == Some(&Tok::Comma) {
                let save = self.pos;
                self.advance();
                match self.peek_tok() {
                    Some(Tok::Ident(_)) => {
                        let name = self.ident("bound name")?;
                        vars.push(name);
                    }
                    _ => {
                        self.pos = save;
                        break;
                    }
                }
                if self.peek_tok() == Some(&Tok::In) {
                    break;
                }
            }
            self.expect(&Tok::In, "\\in in binder")?;
            let domain = self.parse_expr(PREC_CMP + 1)?;
            binders.push(Binder { vars, domain: Box::new(domain) });
            if self.peek_tok() == Some(&Tok::Comma) {
                self.advance();
            } else {
                break;
            }
        }
        Ok(binders)
    }

    fn parse_set(&mut self) -> Result<Expr, ExprError> {
        self.expect(&Tok::LBrace, "{")?;
        self.floors.push(0);
        if self.peek_tok() == Some(&Tok::RBrace) {
            self.floors.pop();
            self.advance();
            return Ok(Expr::SetEnum(Vec::new()));
        }
        // {x \in S : P} needs lookahead: Ident \in.
        if let (Some(Tok::Ident(name)), Some(Tok::In)) = (
            self.peek_tok().cloned().as_ref(),
            self.toks.get(self.pos + 1).map(|t| &t.tok),
        ) {
            let name = name.clone();
            let save = self.pos;
            self.pos += 2;
            let domain = self.parse_expr(PREC_CMP + 1)?;
            if self.peek_tok() == Some(&Tok::Colon) {
                self.advance();
                let pred = self.parse_expr(0)?;
                self.floors.pop();
                self.expect(&Tok::RBrace, "} after set filter")?;
                return Ok(Expr::SetFilter {
                    binder: Binder { vars: vec![name], domain: Box::new(domain) },
                    pred: Box::new(pred),
                });
            }
            self.pos = save;
        }
        let first = self.parse_expr(0)?;
        match self.peek_tok() {
            Some(Tok::Colon) => {
                self.advance();
                let binders = self.parse_binders()?;
                self.floors.pop();
                self.expect(&Tok::RBrace, "} after set map")?;
                Ok(Expr::SetMap { expr: Box::new(first), binders })
            }
            _ => {
                let mut items = vec![first];
                while self.peek_tok() == Some(&Tok::Comma) {
                    self.advance();
                    items.push(self.parse_expr(0)?);
                }
                self.floors.pop();
                self.expect(&Tok::RBrace, "} after set elements")?;
                Ok(Expr::SetEnum(items))
            }
        }
    }

    fn parse_tuple(&mut self) -> Result<Expr, ExprError> {
        self.expect(&Tok::LTuple, "<<")?;
        self.floors.push(0);
        let mut items = Vec::new();
        if self.peek_tok() != Some(&Tok::RTuple) {
            loop {
                items.push(self.parse_expr(0)?);
                if self.peek_tok() == Some(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.floors.pop();
        self.expect(&Tok::RTuple, ">> after tuple")?;
        // <<A>>_v action form.
        if let Some(sub) = self.try_subscript()? {
            if items.len() != 1 {
                return Err(self.err_here("<<A>>_v takes exactly one action"));
            }
            return Ok(Expr::AngleAction {
                action: Box::new(items.pop().unwrap()),
                sub: Box::new(sub),
            });
        }
        self.parse_postfix(Expr::Tuple(items))
    }

    /// After `]` or `>>`, parse `_name` or `_<<tuple>>` if present.
    fn try_subscript(&mut self) -> Result<Option<Expr>, ExprError> {
        match self.peek_tok() {
            Some(Tok::Ident(s)) if s.starts_with('_') && s.len() > 1 => {
                let name = s[1..].to_string();
                self.advance();
                Ok(Some(Expr::Ident(name)))
            }
            Some(Tok::Underscore) => {
                self.advance();
                let sub = self.parse_subscript_operand()?;
                Ok(Some(sub))
            }
            _ => Ok(None),
        }
    }

    fn parse_subscript_operand(&mut self) -> Result<Expr, ExprError> {
        match self.peek_tok() {
            Some(Tok::Ident(_)) => Ok(Expr::Ident(self.ident("subscript")?)),
            Some(Tok::LTuple) => self.parse_tuple(),
            _ => Err(self.err_here("expected subscript after _")),
        }
    }

    fn parse_bracket(&mut self) -> Result<Expr, ExprError> {
        self.expect(&Tok::LBracket, "[")?;
        self.floors.push(0);
        // Record constructor / record set: Ident |-> or Ident :.
        if let (Some(Tok::Ident(_)), Some(t2)) =
            (self.peek_tok(), self.toks.get(self.pos + 1).map(|t| &t.tok))
        {
            if *t2 == Tok::MapsTo || *t2 == Tok::Colon {
                let is_record = *t2 == Tok::MapsTo;
                let mut fields = Vec::new();
                loop {
                    let name = self.ident("record field")?;
                    self.expect(
                        if is_record { &Tok::MapsTo } else { &Tok::Colon },
                        "field separator",
                    )?;
                    let v = self.parse_expr(0)?;
                    fields.push((name, v));
                    if self.peek_tok() == Some(&Tok::Comma) {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.floors.pop();
                self.expect(&Tok::RBracket, "] after record")?;
                return Ok(if is_record { Expr::Record(fields) } else { Expr::RecordSet(fields) });
            }
        }
        // Function definition [x \in S |-> e]: speculative binder parse.
        let save = self.pos;
        if let Ok(binders) = self.parse_binders() {
            if self.peek_tok() == Some(&Tok::MapsTo) {
                self.advance();
                let body = self.parse_expr(0)?;
                self.floors.pop();
                self.expect(&Tok::RBracket, "] after function definition")?;
                return Ok(Expr::FnDef { binders, body: Box::new(body) });
            }
        }
        self.pos = save;
        let first = self.parse_expr(0)?;
        match self.peek_tok() {
            Some(Tok::Except) => {
                self.advance();
                let mut specs = Vec::new();
                loop {
                    self.expect(&Tok::Bang, "! in EXCEPT")?;
                    let mut path = Vec::new();
                    loop {
                        match self.peek_tok() {
                            Some(Tok::LBracket) => {
                                self.advance();
                                let mut idx = vec![self.parse_expr(0)?];
                                while self.peek_tok() == Some(&Tok::Comma) {
                                    self.advance();
                                    idx.push(self.parse_expr(0)?);
                                }
                                self.expect(&Tok::RBracket, "] in EXCEPT path")?;
                                for e in idx {
                                    path.push(ExceptPath::Index(e));
                                }
                            }
                            Some(Tok::Dot) => {
                                self.advance();
                                let f = self.ident("field in EXCEPT path")?;
                                path.push(ExceptPath::Field(f));
                            }
                            _ => break,
                        }
                    }
                    if path.is_empty() {
                        return Err(self.err_here("empty EXCEPT path"));
                    }
                    self.expect(&Tok::Eq, "= in EXCEPT")?;
                    let v = self.parse_expr(0)?;
                    specs.push((path, v));
                    if self.peek_tok() == Some(&Tok::Comma) {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.floors.pop();
                self.expect(&Tok::RBracket, "] after EXCEPT")?;
                Ok(Expr::Except { base: Box::new(first), specs })
            }
            Some(Tok::Arrow) => {
                self.advance();
                let rng = self.parse_expr(0)?;
                self.floors.pop();
                self.expect(&Tok::RBracket, "] after function set")?;
                Ok(Expr::FnSet { dom: Box::new(first), rng: Box::new(rng) })
            }
            Some(Tok::RBracket) => {
                self.floors.pop();
                self.advance();
                if let Some(sub) = self.try_subscript()? {
                    Ok(Expr::BoxAction { action: Box::new(first), sub: Box::new(sub) })
                } else {
                    Err(self.err_here("expected |->, EXCEPT, -> or ]_v in [ ] form"))
                }
            }
            _ => Err(self.err_here("unsupported [ ] form")),
        }
    }
}

/// Parse a standalone expression from tokens.
pub fn parse_expr_tokens(toks: &[Token]) -> Result<Expr, ExprError> {
    ExprParser::new(toks).parse_all()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tla::lexer::lex;

    fn parse(src: &str) -> Expr {
        parse_expr_tokens(&lex(src).unwrap()).unwrap()
    }

    #[test]
    fn parses_junction_list() {
        let e = parse("/\\ a\n/\\ b\n/\\ c");
        assert_eq!(e.conjuncts().len(), 3);
    }

    #[test]
    fn junction_alignment_nests() {
        let e = parse("/\\ a\n/\\ \\/ b\n   \\/ c\n/\\ d");
        let cs = e.conjuncts();
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[1].disjuncts().len(), 2);
    }

    #[test]
    fn inline_junction_is_infix() {
        let e = parse("a /\\ b /\\ c");
        assert_eq!(e.conjuncts().len(), 3);
    }

    #[test]
    fn parses_except_with_at() {
        let e = parse("[f EXCEPT ![t] = @ + 1]");
        match e {
            Expr::Except { specs, .. } => assert_eq!(specs.len(), 1),
            other => panic!("wrong parse: {other:?}"),
        }
    }

    #[test]
    fn parses_quantified_action() {
        let e = parse("\\E t \\in Threads : Acquire(t)");
        match e {
            Expr::Quant { kind: QuantKind::Exists, binders, body } => {
                assert_eq!(binders[0].vars, vec!["t"]);
                assert_eq!(*body, Expr::Apply("Acquire".into(), vec![Expr::Ident("t".into())]));
            }
            other => panic!("wrong parse: {other:?}"),
        }
    }

    #[test]
    fn parses_temporal_spec() {
        let e = parse("Init /\\ [][Next]_vars /\\ WF_vars(Unlock(t))");
        let cs = e.conjuncts();
        assert_eq!(cs.len(), 3);
        assert!(matches!(cs[1], Expr::Always(_)));
        assert!(matches!(cs[2], Expr::Fairness { strong: false, .. }));
    }

    #[test]
    fn parses_function_def_vs_membership() {
        let f = parse("[t \\in Threads |-> \"idle\"]");
        assert!(matches!(f, Expr::FnDef { .. }));
        let m = parse("[Threads -> {\"idle\", \"busy\"}]");
        assert!(matches!(m, Expr::FnSet { .. }));
    }

    #[test]
    fn parses_leads_to() {
        let e = parse("a = 1 ~> b = 2");
        assert!(matches!(e, Expr::LeadsTo(..)));
    }

    #[test]
    fn junction_stops_at_then() {
        let e = parse("IF /\\ a\n   /\\ b\nTHEN 1\nELSE 2");
        match e {
            Expr::If { cond, .. } => assert_eq!(cond.conjuncts().len(), 2),
            other => panic!("wrong parse: {other:?}"),
        }
    }
}
