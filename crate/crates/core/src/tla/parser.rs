//! Module-structure parser: header, EXTENDS, declarations, and operator
//! definition boundaries with byte spans back into the source.
//!
//! Definition bodies are kept as token ranges plus source spans; expression
//! parsing happens on demand so unusual constructs inside one body do not
//! prevent slicing the others.

use super::ast::Expr;
use super::expr::{parse_expr_tokens, ExprError};
use super::lexer::{lex, LexError, Span, Tok, Token};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("lexical error: {0}")]
    Lexical(#[from] LexError),
    #[error("malformed module structure: {msg} at line {line}")]
    Malformed { msg: String, line: u32 },
    #[error("unsupported construct: {what} at line {line}")]
    UnsupportedConstruct { what: String, line: u32 },
}

/// One operator definition with its exact source extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorDef {
    pub name: String,
    pub params: Vec<String>,
    /// Byte span of the whole definition, `Name(params) == body`.
    pub span: Span,
    /// Byte span of the body, after `==`.
    pub body_span: Span,
    /// Token index range of the body in the module token stream.
    pub body_toks: (usize, usize),
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct TlaModule {
    pub name: String,
    pub extends: Vec<String>,
    pub constants: Vec<String>,
    pub variables: Vec<String>,
    pub defs: Vec<OperatorDef>,
    pub source: String,
    pub tokens: Vec<Token>,
}

impl TlaModule {
    pub fn def(&self, name: &str) -> Option<&OperatorDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    /// Exact source text of one definition.
    pub fn def_text(&self, d: &OperatorDef) -> &str {
        &self.source[d.span.start..d.span.end]
    }

    /// Parse a definition body into an expression AST.
    pub fn def_expr(&self, d: &OperatorDef) -> Result<Expr, ExprError> {
        parse_expr_tokens(&self.tokens[d.body_toks.0..d.body_toks.1])
    }

    /// Identifier names referenced in a definition body. Includes bound
    /// names; callers intersect with defined names, so spurious entries are
    /// harmless for closure computation.
    pub fn referenced_names(&self, d: &OperatorDef) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.tokens[d.body_toks.0..d.body_toks.1] {
            if let Tok::Ident(s) = &t.tok {
                out.insert(s.clone());
            }
        }
        out
    }

    /// Transitive closure of module-level definitions a definition depends
    /// on, in source order, excluding the definition itself.
    pub fn dependency_closure(&self, name: &str) -> Vec<String> {
        let mut wanted: BTreeSet<String> = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(n) = stack.pop() {
            let Some(d) = self.def(&n) else { continue };
            for r in self.referenced_names(d) {
                if r != name && self.def(&r).is_some() && wanted.insert(r.clone()) {
                    stack.push(r);
                }
            }
        }
        self.defs
            .iter()
            .map(|d| d.name.clone())
            .filter(|n| wanted.contains(n) && n != name)
            .collect()
    }
}

struct ModParser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> ModParser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn line_here(&self) -> u32 {
        self.peek().map(|t| t.line).unwrap_or(0)
    }

    fn malformed(&self, msg: &str) -> FrontendError {
        FrontendError::Malformed { msg: msg.to_string(), line: self.line_here() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<&Token, FrontendError> {
        match self.toks.get(self.pos) {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.malformed(&format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, FrontendError> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Ident(s), .. }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.malformed(&format!("expected {what}"))),
        }
    }

    fn ident_list(&mut self, what: &str) -> Result<Vec<String>, FrontendError> {
        let mut names = vec![self.ident(what)?];
        while self.peek().map(|t| &t.tok) == Some(&Tok::Comma) {
            self.pos += 1;
            names.push(self.ident(what)?);
        }
        Ok(names)
    }

    /// Skip a nested `---- MODULE ... ====` block.
    fn skip_nested_module(&mut self) -> Result<(), FrontendError> {
        let mut depth = 1usize;
        self.pos += 1; // past the Dashes that begins the nested header
        while let Some(t) = self.toks.get(self.pos) {
            match t.tok {
                Tok::Dashes
                    if self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Module) =>
                {
                    depth += 1;
                    self.pos += 2;
                }
                Tok::Equals4 => {
                    depth -= 1;
                    self.pos += 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => self.pos += 1,
            }
        }
        Err(self.malformed("unterminated nested module"))
    }

    /// True if the token at `i` begins a definition: Ident [(params)] ==.
    fn def_starts_at(&self, i: usize) -> bool {
        let Some(Token { tok: Tok::Ident(_), .. }) = self.toks.get(i) else { return false };
        match self.toks.get(i + 1).map(|t| &t.tok) {
            Some(Tok::DefEq) => true,
            Some(Tok::LParen) => {
                // Ident ( p1, p2 ) ==
                let mut j = i + 2;
                loop {
                    match self.toks.get(j).map(|t| &t.tok) {
                        Some(Tok::Ident(_)) => j += 1,
                        Some(Tok::Underscore) => j += 1,
                        _ => return false,
                    }
                    match self.toks.get(j).map(|t| &t.tok) {
                        Some(Tok::Comma) => j += 1,
                        Some(Tok::RParen) => {
                            return self.toks.get(j + 1).map(|t| &t.tok) == Some(&Tok::DefEq)
                        }
                        _ => return false,
                    }
                }
            }
            _ => false,
        }
    }

    /// Advance past a definition body, honoring bracket and LET/IN nesting.
    /// Stops before the next top-level definition start, declaration keyword,
    /// or module end. Returns the token index one past the body's last token.
    fn skip_body(&mut self) -> usize {
        let mut depth: i64 = 0;
        let mut let_depth: i64 = 0;
        while let Some(t) = self.toks.get(self.pos) {
            match &t.tok {
                Tok::LParen | Tok::LBracket | Tok::LBrace | Tok::LTuple => depth += 1,
                Tok::RParen | Tok::RBracket | Tok::RBrace | Tok::RTuple => depth -= 1,
                Tok::Let => let_depth += 1,
                Tok::InKw => {
                    if let_depth > 0 {
                        let_depth -= 1
                    }
                }
                Tok::Equals4 | Tok::Dashes => break,
                Tok::Constant | Tok::Constants | Tok::Variable | Tok::Variables
                | Tok::Assume | Tok::Theorem | Tok::Local | Tok::Instance | Tok::Recursive
                    if depth == 0 && let_depth == 0 =>
                {
                    break
                }
                Tok::Ident(_) if depth == 0 && let_depth == 0 && self.def_starts_at(self.pos) => {
                    break
                }
                _ => {}
            }
            self.pos += 1;
        }
        self.pos
    }
}

/// Parse module structure: name, EXTENDS, declarations, definition spans.
pub fn parse_module(src: &str) -> Result<TlaModule, FrontendError> {
    let tokens = lex(src)?;
    let mut p = ModParser { toks: &tokens, pos: 0 };

    p.expect(Tok::Dashes, "module header dashes")?;
    p.expect(Tok::Module, "MODULE keyword")?;
    let name = p.ident("module name")?;
    p.expect(Tok::Dashes, "closing header dashes")?;

    let mut extends = Vec::new();
    let mut constants = Vec::new();
    let mut variables = Vec::new();
    let mut defs: Vec<OperatorDef> = Vec::new();

    if p.peek().map(|t| &t.tok) == Some(&Tok::Extends) {
        p.pos += 1;
        extends = p.ident_list("extended module name")?;
    }

    loop {
        let Some(t) = p.peek() else {
            return Err(FrontendError::Malformed {
                msg: "missing module terminator ====".into(),
                line: 0,
            });
        };
        match &t.tok {
            Tok::Equals4 => break,
            Tok::Dashes => {
                if p.toks.get(p.pos + 1).map(|t| &t.tok) == Some(&Tok::Module) {
                    p.skip_nested_module()?;
                } else {
                    p.pos += 1; // separator bar
                }
            }
            Tok::Constant | Tok::Constants => {
                p.pos += 1;
                constants.extend(p.ident_list("constant name")?);
            }
            Tok::Variable | Tok::Variables => {
                p.pos += 1;
                variables.extend(p.ident_list("variable name")?);
            }
            Tok::Assume | Tok::Theorem => {
                p.pos += 1;
                p.skip_body();
            }
            Tok::Recursive => {
                p.pos += 1;
                p.skip_body();
            }
            Tok::Local | Tok::Instance => {
                return Err(FrontendError::UnsupportedConstruct {
                    what: "INSTANCE/LOCAL module composition".into(),
                    line: t.line,
                });
            }
            Tok::Ident(_) if p.def_starts_at(p.pos) => {
                let start_tok = p.peek().unwrap().clone();
                let def_name = p.ident("definition name")?;
                let mut params = Vec::new();
                if p.peek().map(|t| &t.tok) == Some(&Tok::LParen) {
                    p.pos += 1;
                    loop {
                        match p.toks.get(p.pos).map(|t| t.tok.clone()) {
                            Some(Tok::Ident(s)) => {
                                params.push(s);
                                p.pos += 1;
                            }
                            Some(Tok::Underscore) => {
                                params.push("_".into());
                                p.pos += 1;
                            }
                            _ => return Err(p.malformed("expected parameter name")),
                        }
                        match p.toks.get(p.pos).map(|t| &t.tok) {
                            Some(Tok::Comma) => p.pos += 1,
                            Some(Tok::RParen) => {
                                p.pos += 1;
                                break;
                            }
                            _ => return Err(p.malformed("expected , or ) in parameters")),
                        }
                    }
                }
                p.expect(Tok::DefEq, "==")?;
                let body_start_tok = p.pos;
                if p.peek().is_none() {
                    return Err(p.malformed("definition body missing"));
                }
                let body_end_tok = p.skip_body();
                if body_end_tok == body_start_tok {
                    return Err(FrontendError::Malformed {
                        msg: format!("definition {def_name} has an empty body"),
                        line: start_tok.line,
                    });
                }
                let body_span = Span::new(
                    p.toks[body_start_tok].span.start,
                    p.toks[body_end_tok - 1].span.end,
                );
                defs.push(OperatorDef {
                    name: def_name,
                    params,
                    span: Span::new(start_tok.span.start, body_span.end),
                    body_span,
                    body_toks: (body_start_tok, body_end_tok),
                    line: start_tok.line,
                });
            }
            other => {
                return Err(FrontendError::Malformed {
                    msg: format!("unexpected token {other:?} at module level"),
                    line: t.line,
                });
            }
        }
    }

    Ok(TlaModule {
        name,
        extends,
        constants,
        variables,
        defs,
        source: src.to_string(),
        tokens,
    })
}
