//! Tokenizer for the supported TLA+ subset.
//!
//! Tokens carry byte spans and line/column positions so definition slicing
//! and diagnostics can point back into the original source.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub offset: usize,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(i64),
    Str(String),
    /// `----` or longer; module header/separator bars.
    Dashes,
    /// `====` or longer; module terminator.
    Equals4,
    DefEq,     // ==
    Eq,        // =
    Neq,       // /= or #
    Lt,
    Leq,
    Gt,
    Geq,
    Plus,
    Minus,
    Star,
    Div,       // \div
    Percent,   // %
    DotDot,    // ..
    And,       // /\
    Or,        // \/
    Not,       // ~ or \lnot or \neg
    Implies,   // =>
    Equiv,     // <=>
    In,        // \in
    NotIn,     // \notin
    Cup,       // \cup or \union
    Cap,       // \cap or \intersect
    SetMinus,  // \ (set difference)
    Subseteq,  // \subseteq
    Concat,    // \o
    MapsTo,    // |->
    Arrow,     // ->
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LTuple,    // <<
    RTuple,    // >>
    Comma,
    Colon,
    Semi,
    Dot,
    Bang,      // !
    At,        // @
    Prime,     // '
    Underscore, // _ (subscript separator, e.g. [A]_vars)
    Box,       // []
    Diamond,   // <>
    LeadsTo,   // ~>
    Wf,        // WF_
    Sf,        // SF_
    Forall,    // \A
    Exists,    // \E
    // Keywords
    Module,
    Extends,
    Constant,
    Constants,
    Variable,
    Variables,
    If,
    Then,
    Else,
    Let,
    InKw,
    Choose,
    Except,
    Domain,
    Unchanged,
    Enabled,
    SubsetKw,  // SUBSET
    UnionKw,   // UNION
    Case,
    Other,
    BoolTrue,
    BoolFalse,
    Assume,
    Theorem,
    Local,
    Instance,
    Recursive,
    Lambda,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("unexpected character {found:?} at line {line}, column {col}")]
    UnexpectedChar { found: char, line: u32, col: u32 },
    #[error("unterminated string starting at line {line}, column {col}")]
    UnterminatedString { line: u32, col: u32 },
    #[error("unterminated block comment starting at line {line}, column {col}")]
    UnterminatedComment { line: u32, col: u32 },
    #[error("unknown escape sequence \\{found} at line {line}, column {col}")]
    UnknownBackslashOp { found: String, line: u32, col: u32 },
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0, line: 1, col: 1 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn take(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "MODULE" => Tok::Module,
        "EXTENDS" => Tok::Extends,
        "CONSTANT" => Tok::Constant,
        "CONSTANTS" => Tok::Constants,
        "VARIABLE" => Tok::Variable,
        "VARIABLES" => Tok::Variables,
        "IF" => Tok::If,
        "THEN" => Tok::Then,
        "ELSE" => Tok::Else,
        "LET" => Tok::Let,
        "IN" => Tok::InKw,
        "CHOOSE" => Tok::Choose,
        "EXCEPT" => Tok::Except,
        "DOMAIN" => Tok::Domain,
        "UNCHANGED" => Tok::Unchanged,
        "ENABLED" => Tok::Enabled,
        "SUBSET" => Tok::SubsetKw,
        "UNION" => Tok::UnionKw,
        "CASE" => Tok::Case,
        "OTHER" => Tok::Other,
        "TRUE" => Tok::BoolTrue,
        "FALSE" => Tok::BoolFalse,
        "ASSUME" => Tok::Assume,
        "THEOREM" => Tok::Theorem,
        "LOCAL" => Tok::Local,
        "INSTANCE" => Tok::Instance,
        "RECURSIVE" => Tok::Recursive,
        "LAMBDA" => Tok::Lambda,
        _ => return None,
    })
}

fn backslash_op(word: &str) -> Option<Tok> {
    Some(match word {
        "A" => Tok::Forall,
        "E" => Tok::Exists,
        "in" => Tok::In,
        "notin" => Tok::NotIn,
        "cup" | "union" => Tok::Cup,
        "cap" | "intersect" => Tok::Cap,
        "subseteq" => Tok::Subseteq,
        "div" => Tok::Div,
        "o" => Tok::Concat,
        "lnot" | "neg" => Tok::Not,
        "land" => Tok::And,
        "lor" => Tok::Or,
        "equiv" => Tok::Equiv,
        "leq" => Tok::Leq,
        "geq" => Tok::Geq,
        _ => return None,
    })
}

/// Tokenize a full module source. Comments are skipped; `\*` runs to end of
/// line and `(* ... *)` nests.
pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();

    'outer: loop {
        // Skip whitespace and comments.
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('\\') if cur.peek2() == Some('*') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                Some('(') if cur.peek2() == Some('*') => {
                    let (line, col) = (cur.line, cur.col);
                    cur.take(2);
                    let mut depth = 1usize;
                    loop {
                        if cur.starts_with("(*") {
                            depth += 1;
                            cur.take(2);
                        } else if cur.starts_with("*)") {
                            depth -= 1;
                            cur.take(2);
                            if depth == 0 {
                                break;
                            }
                        } else if cur.bump().is_none() {
                            return Err(LexError::UnterminatedComment { line, col });
                        }
                    }
                }
                _ => break,
            }
        }

        let start = cur.pos;
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.peek() else { break 'outer };

        let mut push = |cur: &Cursor, tok: Tok| {
            out.push(Token { tok, span: Span::new(start, cur.pos), line, col });
        };

        match c {
            '-' if cur.starts_with("----") => {
                while cur.peek() == Some('-') {
                    cur.bump();
                }
                push(&cur, Tok::Dashes);
            }
            '=' if cur.starts_with("====") => {
                while cur.peek() == Some('=') {
                    cur.bump();
                }
                push(&cur, Tok::Equals4);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                // WF_vars / SF_vars lex as one identifier; split the fairness
                // prefix so the parser sees WF_ followed by the subscript.
                if (word.starts_with("WF_") || word.starts_with("SF_")) && word.len() > 3 {
                    let prefix_end = start + 3;
                    out.push(Token {
                        tok: if word.starts_with("WF_") { Tok::Wf } else { Tok::Sf },
                        span: Span::new(start, prefix_end),
                        line,
                        col,
                    });
                    out.push(Token {
                        tok: Tok::Ident(word[3..].to_string()),
                        span: Span::new(prefix_end, cur.pos),
                        line,
                        col: col + 3,
                    });
                } else if word == "WF_" || word == "SF_" {
                    push(&cur, if word == "WF_" { Tok::Wf } else { Tok::Sf });
                } else if word == "_" {
                    push(&cur, Tok::Underscore);
                } else if let Some(kw) = keyword(&word) {
                    push(&cur, kw);
                } else {
                    push(&cur, Tok::Ident(word));
                }
            }
            c if c.is_ascii_digit() => {
                let mut n: i64 = 0;
                while let Some(c) = cur.peek() {
                    if c.is_ascii_digit() {
                        n = n.saturating_mul(10).saturating_add((c as u8 - b'0') as i64);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                push(&cur, Tok::Number(n));
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c) => {
                                s.push('\\');
                                s.push(c);
                            }
                            None => return Err(LexError::UnterminatedString { line, col }),
                        },
                        Some('\n') | None => {
                            return Err(LexError::UnterminatedString { line, col })
                        }
                        Some(c) => s.push(c),
                    }
                }
                push(&cur, Tok::Str(s));
            }
            '\\' => {
                cur.bump();
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphabetic() {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if word.is_empty() {
                    if cur.peek() == Some('/') {
                        cur.bump();
                        push(&cur, Tok::Or);
                    } else {
                        push(&cur, Tok::SetMinus);
                    }
                } else if let Some(tok) = backslash_op(&word) {
                    push(&cur, tok);
                } else {
                    return Err(LexError::UnknownBackslashOp { found: word, line, col });
                }
            }
            '/' => {
                cur.bump();
                match cur.peek() {
                    Some('\\') => {
                        cur.bump();
                        push(&cur, Tok::And);
                    }
                    Some('=') => {
                        cur.bump();
                        push(&cur, Tok::Neq);
                    }
                    _ => return Err(LexError::UnexpectedChar { found: '/', line, col }),
                }
            }
            '<' => {
                cur.bump();
                match cur.peek() {
                    Some('<') => {
                        cur.bump();
                        push(&cur, Tok::LTuple);
                    }
                    Some('=') => {
                        cur.bump();
                        if cur.peek() == Some('>') {
                            cur.bump();
                            push(&cur, Tok::Equiv);
                        } else {
                            push(&cur, Tok::Leq);
                        }
                    }
                    Some('>') => {
                        cur.bump();
                        push(&cur, Tok::Diamond);
                    }
                    _ => push(&cur, Tok::Lt),
                }
            }
            '>' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    push(&cur, Tok::RTuple);
                } else if cur.peek() == Some('=') {
                    cur.bump();
                    push(&cur, Tok::Geq);
                } else {
                    push(&cur, Tok::Gt);
                }
            }
            '=' => {
                cur.bump();
                match cur.peek() {
                    Some('=') => {
                        cur.bump();
                        push(&cur, Tok::DefEq);
                    }
                    Some('>') => {
                        cur.bump();
                        push(&cur, Tok::Implies);
                    }
                    _ => push(&cur, Tok::Eq),
                }
            }
            '~' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    push(&cur, Tok::LeadsTo);
                } else {
                    push(&cur, Tok::Not);
                }
            }
            '[' => {
                cur.bump();
                if cur.peek() == Some(']') {
                    cur.bump();
                    push(&cur, Tok::Box);
                } else {
                    push(&cur, Tok::LBracket);
                }
            }
            ']' => {
                cur.bump();
                push(&cur, Tok::RBracket);
            }
            '|' => {
                cur.bump();
                if cur.starts_with("->") {
                    cur.take(2);
                    push(&cur, Tok::MapsTo);
                } else {
                    return Err(LexError::UnexpectedChar { found: '|', line, col });
                }
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    push(&cur, Tok::Arrow);
                } else {
                    push(&cur, Tok::Minus);
                }
            }
            '(' => {
                cur.bump();
                push(&cur, Tok::LParen);
            }
            ')' => {
                cur.bump();
                push(&cur, Tok::RParen);
            }
            '{' => {
                cur.bump();
                push(&cur, Tok::LBrace);
            }
            '}' => {
                cur.bump();
                push(&cur, Tok::RBrace);
            }
            ',' => {
                cur.bump();
                push(&cur, Tok::Comma);
            }
            ':' => {
                cur.bump();
                push(&cur, Tok::Colon);
            }
            ';' => {
                cur.bump();
                push(&cur, Tok::Semi);
            }
            '.' => {
                cur.bump();
                if cur.peek() == Some('.') {
                    cur.bump();
                    push(&cur, Tok::DotDot);
                } else {
                    push(&cur, Tok::Dot);
                }
            }
            '!' => {
                cur.bump();
                push(&cur, Tok::Bang);
            }
            '@' => {
                cur.bump();
                push(&cur, Tok::At);
            }
            '\'' => {
                cur.bump();
                push(&cur, Tok::Prime);
            }
            '+' => {
                cur.bump();
                push(&cur, Tok::Plus);
            }
            '*' => {
                cur.bump();
                push(&cur, Tok::Star);
            }
            '%' => {
                cur.bump();
                push(&cur, Tok::Percent);
            }
            '#' => {
                cur.bump();
                push(&cur, Tok::Neq);
            }
            other => {
                return Err(LexError::UnexpectedChar { found: other, line, col });
            }
        }
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_module_header() {
        let toks = lex("---- MODULE spinlock ----").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(
            kinds,
            vec![&Tok::Dashes, &Tok::Module, &Tok::Ident("spinlock".into()), &Tok::Dashes]
        );
    }

    #[test]
    fn splits_fairness_prefix() {
        let toks = lex("WF_vars(Unlock(t))").unwrap();
        assert_eq!(toks[0].tok, Tok::Wf);
        assert_eq!(toks[1].tok, Tok::Ident("vars".into()));
    }

    #[test]
    fn rejects_unicode_operators() {
        let err = lex("Init == \u{2200} x").unwrap_err();
        match err {
            LexError::UnexpectedChar { found, line, col } => {
                assert_eq!(found, '\u{2200}');
                assert_eq!(line, 1);
                assert_eq!(col, 9);
            }
            other => panic!("wrong error: {other:?}"),
        }
    }

    #[test]
    fn nested_comments_and_strings() {
        let toks = lex("(* outer (* inner *) still *) x == \"a\\\"b\"").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("x".into()));
        assert_eq!(toks[2].tok, Tok::Str("a\"b".into()));
    }

    #[test]
    fn tracks_positions() {
        let toks = lex("a\n  bc").unwrap();
        assert_eq!((toks[0].line, toks[0].col), (1, 1));
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }
}
