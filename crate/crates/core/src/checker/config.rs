//! Parser for TLC-style model configuration files.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::checker::value::Value;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CfgError {
    #[error("malformed config at line {line}: {msg}")]
    Malformed { line: u32, msg: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TlcConfig {
    pub specification: Option<String>,
    pub init: Option<String>,
    pub next: Option<String>,
    pub constants: BTreeMap<String, Value>,
    pub invariants: Vec<String>,
    pub properties: Vec<String>,
    pub check_deadlock: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
enum CfgTok {
    Word(String),
    Str(String),
    Num(i64),
    LBrace,
    RBrace,
    Comma,
    Eq,
}

fn tokenize(src: &str) -> Result<Vec<(CfgTok, u32)>, CfgError> {
    let mut toks = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1u32;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '\\' => {
                // Line comment, runs to end of line.
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        break;
                    }
                }
            }
            '(' => {
                // Block comment (* ... *), no nesting needed in configs.
                chars.next();
                if chars.peek() == Some(&'*') {
                    let mut prev = ' ';
                    for c in chars.by_ref() {
                        if c == '\n' {
                            line += 1;
                        }
                        if prev == '*' && c == ')' {
                            break;
                        }
                        prev = c;
                    }
                } else {
                    return Err(CfgError::Malformed {
                        line,
                        msg: "unexpected '('".to_string(),
                    });
                }
            }
            '{' => {
                toks.push((CfgTok::LBrace, line));
                chars.next();
            }
            '}' => {
                toks.push((CfgTok::RBrace, line));
                chars.next();
            }
            ',' => {
                toks.push((CfgTok::Comma, line));
                chars.next();
            }
            '=' => {
                toks.push((CfgTok::Eq, line));
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => {
                            return Err(CfgError::Malformed {
                                line,
                                msg: "unterminated string".to_string(),
                            })
                        }
                    }
                }
                toks.push((CfgTok::Str(s), line));
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut s = String::new();
                s.push(c);
                chars.next();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let n = s.parse::<i64>().map_err(|_| CfgError::Malformed {
                    line,
                    msg: format!("bad number {s}"),
                })?;
                toks.push((CfgTok::Num(n), line));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((CfgTok::Word(s), line));
            }
            '<' => {
                return Err(CfgError::Malformed {
                    line,
                    msg: "operator substitution (<-) is not supported".to_string(),
                });
            }
            other => {
                return Err(CfgError::Malformed {
                    line,
                    msg: format!("unexpected character {other:?}"),
                });
            }
        }
    }
    Ok(toks)
}

const SECTION_KEYWORDS: &[&str] = &[
    "SPECIFICATION",
    "INIT",
    "NEXT",
    "CONSTANT",
    "CONSTANTS",
    "INVARIANT",
    "INVARIANTS",
    "PROPERTY",
    "PROPERTIES",
    "CHECK_DEADLOCK",
    "SYMMETRY",
    "CONSTRAINT",
    "CONSTRAINTS",
    "ACTION_CONSTRAINT",
    "VIEW",
];

struct CfgParser {
    toks: Vec<(CfgTok, u32)>,
    pos: usize,
}

impl CfgParser {
    fn peek(&self) -> Option<&CfgTok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> u32 {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l)| *l)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<CfgTok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> CfgError {
        CfgError::Malformed {
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn expect_word(&mut self, what: &str) -> Result<String, CfgError> {
        match self.next() {
            Some(CfgTok::Word(w)) => Ok(w),
            other => Err(self.err(format!("expected {what}, found {other:?}"))),
        }
    }

    fn parse_value(&mut self) -> Result<Value, CfgError> {
        match self.next() {
            Some(CfgTok::Num(n)) => Ok(Value::Int(n)),
            Some(CfgTok::Str(s)) => Ok(Value::Str(s)),
            Some(CfgTok::Word(w)) if w == "TRUE" => Ok(Value::Bool(true)),
            Some(CfgTok::Word(w)) if w == "FALSE" => Ok(Value::Bool(false)),
            // A bare atom declares a model value; it compares equal only
            // to itself, which string identity already gives us.
            Some(CfgTok::Word(w)) => Ok(Value::Str(w)),
            Some(CfgTok::LBrace) => {
                let mut items = Vec::new();
                if self.peek() == Some(&CfgTok::RBrace) {
                    self.next();
                    return Ok(Value::set(items));
                }
                loop {
                    items.push(self.parse_value()?);
                    match self.next() {
                        Some(CfgTok::Comma) => continue,
                        Some(CfgTok::RBrace) => break,
                        other => {
                            return Err(self.err(format!("expected , or }} in set, found {other:?}")))
                        }
                    }
                }
                Ok(Value::set(items))
            }
            other => Err(self.err(format!("expected value, found {other:?}"))),
        }
    }

    fn take_names(&mut self, out: &mut Vec<String>) {
        while let Some(CfgTok::Word(w)) = self.peek() {
            if SECTION_KEYWORDS.contains(&w.as_str()) {
                break;
            }
            let w = w.clone();
            self.next();
            out.push(w);
        }
    }
}

pub fn parse_tlc_config(src: &str) -> Result<TlcConfig, CfgError> {
    let toks = tokenize(src)?;
    let mut p = CfgParser { toks, pos: 0 };
    let mut cfg = TlcConfig::default();
    while let Some(tok) = p.next() {
        let word = match tok {
            CfgTok::Word(w) => w,
            other => return Err(p.err(format!("expected section keyword, found {other:?}"))),
        };
        match word.as_str() {
            "SPECIFICATION" => cfg.specification = Some(p.expect_word("specification name")?),
            "INIT" => cfg.init = Some(p.expect_word("init predicate name")?),
            "NEXT" => cfg.next = Some(p.expect_word("next relation name")?),
            "CONSTANT" | "CONSTANTS" => {
                // One or more `Name = value` assignments.
                while let Some(CfgTok::Word(w)) = p.peek() {
                    if SECTION_KEYWORDS.contains(&w.as_str()) {
                        break;
                    }
                    let name = p.expect_word("constant name")?;
                    match p.next() {
                        Some(CfgTok::Eq) => {}
                        other => {
                            return Err(p.err(format!("expected = after {name}, found {other:?}")))
                        }
                    }
                    let value = p.parse_value()?;
                    cfg.constants.insert(name, value);
                }
            }
            "INVARIANT" | "INVARIANTS" => p.take_names(&mut cfg.invariants),
            "PROPERTY" | "PROPERTIES" => p.take_names(&mut cfg.properties),
            "CHECK_DEADLOCK" => {
                let w = p.expect_word("TRUE or FALSE")?;
                match w.as_str() {
                    "TRUE" => cfg.check_deadlock = Some(true),
                    "FALSE" => cfg.check_deadlock = Some(false),
                    other => return Err(p.err(format!("CHECK_DEADLOCK takes TRUE/FALSE, found {other}"))),
                }
            }
            "SYMMETRY" | "CONSTRAINT" | "CONSTRAINTS" | "ACTION_CONSTRAINT" | "VIEW" => {
                p.expect_word("name")?;
            }
            other => return Err(p.err(format!("unknown section keyword {other}"))),
        }
    }
    Ok(cfg)
}
