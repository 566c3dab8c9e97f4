//! Runtime values for the builtin model checker.
//!
//! Everything is kept in ordered containers so states have a canonical
//! form: two states are equal iff their maps are equal, and the derived
//! `Ord` gives deterministic iteration everywhere the checker enumerates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
    Set(BTreeSet<Value>),
    /// Tuples and sequences; 1-indexed through `FnApply`.
    Seq(Vec<Value>),
    Record(BTreeMap<String, Value>),
    /// Explicit function, e.g. built by `[x \in S |-> e]`.
    Func(BTreeMap<Value, Value>),
}

/// A state is a total assignment of the module's variables.
pub type State = BTreeMap<String, Value>;

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(s.to_string())
    }

    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Str(_) => "string",
            Value::Set(_) => "set",
            Value::Seq(_) => "sequence",
            Value::Record(_) => "record",
            Value::Func(_) => "function",
        }
    }

    /// Members of a value used as an enumeration domain.
    pub fn domain_members(&self) -> Option<Vec<Value>> {
        match self {
            Value::Set(s) => Some(s.iter().cloned().collect()),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::Set(items) => {
                write!(f, "{{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Seq(items) => {
                write!(f, "<<")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ">>")
            }
            Value::Record(fields) => {
                write!(f, "[")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k} |-> {v}")?;
                }
                write!(f, "]")
            }
            Value::Func(map) => {
                if map.is_empty() {
                    return write!(f, "<<>>");
                }
                write!(f, "(")?;
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        write!(f, " @@ ")?;
                    }
                    write!(f, "{k} :> {v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Renders a state the way counterexample traces print it: one
/// conjunct per variable, in variable order.
pub fn format_state(state: &State) -> String {
    let mut out = String::new();
    for (name, value) in state {
        out.push_str(&format!("/\\ {name} = {value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_ordering_makes_states_comparable() {
        let a = Value::set([Value::Int(2), Value::Int(1)]);
        let b = Value::set([Value::Int(1), Value::Int(2)]);
        assert_eq!(a, b);
    }

    #[test]
    fn display_matches_checker_conventions() {
        let mut rec = BTreeMap::new();
        rec.insert("evt".to_string(), Value::str("Unlock"));
        rec.insert("node".to_string(), Value::str("t1"));
        assert_eq!(
            Value::Record(rec).to_string(),
            "[evt |-> \"Unlock\", node |-> \"t1\"]"
        );
        let mut fun = BTreeMap::new();
        fun.insert(Value::str("t1"), Value::str("idle"));
        assert_eq!(Value::Func(fun).to_string(), "(\"t1\" :> \"idle\")");
        assert_eq!(Value::Bool(true).to_string(), "TRUE");
        assert_eq!(
            Value::Seq(vec![Value::Int(1), Value::Int(2)]).to_string(),
            "<<1, 2>>"
        );
    }

    #[test]
    fn format_state_is_one_conjunct_per_variable() {
        let mut s = State::new();
        s.insert("lock_state".to_string(), Value::str("unlocked"));
        s.insert("ts_cursor".to_string(), Value::Int(1));
        let text = format_state(&s);
        assert_eq!(text, "/\\ lock_state = \"unlocked\"\n/\\ ts_cursor = 1\n");
    }
}
