//! TLA+ frontend: lexing, module structure, expression parsing, and the
//! action-level decomposition the syntax metric is built on.

pub mod actions;
pub mod ast;
pub mod expr;
pub mod lexer;
pub mod parser;
pub mod slice;

pub use actions::{decompose_next, ActionDef, ActionSet, DecomposeError};
pub use ast::{BinOp, Expr, UnOp};
pub use lexer::{lex, LexError, Tok, Token};
pub use parser::{parse_module, FrontendError, OperatorDef, TlaModule};
pub use slice::{synthesize_action_spec, SliceError};
