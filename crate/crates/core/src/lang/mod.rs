//! SLANG: a line-oriented imperative mini-language with one statement per
//! line and `end`-terminated blocks, so that deleting a line deletes exactly
//! one statement.

mod ast;
mod interp;
mod lexer;
mod parser;
mod source;
mod value;

pub use ast::{Ast, BinOp, ElseBranch, Expr, Function, LineStmt, Stmt, StmtKind, UnOp};
pub use interp::{
    execute, Call, CallError, ErrorKind, ExecutionResult, ObservationTrace, RuntimeError, Status,
    Watch, DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH,
};
pub use lexer::{tokenize, Keyword, Token};
pub use parser::{parse, parse_line, ParseError, BUILTIN_LEN};
pub use source::{count_sloc, LineKind, SourceProgram};
pub use value::Value;
