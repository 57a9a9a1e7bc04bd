//! MiniLang: a small statically typed language with records, methods and a
//! test-oriented runtime.
//!
//! The crate covers the whole pipeline from source text to test verdicts:
//! lexing ([`lexer`]), parsing ([`parser`]), type checking ([`typecheck`]),
//! scope queries ([`scope`]), pretty printing ([`unparse`]), interpretation
//! and test execution ([`interp`]), and a pausing debug probe that evaluates
//! expression candidates at a chosen statement ([`probe`]).

pub mod ast;
pub mod error;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod probe;
pub mod scope;
pub mod token;
pub mod typecheck;
pub mod types;
pub mod unparse;

pub use ast::{Expr, ExprId, ExprKind, FnDecl, Program, StatementId, Stmt, StmtKind};
pub use error::{LexError, ParseError, RtErr, TypeError};
pub use interp::{run_tests, RunOptions, TestOutcome, TestReport, Verdict};
pub use lexer::lex;
pub use parser::{parse, parse_expr_tokens};
pub use probe::{probe, ProbeRequest, ProbeResult, TriVal};
pub use scope::{legal_identifiers, ScopeEntry, ScopeOrigin};
pub use token::{Span, Token, TokenKind};
pub use typecheck::{typecheck, typecheck_expr_at, CheckedExpr, TypedProgram};
pub use types::{MemberSig, Type, TypeInfo};
pub use unparse::{render_expr, render_program, render_tokens};
