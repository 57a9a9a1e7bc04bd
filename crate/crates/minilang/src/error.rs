//! Error types for the language pipeline and runtime.

use crate::ast::StatementId;
use crate::token::Span;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A statement id that does not name any statement of the program.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("unknown statement location {loc}")]
pub struct UnknownLocation {
    pub loc: StatementId,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("lex error at byte {at}: {message}")]
pub struct LexError {
    pub at: usize,
    pub message: String,
}

/// Parse failures distinguish running out of input from rejecting a token:
/// a prefix that failed with [`ParseError::Incomplete`] may still extend to a
/// well-formed program or expression, one that failed with
/// [`ParseError::Malformed`] never can.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected end of input: expected {expected}")]
    Incomplete { expected: String },
    #[error("unexpected token `{found}` at byte {at}: expected {expected}")]
    Malformed {
        found: String,
        at: usize,
        expected: String,
    },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("type error{}: {message}", span_note(.span))]
pub struct TypeError {
    pub span: Option<Span>,
    pub message: String,
}

impl TypeError {
    pub fn new(span: impl Into<Option<Span>>, message: impl Into<String>) -> Self {
        TypeError {
            span: span.into(),
            message: message.into(),
        }
    }
}

fn span_note(span: &Option<Span>) -> String {
    match span {
        Some(s) => format!(" at bytes {}..{}", s.start, s.end),
        None => String::new(),
    }
}

/// Runtime failures. `Raised` carries the name of the raised exception so
/// test verdicts can match it against `expect` declarations.
#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
pub enum RtErr {
    #[error("division by zero")]
    DivisionByZero,
    #[error("null access")]
    NullAccess,
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: i64, len: usize },
    #[error("call stack overflow")]
    StackOverflow,
    #[error("step limit exceeded")]
    StepLimit,
    #[error("assertion failed: {0}")]
    AssertFailed(String),
    #[error("raised {0}")]
    Raised(String),
    /// Executing a state the type checker should have ruled out; indicates a
    /// bug in the pipeline rather than in the program under test.
    #[error("internal: {0}")]
    Internal(String),
}
