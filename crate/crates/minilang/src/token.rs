//! Token and span types shared by the lexer, parser and everything that
//! manipulates token sequences.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Byte range into the original source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    /// Smallest span covering both inputs.
    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Operator,
    Literal,
    Punctuation,
}

/// One surface token. Equality, ordering and hashing deliberately ignore the
/// span: two tokens are the same token if they have the same kind and text,
/// no matter where (or whether) they occurred in a source file. Synthesized
/// tokens use a default span.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn new(kind: TokenKind, lexeme: impl Into<String>, span: Span) -> Self {
        Token {
            kind,
            lexeme: lexeme.into(),
            span,
        }
    }

    /// Token with no source position, for tokens produced by search rather
    /// than by the lexer.
    pub fn synthetic(kind: TokenKind, lexeme: impl Into<String>) -> Self {
        Token::new(kind, lexeme, Span::default())
    }

    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.lexeme == other.lexeme
    }
}

impl Eq for Token {}

impl PartialOrd for Token {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Token {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.lexeme
            .cmp(&other.lexeme)
            .then(self.kind.cmp(&other.kind))
    }
}

impl std::hash::Hash for Token {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.lexeme.hash(state);
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

/// Keywords of the language. `true`, `false` and `null` are classified as
/// literals, not keywords.
pub const KEYWORDS: &[&str] = &[
    "assert", "bool", "break", "char", "continue", "else", "expect", "fn", "if", "int", "let",
    "new", "pure", "raise", "record", "return", "static", "string", "this", "while",
];

/// Multi-character operators, longest first so the lexer can scan greedily.
pub const OPERATORS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "!", "=",
];

pub const PUNCTUATION: &[&str] = &["(", ")", "{", "}", "[", "]", ",", ";", ":", "."];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Lexeme used for the string-literal hole in synthesized expressions. It can
/// never be produced by the lexer.
pub const STR_PLACEHOLDER: &str = "<str>";
/// Lexeme used for the char-literal hole in synthesized expressions.
pub const CHAR_PLACEHOLDER: &str = "<char>";
