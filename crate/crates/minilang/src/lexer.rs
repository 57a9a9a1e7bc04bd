//! Hand-written scanner. Comments (`//` and `/* */`) are dropped; everything
//! else becomes a token. Numbers are unsigned digit runs, so `-1` lexes as
//! two tokens and the minus is resolved as a unary operator by the parser.

use crate::error::LexError;
use crate::token::{is_keyword, Span, Token, TokenKind, OPERATORS};

pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'*' {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(LexError {
                        at: start,
                        message: "unterminated block comment".into(),
                    });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &source[start..i];
            let kind = if is_keyword(word) {
                TokenKind::Keyword
            } else if word == "true" || word == "false" || word == "null" {
                TokenKind::Literal
            } else {
                TokenKind::Identifier
            };
            out.push(Token::new(kind, word, Span::new(start, i)));
            continue;
        }
        if b.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token::new(
                TokenKind::Literal,
                &source[start..i],
                Span::new(start, i),
            ));
            continue;
        }
        if b == b'"' || b == b'\'' {
            let start = i;
            let quote = b;
            i += 1;
            loop {
                if i >= bytes.len() || bytes[i] == b'\n' {
                    return Err(LexError {
                        at: start,
                        message: format!(
                            "unterminated {} literal",
                            if quote == b'"' { "string" } else { "char" }
                        ),
                    });
                }
                if bytes[i] == b'\\' {
                    if i + 1 >= bytes.len() {
                        return Err(LexError {
                            at: i,
                            message: "dangling escape".into(),
                        });
                    }
                    match bytes[i + 1] {
                        b'n' | b't' | b'\\' | b'\'' | b'"' | b'0' => i += 2,
                        other => {
                            return Err(LexError {
                                at: i,
                                message: format!("unknown escape `\\{}`", other as char),
                            })
                        }
                    }
                    continue;
                }
                if bytes[i] == quote {
                    i += 1;
                    break;
                }
                if !bytes[i].is_ascii() {
                    return Err(LexError {
                        at: i,
                        message: "non-ascii character in literal".into(),
                    });
                }
                i += 1;
            }
            let lexeme = &source[start..i];
            if quote == b'\'' && unescape_char(lexeme).is_none() {
                return Err(LexError {
                    at: start,
                    message: "char literal must hold exactly one character".into(),
                });
            }
            out.push(Token::new(TokenKind::Literal, lexeme, Span::new(start, i)));
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| source[i..].starts_with(**op)) {
            out.push(Token::new(TokenKind::Operator, *op, Span::new(i, i + op.len())));
            i += op.len();
            continue;
        }
        if matches!(
            b,
            b'(' | b')' | b'{' | b'}' | b'[' | b']' | b',' | b';' | b':' | b'.'
        ) {
            out.push(Token::new(
                TokenKind::Punctuation,
                &source[i..i + 1],
                Span::new(i, i + 1),
            ));
            i += 1;
            continue;
        }
        return Err(LexError {
            at: i,
            message: format!("unexpected character `{}`", b as char),
        });
    }
    Ok(out)
}

/// Decode a quoted string lexeme (delimiters included) to its value.
pub fn unescape_string(lexeme: &str) -> Option<String> {
    let inner = lexeme.strip_prefix('"')?.strip_suffix('"')?;
    decode_escapes(inner)
}

/// Decode a quoted char lexeme (delimiters included) to its value. Returns
/// `None` unless the body is exactly one character after unescaping.
pub fn unescape_char(lexeme: &str) -> Option<char> {
    let inner = lexeme.strip_prefix('\'')?.strip_suffix('\'')?;
    let decoded = decode_escapes(inner)?;
    let mut chars = decoded.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

fn decode_escapes(body: &str) -> Option<String> {
    let mut out = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            'n' => out.push('\n'),
            't' => out.push('\t'),
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            '0' => out.push('\0'),
            _ => return None,
        }
    }
    Some(out)
}

/// Escape a char value back to a quoted lexeme.
pub fn escape_char(c: char) -> String {
    match c {
        '\n' => "'\\n'".into(),
        '\t' => "'\\t'".into(),
        '\\' => "'\\\\'".into(),
        '\'' => "'\\''".into(),
        '\0' => "'\\0'".into(),
        other => format!("'{other}'"),
    }
}

/// Escape a string value back to a quoted lexeme.
pub fn escape_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\0' => out.push_str("\\0"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}
