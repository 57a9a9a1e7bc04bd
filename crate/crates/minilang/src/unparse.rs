//! Canonical source rendering. Rendering a parsed program and reparsing it
//! yields the same token sequence; rendering is idempotent, so corpus files
//! kept in canonical form survive patch splicing byte-for-byte outside the
//! patched region.

use crate::ast::*;
use crate::lexer::{escape_char, escape_string};
use crate::token::{Token, TokenKind, CHAR_PLACEHOLDER, STR_PLACEHOLDER};

const INDENT: &str = "    ";

pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, item) in p.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Record(r) => render_record(r, &mut out),
            Item::Fn(f) => render_fn(f, 0, &mut out),
        }
    }
    out
}

fn render_record(r: &RecordDecl, out: &mut String) {
    out.push_str(&format!("record {} {{\n", r.name));
    let mut wrote = false;
    for f in &r.fields {
        out.push_str(&format!("{INDENT}{}: {};\n", f.name, render_type(&f.ty)));
        wrote = true;
    }
    for s in &r.statics {
        out.push_str(&format!(
            "{INDENT}static {}: {} = {};\n",
            s.name,
            render_type(&s.ty),
            render_expr(&s.init)
        ));
        wrote = true;
    }
    for m in &r.methods {
        if wrote {
            out.push('\n');
        }
        render_fn(m, 1, out);
        wrote = true;
    }
    out.push_str("}\n");
}

fn render_fn(f: &FnDecl, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    out.push_str(&pad);
    if f.is_static {
        out.push_str("static ");
    }
    if f.is_pure {
        out.push_str("pure ");
    }
    out.push_str("fn ");
    out.push_str(&f.name);
    out.push('(');
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{}: {}", p.name, render_type(&p.ty)));
    }
    out.push(')');
    if let Some(ret) = &f.ret {
        out.push_str(&format!(": {}", render_type(ret)));
    }
    out.push_str(" {\n");
    render_block_body(&f.body, depth + 1, out);
    out.push_str(&format!("{pad}}}\n"));
}

fn render_block_body(b: &Block, depth: usize, out: &mut String) {
    for s in &b.stmts {
        render_stmt(s, depth, out);
    }
}

fn render_stmt(s: &Stmt, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    match &s.kind {
        StmtKind::Let { name, ty, init } => {
            out.push_str(&format!(
                "{pad}let {name}: {} = {};\n",
                render_type(ty),
                render_expr(init)
            ));
        }
        StmtKind::Assign { target, value } => {
            out.push_str(&format!(
                "{pad}{} = {};\n",
                render_expr(target),
                render_expr(value)
            ));
        }
        StmtKind::If { cond, then, els } => {
            out.push_str(&format!("{pad}if ({}) {{\n", render_expr(cond)));
            render_block_body(then, depth + 1, out);
            let mut els = els;
            loop {
                match els {
                    None => break,
                    Some(b) => {
                        // A lone `if` in the else block renders as `else if`.
                        if b.stmts.len() == 1 {
                            if let StmtKind::If {
                                cond: c2,
                                then: t2,
                                els: e2,
                            } = &b.stmts[0].kind
                            {
                                out.push_str(&format!("{pad}}} else if ({}) {{\n", render_expr(c2)));
                                render_block_body(t2, depth + 1, out);
                                els = e2;
                                continue;
                            }
                        }
                        out.push_str(&format!("{pad}}} else {{\n"));
                        render_block_body(b, depth + 1, out);
                        break;
                    }
                }
            }
            out.push_str(&format!("{pad}}}\n"));
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("{pad}while ({}) {{\n", render_expr(cond)));
            render_block_body(body, depth + 1, out);
            out.push_str(&format!("{pad}}}\n"));
        }
        StmtKind::Return(None) => out.push_str(&format!("{pad}return;\n")),
        StmtKind::Return(Some(e)) => out.push_str(&format!("{pad}return {};\n", render_expr(e))),
        StmtKind::Break => out.push_str(&format!("{pad}break;\n")),
        StmtKind::Continue => out.push_str(&format!("{pad}continue;\n")),
        StmtKind::Assert(e) => out.push_str(&format!("{pad}assert {};\n", render_expr(e))),
        StmtKind::Expect(name) => out.push_str(&format!("{pad}expect {name};\n")),
        StmtKind::Raise(name) => out.push_str(&format!("{pad}raise {name};\n")),
        StmtKind::Expr(e) => out.push_str(&format!("{pad}{};\n", render_expr(e))),
    }
}

pub fn render_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Int => "int".into(),
        TypeExpr::Bool => "bool".into(),
        TypeExpr::Char => "char".into(),
        TypeExpr::Str => "string".into(),
        TypeExpr::Array(inner) => format!("[{}]", render_type(inner)),
        TypeExpr::Named(n) => n.clone(),
    }
}

/// Binding strength of a rendered node; parens are added exactly where a
/// child binds looser than its context requires.
fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(_, _) => 7,
        _ => 8,
    }
}

pub fn render_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Bool(v) => v.to_string(),
        ExprKind::Char(c) => escape_char(*c),
        ExprKind::Str(s) => escape_string(s),
        ExprKind::Null => "null".into(),
        ExprKind::StrPlaceholder => STR_PLACEHOLDER.into(),
        ExprKind::CharPlaceholder => CHAR_PLACEHOLDER.into(),
        ExprKind::Ident(n) => n.clone(),
        ExprKind::This => "this".into(),
        ExprKind::Unary(op, operand) => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            format!("{sym}{}", wrap(operand, 7))
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            format!(
                "{} {} {}",
                wrap(lhs, p),
                op.symbol(),
                wrap(rhs, p + 1)
            )
        }
        ExprKind::Member { base, name } => format!("{}.{name}", wrap(base, 8)),
        ExprKind::Call { base, name, args } => {
            format!("{}.{name}({})", wrap(base, 8), render_args(args))
        }
        ExprKind::FreeCall { name, args } => format!("{name}({})", render_args(args)),
        ExprKind::Index { base, index } => {
            format!("{}[{}]", wrap(base, 8), render_expr(index))
        }
        ExprKind::New { record, inits } => {
            let body = inits
                .iter()
                .map(|(n, v)| format!("{n}: {}", render_expr(v)))
                .collect::<Vec<_>>()
                .join(", ");
            if body.is_empty() {
                format!("new {record} {{}}")
            } else {
                format!("new {record} {{ {body} }}")
            }
        }
        ExprKind::ArrayLit(elems) => {
            format!(
                "[{}]",
                elems
                    .iter()
                    .map(render_expr)
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        }
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    if prec(e) < min {
        format!("({})", render_expr(e))
    } else {
        render_expr(e)
    }
}

fn render_args(args: &[Expr]) -> String {
    args.iter()
        .map(render_expr)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Join a token sequence back into readable one-line text. The result lexes
/// to the same sequence; spacing is chosen so punctuation hugs its operands.
pub fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && needs_space(&tokens[i - 1], t) {
            out.push(' ');
        }
        out.push_str(&t.lexeme);
    }
    out
}

fn needs_space(prev: &Token, next: &Token) -> bool {
    let tight_next = matches!(next.lexeme.as_str(), ")" | "]" | "," | ";" | "." | "(" | "[");
    let tight_prev = matches!(prev.lexeme.as_str(), "(" | "[" | "." | "!");
    if next.lexeme == "(" {
        // Call parens hug the callee; grouping parens after an operator or
        // another opener stand apart.
        if prev.kind == TokenKind::Identifier {
            return false;
        }
        return !tight_prev;
    }
    if next.lexeme == "[" {
        // Same distinction for indexing vs an array literal.
        return !(prev.kind == TokenKind::Identifier
            || matches!(prev.lexeme.as_str(), ")" | "]"))
            && !tight_prev;
    }
    if tight_next || tight_prev {
        return false;
    }
    true
}
