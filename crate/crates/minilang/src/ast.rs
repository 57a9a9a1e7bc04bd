//! Abstract syntax. Statements carry a per-function pre-order index so that
//! a statement can be named by `(function, index)` across runs; expressions
//! carry a program-wide id used as the key for type and resolution tables.

use crate::token::Span;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type ExprId = u32;

/// Stable name for one statement: the qualified function name (`"Rec.meth"`
/// for methods, the bare name for free functions) plus the statement's
/// pre-order index within that function body.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StatementId {
    pub function: String,
    pub index: u32,
}

impl StatementId {
    pub fn new(function: impl Into<String>, index: u32) -> Self {
        StatementId {
            function: function.into(),
            index,
        }
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.function, self.index)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Record(RecordDecl),
    Fn(FnDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub statics: Vec<StaticField>,
    pub methods: Vec<FnDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Span,
}

/// `static NAME: TYPE = LITERAL;` — immutable, initialized once per run.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticField {
    pub name: String,
    pub ty: TypeExpr,
    pub init: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FnDecl {
    pub name: String,
    /// Enclosing record name for methods, `None` for free functions.
    pub owner: Option<String>,
    pub is_static: bool,
    pub is_pure: bool,
    pub params: Vec<Param>,
    /// `None` means the function returns no value.
    pub ret: Option<TypeExpr>,
    pub body: Block,
    pub span: Span,
}

impl FnDecl {
    pub fn qualified_name(&self) -> String {
        match &self.owner {
            Some(owner) => format!("{owner}.{}", self.name),
            None => self.name.clone(),
        }
    }

    /// Instance methods take an implicit receiver.
    pub fn is_instance_method(&self) -> bool {
        self.owner.is_some() && !self.is_static
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Span,
}

/// Source-level type annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    Int,
    Bool,
    Char,
    Str,
    Array(Box<TypeExpr>),
    Named(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
    /// Pre-order index within the enclosing function body.
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Let {
        name: String,
        ty: TypeExpr,
        init: Expr,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    If {
        cond: Expr,
        then: Block,
        els: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Return(Option<Expr>),
    Break,
    Continue,
    Assert(Expr),
    /// Declares that the enclosing test passes exactly when the named
    /// exception is raised before the test finishes.
    Expect(String),
    Raise(String),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub id: ExprId,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Char(char),
    Str(String),
    Null,
    /// Hole standing for some string literal; filled in before execution.
    StrPlaceholder,
    /// Hole standing for some char literal; filled in before execution.
    CharPlaceholder,
    Ident(String),
    This,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Member {
        base: Box<Expr>,
        name: String,
    },
    Call {
        base: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
    FreeCall {
        name: String,
        args: Vec<Expr>,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    New {
        record: String,
        inits: Vec<(String, Expr)>,
    },
    ArrayLit(Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }
}

impl Program {
    /// All functions in declaration order: free functions and record methods.
    pub fn all_fns(&self) -> impl Iterator<Item = &FnDecl> {
        self.items.iter().flat_map(|item| match item {
            Item::Fn(f) => std::slice::from_ref(f).iter(),
            Item::Record(r) => r.methods.iter(),
        })
    }

    pub fn find_fn(&self, qualified: &str) -> Option<&FnDecl> {
        self.all_fns().find(|f| f.qualified_name() == qualified)
    }

    pub fn find_record(&self, name: &str) -> Option<&RecordDecl> {
        self.items.iter().find_map(|item| match item {
            Item::Record(r) if r.name == name => Some(r),
            _ => None,
        })
    }

    /// Test functions are free functions whose name starts with `test_`.
    pub fn test_fns(&self) -> impl Iterator<Item = &FnDecl> {
        self.items.iter().filter_map(|item| match item {
            Item::Fn(f) if f.name.starts_with("test_") => Some(f),
            _ => None,
        })
    }

    /// Locate a statement by id.
    pub fn find_stmt(&self, loc: &StatementId) -> Option<&Stmt> {
        fn search(block: &Block, index: u32) -> Option<&Stmt> {
            for stmt in &block.stmts {
                if stmt.index == index {
                    return Some(stmt);
                }
                let nested = match &stmt.kind {
                    StmtKind::If { then, els, .. } => {
                        search(then, index).or_else(|| els.as_ref().and_then(|e| search(e, index)))
                    }
                    StmtKind::While { body, .. } => search(body, index),
                    _ => None,
                };
                if nested.is_some() {
                    return nested;
                }
            }
            None
        }
        search(&self.find_fn(&loc.function)?.body, loc.index)
    }
}

/// Pre-order walk over every statement in a block, including nested ones.
pub fn visit_stmts<'a>(block: &'a Block, f: &mut impl FnMut(&'a Stmt)) {
    for stmt in &block.stmts {
        f(stmt);
        match &stmt.kind {
            StmtKind::If { then, els, .. } => {
                visit_stmts(then, f);
                if let Some(e) = els {
                    visit_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => visit_stmts(body, f),
            _ => {}
        }
    }
}

/// Assign pre-order indices starting from zero. Called once per function at
/// parse time.
pub fn number_statements(f: &mut FnDecl) {
    let mut next = 0;
    number_block(&mut f.body, &mut next);
}

fn number_block(block: &mut Block, next: &mut u32) {
    for stmt in &mut block.stmts {
        stmt.index = *next;
        *next += 1;
        match &mut stmt.kind {
            StmtKind::If { then, els, .. } => {
                number_block(then, next);
                if let Some(e) = els {
                    number_block(e, next);
                }
            }
            StmtKind::While { body, .. } => number_block(body, next),
            _ => {}
        }
    }
}

/// Number of statements in a function body, nested statements included.
pub fn statement_count(f: &FnDecl) -> usize {
    let mut n = 0;
    visit_stmts(&f.body, &mut |_| n += 1);
    n
}
