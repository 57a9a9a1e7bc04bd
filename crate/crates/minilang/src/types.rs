//! Type representation, the program-wide registry of declared records and
//! functions, and member lookup for every type (declared members for records,
//! built-in members for strings and arrays).

use crate::ast::{Program, TypeExpr};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Type {
    Int,
    Bool,
    Char,
    Str,
    /// Type of calls to functions that return nothing.
    Void,
    /// Type of the `null` literal before it is matched against a reference
    /// type.
    Null,
    Array(Box<Type>),
    Record(String),
}

impl Type {
    /// Types whose values may be `null`.
    pub fn is_nullable(&self) -> bool {
        matches!(self, Type::Str | Type::Array(_) | Type::Record(_))
    }

    /// Types with a defined `==`/`!=`.
    pub fn is_equatable(&self) -> bool {
        !matches!(self, Type::Void)
    }

    /// Types with a defined `<`/`<=`/`>`/`>=`.
    pub fn is_ordered(&self) -> bool {
        matches!(self, Type::Int | Type::Char)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Char => write!(f, "char"),
            Type::Str => write!(f, "string"),
            Type::Void => write!(f, "void"),
            Type::Null => write!(f, "null"),
            Type::Array(t) => write!(f, "[{t}]"),
            Type::Record(n) => write!(f, "{n}"),
        }
    }
}

/// `actual` may be used where `expected` is required.
pub fn assignable(expected: &Type, actual: &Type) -> bool {
    expected == actual || (matches!(actual, Type::Null) && expected.is_nullable())
}

/// `a == b` / `a != b` well-typed.
pub fn equality_comparable(a: &Type, b: &Type) -> bool {
    if !a.is_equatable() || !b.is_equatable() {
        return false;
    }
    a == b
        || (matches!(a, Type::Null) && b.is_nullable())
        || (matches!(b, Type::Null) && a.is_nullable())
        || (matches!(a, Type::Null) && matches!(b, Type::Null))
}

/// One accessible member of a type: a field (`arity` irrelevant, `is_field`)
/// or a callable method with parameter types and return type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberSig {
    pub name: String,
    pub params: Vec<Type>,
    pub ret: Type,
    pub is_field: bool,
    pub is_pure: bool,
}

impl MemberSig {
    pub fn field(name: &str, ty: Type) -> Self {
        MemberSig {
            name: name.into(),
            params: Vec::new(),
            ret: ty,
            is_field: true,
            is_pure: true,
        }
    }

    pub fn method(name: &str, params: Vec<Type>, ret: Type, is_pure: bool) -> Self {
        MemberSig {
            name: name.into(),
            params,
            ret,
            is_field: false,
            is_pure,
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// A type together with its accessible members, as consumed by scope queries
/// and the expression grammar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeInfo {
    pub ty: Type,
    pub members: Vec<MemberSig>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnSig {
    pub params: Vec<Type>,
    pub ret: Type,
    pub is_pure: bool,
    pub is_static: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordInfo {
    pub name: String,
    /// Declaration order; the position is also the field's slot in heap
    /// objects of this record.
    pub fields: Vec<(String, Type)>,
    pub statics: Vec<(String, Type)>,
    pub methods: Vec<(String, FnSig)>,
}

impl RecordInfo {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(n, _)| n == name)
    }

    pub fn static_index(&self, name: &str) -> Option<usize> {
        self.statics.iter().position(|(n, _)| n == name)
    }

    pub fn method(&self, name: &str) -> Option<&FnSig> {
        self.methods
            .iter()
            .find_map(|(n, sig)| (n == name).then_some(sig))
    }
}

/// Declared records and free functions of one program.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    pub records: Vec<RecordInfo>,
    by_name: HashMap<String, usize>,
    pub free_fns: Vec<(String, FnSig)>,
}

impl Registry {
    pub fn insert_record(&mut self, info: RecordInfo) {
        self.by_name.insert(info.name.clone(), self.records.len());
        self.records.push(info);
    }

    pub fn record(&self, name: &str) -> Option<&RecordInfo> {
        self.by_name.get(name).map(|&i| &self.records[i])
    }

    pub fn is_record(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn free_fn(&self, name: &str) -> Option<&FnSig> {
        self.free_fns
            .iter()
            .find_map(|(n, sig)| (n == name).then_some(sig))
    }

    /// Instance members reachable through a value of type `ty`, in a fixed
    /// deterministic order: declared fields, then declared methods; built-ins
    /// for strings and arrays.
    pub fn members_of(&self, ty: &Type) -> Vec<MemberSig> {
        match ty {
            Type::Record(name) => {
                let Some(info) = self.record(name) else {
                    return Vec::new();
                };
                let mut out: Vec<MemberSig> = info
                    .fields
                    .iter()
                    .map(|(n, t)| MemberSig::field(n, t.clone()))
                    .collect();
                for (n, sig) in &info.methods {
                    if !sig.is_static {
                        out.push(MemberSig::method(
                            n,
                            sig.params.clone(),
                            sig.ret.clone(),
                            sig.is_pure,
                        ));
                    }
                }
                out
            }
            Type::Str => str_members(),
            Type::Array(elem) => vec![array_length_member(elem)],
            _ => Vec::new(),
        }
    }

    /// Members reachable through the record name itself: static fields and
    /// static methods.
    pub fn static_members_of(&self, record: &str) -> Vec<MemberSig> {
        let Some(info) = self.record(record) else {
            return Vec::new();
        };
        let mut out: Vec<MemberSig> = info
            .statics
            .iter()
            .map(|(n, t)| MemberSig::field(n, t.clone()))
            .collect();
        for (n, sig) in &info.methods {
            if sig.is_static {
                out.push(MemberSig::method(
                    n,
                    sig.params.clone(),
                    sig.ret.clone(),
                    sig.is_pure,
                ));
            }
        }
        out
    }

    /// [`TypeInfo`] for a value of type `ty`.
    pub fn type_info(&self, ty: &Type) -> TypeInfo {
        TypeInfo {
            ty: ty.clone(),
            members: self.members_of(ty),
        }
    }
}

/// Built-in members of `string`, all pure.
pub fn str_members() -> Vec<MemberSig> {
    vec![
        MemberSig::method("length", vec![], Type::Int, true),
        MemberSig::method("charAt", vec![Type::Int], Type::Char, true),
        MemberSig::method("isEmpty", vec![], Type::Bool, true),
    ]
}

fn array_length_member(_elem: &Type) -> MemberSig {
    MemberSig::field("length", Type::Int)
}

/// Resolve a source-level type annotation against the declared records.
pub fn resolve_type_expr(te: &TypeExpr, registry: &Registry) -> Option<Type> {
    Some(match te {
        TypeExpr::Int => Type::Int,
        TypeExpr::Bool => Type::Bool,
        TypeExpr::Char => Type::Char,
        TypeExpr::Str => Type::Str,
        TypeExpr::Array(inner) => Type::Array(Box::new(resolve_type_expr(inner, registry)?)),
        TypeExpr::Named(name) => {
            if registry.is_record(name) {
                Type::Record(name.clone())
            } else {
                return None;
            }
        }
    })
}

/// Records "used" by a program in the sense relevant to scope construction:
/// named as a type annotation, as a `new` target, or as the base of a static
/// access. Returns names in declaration order.
pub fn used_records(program: &Program, registry: &Registry) -> Vec<String> {
    use crate::ast::{Expr, ExprKind, Item, StmtKind};
    use std::collections::HashSet;

    let mut used: HashSet<String> = HashSet::new();

    fn mark_type(te: &TypeExpr, used: &mut HashSet<String>) {
        match te {
            TypeExpr::Named(n) => {
                used.insert(n.clone());
            }
            TypeExpr::Array(inner) => mark_type(inner, used),
            _ => {}
        }
    }

    fn mark_expr(e: &Expr, registry: &Registry, used: &mut HashSet<String>) {
        match &e.kind {
            ExprKind::New { record, inits } => {
                used.insert(record.clone());
                for (_, v) in inits {
                    mark_expr(v, registry, used);
                }
            }
            ExprKind::Member { base, .. } => {
                if let ExprKind::Ident(n) = &base.kind {
                    if registry.is_record(n) {
                        used.insert(n.clone());
                    }
                }
                mark_expr(base, registry, used);
            }
            ExprKind::Call { base, args, .. } => {
                if let ExprKind::Ident(n) = &base.kind {
                    if registry.is_record(n) {
                        used.insert(n.clone());
                    }
                }
                mark_expr(base, registry, used);
                for a in args {
                    mark_expr(a, registry, used);
                }
            }
            ExprKind::FreeCall { args, .. } => {
                for a in args {
                    mark_expr(a, registry, used);
                }
            }
            ExprKind::Unary(_, a) => mark_expr(a, registry, used),
            ExprKind::Binary(_, a, b) => {
                mark_expr(a, registry, used);
                mark_expr(b, registry, used);
            }
            ExprKind::Index { base, index } => {
                mark_expr(base, registry, used);
                mark_expr(index, registry, used);
            }
            ExprKind::ArrayLit(elems) => {
                for e in elems {
                    mark_expr(e, registry, used);
                }
            }
            _ => {}
        }
    }

    fn mark_block(b: &crate::ast::Block, registry: &Registry, used: &mut HashSet<String>) {
        crate::ast::visit_stmts(b, &mut |s| match &s.kind {
            StmtKind::Let { ty, init, .. } => {
                mark_type(ty, used);
                mark_expr(init, registry, used);
            }
            StmtKind::Assign { target, value } => {
                mark_expr(target, registry, used);
                mark_expr(value, registry, used);
            }
            StmtKind::If { cond, .. } => mark_expr(cond, registry, used),
            StmtKind::While { cond, .. } => mark_expr(cond, registry, used),
            StmtKind::Return(Some(e)) | StmtKind::Assert(e) | StmtKind::Expr(e) => {
                mark_expr(e, registry, used)
            }
            _ => {}
        });
    }

    for item in &program.items {
        match item {
            Item::Record(r) => {
                for f in &r.fields {
                    mark_type(&f.ty, &mut used);
                }
                for s in &r.statics {
                    mark_type(&s.ty, &mut used);
                }
                for m in &r.methods {
                    for p in &m.params {
                        mark_type(&p.ty, &mut used);
                    }
                    if let Some(ret) = &m.ret {
                        mark_type(ret, &mut used);
                    }
                    mark_block(&m.body, registry, &mut used);
                }
            }
            Item::Fn(f) => {
                for p in &f.params {
                    mark_type(&p.ty, &mut used);
                }
                if let Some(ret) = &f.ret {
                    mark_type(ret, &mut used);
                }
                mark_block(&f.body, registry, &mut used);
            }
        }
    }

    registry
        .records
        .iter()
        .map(|r| r.name.clone())
        .filter(|n| used.contains(n))
        .collect()
}
