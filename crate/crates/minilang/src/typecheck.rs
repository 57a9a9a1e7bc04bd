//! Static checks: declaration collection, expression typing, assignment and
//! purity rules, and a conservative all-paths-return analysis for functions
//! that promise a value.
//!
//! Checking a whole program produces a [`TypedProgram`] whose side tables map
//! expression ids to types and name resolutions; the interpreter executes
//! purely off those tables. Checking a standalone expression against the
//! scope of one statement produces an isolated [`CheckedExpr`] with its own
//! tables, so synthesized expressions never collide with program ids.

use crate::ast::*;
use crate::error::TypeError;
use crate::token::Span;
use crate::types::*;
use std::collections::HashMap;

/// How an identifier-ish node is to be executed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Resolution {
    /// Parameter or local, looked up by name in the current frame.
    Local,
    /// Field of the implicit receiver, by slot.
    SelfField { index: usize },
    /// The base of a static access; never evaluated itself.
    RecordName(String),
    /// Instance field of the base value, by slot.
    Field { index: usize },
    StaticField { record: String, index: usize },
    /// `array.length`.
    ArrayLength,
    StrBuiltin(StrFn),
    /// Instance method call with an explicit receiver.
    Method { record: String, name: String },
    StaticMethod { record: String, name: String },
    FreeFn(String),
    /// Bare call to a sibling method through the implicit receiver.
    SelfMethod { record: String, name: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrFn {
    Length,
    CharAt,
    IsEmpty,
}

#[derive(Clone, Debug)]
pub struct TypedProgram {
    pub program: Program,
    pub registry: Registry,
    pub types: HashMap<ExprId, Type>,
    pub res: HashMap<ExprId, Resolution>,
    /// Qualified function name to `(item index, method index)`.
    fn_map: HashMap<String, (usize, Option<usize>)>,
}

impl TypedProgram {
    /// Constant-time function lookup by qualified name.
    pub fn find_fn_fast(&self, qualified: &str) -> Option<&FnDecl> {
        let &(item, method) = self.fn_map.get(qualified)?;
        match (&self.program.items[item], method) {
            (Item::Fn(f), None) => Some(f),
            (Item::Record(r), Some(m)) => Some(&r.methods[m]),
            _ => None,
        }
    }
}

fn build_fn_map(program: &Program) -> HashMap<String, (usize, Option<usize>)> {
    let mut map = HashMap::new();
    for (i, item) in program.items.iter().enumerate() {
        match item {
            Item::Fn(f) => {
                map.insert(f.qualified_name(), (i, None));
            }
            Item::Record(r) => {
                for (m, meth) in r.methods.iter().enumerate() {
                    map.insert(meth.qualified_name(), (i, Some(m)));
                }
            }
        }
    }
    map
}

/// A standalone expression checked against the scope of some statement, with
/// its own type and resolution tables.
#[derive(Clone, Debug)]
pub struct CheckedExpr {
    pub expr: Expr,
    pub ty: Type,
    pub types: HashMap<ExprId, Type>,
    pub res: HashMap<ExprId, Resolution>,
}

/// Lexical context of one statement: what a fresh expression inserted right
/// before it could see.
#[derive(Clone, Debug)]
pub struct StmtCtx {
    /// Scope layers, outermost first; layer 0 holds the parameters.
    pub layers: Vec<Vec<(String, Type)>>,
    pub function: String,
    pub owner: Option<String>,
    pub is_static_method: bool,
    pub is_test: bool,
}

/// Check a whole program.
pub fn typecheck(program: &Program) -> Result<TypedProgram, TypeError> {
    let registry = collect_declarations(program)?;
    let mut types = HashMap::new();
    let mut res = HashMap::new();
    for f in program.all_fns() {
        check_fn(f, &registry, &mut types, &mut res)?;
    }
    Ok(TypedProgram {
        fn_map: build_fn_map(program),
        program: program.clone(),
        registry,
        types,
        res,
    })
}

/// Check one expression as if it were inserted immediately before `loc`.
/// Purity is not enforced statically here; callers that care observe it
/// dynamically.
pub fn typecheck_expr_at(
    prog: &TypedProgram,
    loc: &StatementId,
    expr: &Expr,
) -> Result<CheckedExpr, TypeError> {
    let ctx = stmt_ctx(prog, loc)
        .ok_or_else(|| TypeError::new(None, format!("unknown statement location {loc}")))?;
    let mut types = HashMap::new();
    let mut res = HashMap::new();
    let mut ck = Checker {
        registry: &prog.registry,
        types: &mut types,
        res: &mut res,
        scopes: ctx.layers,
        owner: ctx.owner,
        is_static_method: ctx.is_static_method,
        in_pure: false,
        in_test: ctx.is_test,
        ret: Type::Void,
        loop_depth: 0,
    };
    let ty = ck.expr(expr, None)?;
    Ok(CheckedExpr {
        expr: expr.clone(),
        ty,
        types,
        res,
    })
}

/// Compute the lexical context of `loc`, or `None` if no such statement
/// exists.
pub fn stmt_ctx(prog: &TypedProgram, loc: &StatementId) -> Option<StmtCtx> {
    let f = prog.program.find_fn(&loc.function)?;
    let mut layers = vec![f
        .params
        .iter()
        .map(|p| {
            let ty = resolve_type_expr(&p.ty, &prog.registry).expect("checked at declaration");
            (p.name.clone(), ty)
        })
        .collect::<Vec<_>>()];
    let path = path_to(&f.body, loc.index)?;
    for (block, pos) in path {
        let mut layer = Vec::new();
        for stmt in &block.stmts[..pos] {
            if let StmtKind::Let { name, ty, .. } = &stmt.kind {
                let ty = resolve_type_expr(ty, &prog.registry).expect("checked at declaration");
                layer.push((name.clone(), ty));
            }
        }
        layers.push(layer);
    }
    Some(StmtCtx {
        layers,
        function: f.qualified_name(),
        owner: f.owner.clone(),
        is_static_method: f.owner.is_some() && f.is_static,
        is_test: f.owner.is_none() && f.name.starts_with("test_"),
    })
}

/// Chain of `(block, position)` from the function body down to the block
/// holding the statement with the given index.
fn path_to(block: &Block, index: u32) -> Option<Vec<(&Block, usize)>> {
    for (pos, stmt) in block.stmts.iter().enumerate() {
        if stmt.index == index {
            return Some(vec![(block, pos)]);
        }
        let sub = match &stmt.kind {
            StmtKind::If { then, els, .. } => path_to(then, index)
                .or_else(|| els.as_ref().and_then(|e| path_to(e, index))),
            StmtKind::While { body, .. } => path_to(body, index),
            _ => None,
        };
        if let Some(mut chain) = sub {
            chain.insert(0, (block, pos));
            return Some(chain);
        }
    }
    None
}

// ---- declaration collection ----

fn collect_declarations(program: &Program) -> Result<Registry, TypeError> {
    let mut registry = Registry::default();
    // Shell pass so forward references between records resolve.
    for item in &program.items {
        if let Item::Record(r) = item {
            if registry.is_record(&r.name) {
                return Err(TypeError::new(r.span, format!("duplicate record `{}`", r.name)));
            }
            registry.insert_record(RecordInfo {
                name: r.name.clone(),
                fields: Vec::new(),
                statics: Vec::new(),
                methods: Vec::new(),
            });
        }
    }
    let mut filled = Vec::new();
    for item in &program.items {
        let Item::Record(r) = item else { continue };
        let mut info = RecordInfo {
            name: r.name.clone(),
            fields: Vec::new(),
            statics: Vec::new(),
            methods: Vec::new(),
        };
        let mut names: Vec<&str> = Vec::new();
        let claim = |name: &'_ str, span: Span, names: &mut Vec<&str>| {
            if names.contains(&name) {
                return Err(TypeError::new(
                    span,
                    format!("duplicate member `{name}` in record `{}`", r.name),
                ));
            }
            Ok(())
        };
        for f in &r.fields {
            claim(&f.name, f.span, &mut names)?;
            names.push(&f.name);
            let ty = resolve_type_expr(&f.ty, &registry)
                .ok_or_else(|| TypeError::new(f.span, format!("unknown type in field `{}`", f.name)))?;
            info.fields.push((f.name.clone(), ty));
        }
        for s in &r.statics {
            claim(&s.name, s.span, &mut names)?;
            names.push(&s.name);
            let ty = resolve_type_expr(&s.ty, &registry).ok_or_else(|| {
                TypeError::new(s.span, format!("unknown type in static `{}`", s.name))
            })?;
            let lit = literal_type(&s.init).ok_or_else(|| {
                TypeError::new(s.span, "static initializer must be a literal".to_string())
            })?;
            if !assignable(&ty, &lit) {
                return Err(TypeError::new(
                    s.span,
                    format!("static `{}` declared {ty} but initialized with {lit}", s.name),
                ));
            }
            info.statics.push((s.name.clone(), ty));
        }
        for m in &r.methods {
            claim(&m.name, m.span, &mut names)?;
            names.push(&m.name);
            info.methods.push((m.name.clone(), fn_sig(m, &registry)?));
        }
        filled.push(info);
    }
    for info in filled {
        let name = info.name.clone();
        if let Some(slot) = registry.records.iter_mut().find(|r| r.name == name) {
            *slot = info;
        }
    }
    for item in &program.items {
        let Item::Fn(f) = item else { continue };
        if registry.free_fn(&f.name).is_some() {
            return Err(TypeError::new(f.span, format!("duplicate function `{}`", f.name)));
        }
        if f.name.starts_with("test_") && (!f.params.is_empty() || f.ret.is_some()) {
            return Err(TypeError::new(
                f.span,
                format!("test function `{}` must take no parameters and return nothing", f.name),
            ));
        }
        let sig = fn_sig(f, &registry)?;
        registry.free_fns.push((f.name.clone(), sig));
    }
    Ok(registry)
}

fn fn_sig(f: &FnDecl, registry: &Registry) -> Result<FnSig, TypeError> {
    let mut params = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for p in &f.params {
        if seen.contains(&p.name.as_str()) {
            return Err(TypeError::new(p.span, format!("duplicate parameter `{}`", p.name)));
        }
        seen.push(&p.name);
        params.push(resolve_type_expr(&p.ty, registry).ok_or_else(|| {
            TypeError::new(p.span, format!("unknown type for parameter `{}`", p.name))
        })?);
    }
    let ret = match &f.ret {
        Some(te) => resolve_type_expr(te, registry)
            .ok_or_else(|| TypeError::new(f.span, "unknown return type".to_string()))?,
        None => Type::Void,
    };
    Ok(FnSig {
        params,
        ret,
        is_pure: f.is_pure,
        is_static: f.is_static,
    })
}

fn literal_type(e: &Expr) -> Option<Type> {
    match &e.kind {
        ExprKind::Int(_) => Some(Type::Int),
        ExprKind::Bool(_) => Some(Type::Bool),
        ExprKind::Char(_) => Some(Type::Char),
        ExprKind::Str(_) => Some(Type::Str),
        ExprKind::Null => Some(Type::Null),
        ExprKind::Unary(UnOp::Neg, inner) if matches!(inner.kind, ExprKind::Int(_)) => {
            Some(Type::Int)
        }
        _ => None,
    }
}

// ---- body checking ----

fn check_fn(
    f: &FnDecl,
    registry: &Registry,
    types: &mut HashMap<ExprId, Type>,
    res: &mut HashMap<ExprId, Resolution>,
) -> Result<(), TypeError> {
    let sig = match &f.owner {
        Some(owner) => registry
            .record(owner)
            .and_then(|r| r.method(&f.name))
            .expect("collected"),
        None => registry.free_fn(&f.name).expect("collected"),
    }
    .clone();
    let params: Vec<(String, Type)> = f
        .params
        .iter()
        .zip(&sig.params)
        .map(|(p, t)| (p.name.clone(), t.clone()))
        .collect();
    let mut ck = Checker {
        registry,
        types,
        res,
        scopes: vec![params],
        owner: f.owner.clone(),
        is_static_method: f.owner.is_some() && f.is_static,
        in_pure: f.is_pure,
        in_test: f.owner.is_none() && f.name.starts_with("test_"),
        ret: sig.ret.clone(),
        loop_depth: 0,
    };
    ck.block(&f.body)?;
    if sig.ret != Type::Void && !returns_always(&f.body) {
        return Err(TypeError::new(
            f.span,
            format!("function `{}` may finish without returning a value", f.qualified_name()),
        ));
    }
    Ok(())
}

fn returns_always(b: &Block) -> bool {
    b.stmts.iter().any(stmt_returns_always)
}

fn stmt_returns_always(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) | StmtKind::Raise(_) => true,
        StmtKind::If {
            then,
            els: Some(e),
            ..
        } => returns_always(then) && returns_always(e),
        _ => false,
    }
}

struct Checker<'a> {
    registry: &'a Registry,
    types: &'a mut HashMap<ExprId, Type>,
    res: &'a mut HashMap<ExprId, Resolution>,
    scopes: Vec<Vec<(String, Type)>>,
    owner: Option<String>,
    is_static_method: bool,
    in_pure: bool,
    in_test: bool,
    ret: Type,
    loop_depth: usize,
}

impl<'a> Checker<'a> {
    fn block(&mut self, b: &Block) -> Result<(), TypeError> {
        self.scopes.push(Vec::new());
        let r = b.stmts.iter().try_for_each(|s| self.stmt(s));
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), TypeError> {
        match &s.kind {
            StmtKind::Let { name, ty, init } => {
                let ty = resolve_type_expr(ty, self.registry)
                    .ok_or_else(|| TypeError::new(s.span, format!("unknown type for `{name}`")))?;
                if self
                    .scopes
                    .last()
                    .is_some_and(|layer| layer.iter().any(|(n, _)| n == name))
                {
                    return Err(TypeError::new(
                        s.span,
                        format!("`{name}` is already declared in this block"),
                    ));
                }
                let init_ty = self.expr(init, Some(&ty))?;
                if !assignable(&ty, &init_ty) {
                    return Err(TypeError::new(
                        s.span,
                        format!("cannot initialize `{name}: {ty}` with {init_ty}"),
                    ));
                }
                self.scopes.last_mut().unwrap().push((name.clone(), ty));
                Ok(())
            }
            StmtKind::Assign { target, value } => self.assign(s.span, target, value),
            StmtKind::If { cond, then, els } => {
                self.condition(cond)?;
                self.block(then)?;
                if let Some(e) = els {
                    self.block(e)?;
                }
                Ok(())
            }
            StmtKind::While { cond, body } => {
                self.condition(cond)?;
                self.loop_depth += 1;
                let r = self.block(body);
                self.loop_depth -= 1;
                r
            }
            StmtKind::Return(value) => match (&self.ret, value) {
                (Type::Void, None) => Ok(()),
                (Type::Void, Some(v)) => {
                    self.expr(v, None)?;
                    Err(TypeError::new(s.span, "this function returns no value".to_string()))
                }
                (ret, None) => Err(TypeError::new(
                    s.span,
                    format!("this function must return {ret}"),
                )),
                (ret, Some(v)) => {
                    let ret = ret.clone();
                    let vt = self.expr(v, Some(&ret))?;
                    if assignable(&ret, &vt) {
                        Ok(())
                    } else {
                        Err(TypeError::new(
                            s.span,
                            format!("cannot return {vt} from a function returning {ret}"),
                        ))
                    }
                }
            },
            StmtKind::Break | StmtKind::Continue => {
                if self.loop_depth == 0 {
                    Err(TypeError::new(s.span, "`break`/`continue` outside a loop".to_string()))
                } else {
                    Ok(())
                }
            }
            StmtKind::Assert(cond) => self.condition(cond),
            StmtKind::Expect(_) => {
                if self.in_test {
                    Ok(())
                } else {
                    Err(TypeError::new(
                        s.span,
                        "`expect` is only allowed in test functions".to_string(),
                    ))
                }
            }
            StmtKind::Raise(_) => Ok(()),
            StmtKind::Expr(e) => {
                self.expr(e, None)?;
                Ok(())
            }
        }
    }

    fn condition(&mut self, cond: &Expr) -> Result<(), TypeError> {
        let t = self.expr(cond, Some(&Type::Bool))?;
        if t == Type::Bool {
            Ok(())
        } else {
            Err(TypeError::new(cond.span, format!("condition must be bool, found {t}")))
        }
    }

    fn assign(&mut self, span: Span, target: &Expr, value: &Expr) -> Result<(), TypeError> {
        let target_ty = match &target.kind {
            ExprKind::Ident(name) => {
                if let Some(ty) = self.lookup_var(name) {
                    self.note(target, ty.clone(), Some(Resolution::Local));
                    ty
                } else if let Some((index, ty)) = self.lookup_self_field(name) {
                    if self.in_pure {
                        return Err(TypeError::new(
                            span,
                            format!("pure function cannot assign to field `{name}`"),
                        ));
                    }
                    self.note(target, ty.clone(), Some(Resolution::SelfField { index }));
                    ty
                } else {
                    return Err(TypeError::new(span, format!("unknown variable `{name}`")));
                }
            }
            ExprKind::Member { base, name } => {
                if let Some(record) = self.base_record_name(base) {
                    let info = self.registry.record(&record).unwrap();
                    if info.static_index(name).is_some() {
                        return Err(TypeError::new(
                            span,
                            format!("static field `{record}.{name}` is immutable"),
                        ));
                    }
                    return Err(TypeError::new(
                        span,
                        format!("no static field `{name}` on `{record}`"),
                    ));
                }
                let bt = self.expr(base, None)?;
                match &bt {
                    Type::Record(r) => {
                        let info = self.registry.record(r).unwrap();
                        let index = info.field_index(name).ok_or_else(|| {
                            TypeError::new(span, format!("no field `{name}` on `{r}`"))
                        })?;
                        if self.in_pure {
                            return Err(TypeError::new(
                                span,
                                format!("pure function cannot assign to field `{name}`"),
                            ));
                        }
                        let ty = info.fields[index].1.clone();
                        self.note(target, ty.clone(), Some(Resolution::Field { index }));
                        ty
                    }
                    Type::Array(_) => {
                        return Err(TypeError::new(span, "array length is read-only".to_string()))
                    }
                    other => {
                        return Err(TypeError::new(
                            span,
                            format!("cannot assign to a member of {other}"),
                        ))
                    }
                }
            }
            ExprKind::Index { base, index } => {
                if self.in_pure {
                    return Err(TypeError::new(
                        span,
                        "pure function cannot assign to an array element".to_string(),
                    ));
                }
                let bt = self.expr(base, None)?;
                let it = self.expr(index, None)?;
                if it != Type::Int {
                    return Err(TypeError::new(span, format!("index must be int, found {it}")));
                }
                match bt {
                    Type::Array(elem) => {
                        let ty = *elem;
                        self.note(target, ty.clone(), None);
                        ty
                    }
                    other => {
                        return Err(TypeError::new(span, format!("cannot index into {other}")))
                    }
                }
            }
            _ => return Err(TypeError::new(span, "target is not assignable".to_string())),
        };
        let vt = self.expr(value, Some(&target_ty))?;
        if assignable(&target_ty, &vt) {
            Ok(())
        } else {
            Err(TypeError::new(
                span,
                format!("cannot assign {vt} to a target of type {target_ty}"),
            ))
        }
    }

    fn lookup_var(&self, name: &str) -> Option<Type> {
        self.scopes
            .iter()
            .rev()
            .find_map(|layer| layer.iter().rev().find(|(n, _)| n == name))
            .map(|(_, t)| t.clone())
    }

    fn lookup_self_field(&self, name: &str) -> Option<(usize, Type)> {
        if self.is_static_method {
            return None;
        }
        let owner = self.owner.as_ref()?;
        let info = self.registry.record(owner)?;
        let index = info.field_index(name)?;
        Some((index, info.fields[index].1.clone()))
    }

    /// `base` of a member/call that names a record rather than a value.
    fn base_record_name(&self, base: &Expr) -> Option<String> {
        if let ExprKind::Ident(n) = &base.kind {
            if self.lookup_var(n).is_none()
                && self.lookup_self_field(n).is_none()
                && self.registry.is_record(n)
            {
                return Some(n.clone());
            }
        }
        None
    }

    fn note(&mut self, e: &Expr, ty: Type, res: Option<Resolution>) {
        self.types.insert(e.id, ty);
        if let Some(r) = res {
            self.res.insert(e.id, r);
        }
    }

    fn expr(&mut self, e: &Expr, expected: Option<&Type>) -> Result<Type, TypeError> {
        let ty = self.expr_inner(e, expected)?;
        self.types.insert(e.id, ty.clone());
        Ok(ty)
    }

    fn expr_inner(&mut self, e: &Expr, expected: Option<&Type>) -> Result<Type, TypeError> {
        match &e.kind {
            ExprKind::Int(_) => Ok(Type::Int),
            ExprKind::Bool(_) => Ok(Type::Bool),
            ExprKind::Char(_) | ExprKind::CharPlaceholder => Ok(Type::Char),
            ExprKind::Str(_) | ExprKind::StrPlaceholder => Ok(Type::Str),
            ExprKind::Null => Ok(Type::Null),
            ExprKind::Ident(name) => {
                if let Some(ty) = self.lookup_var(name) {
                    self.res.insert(e.id, Resolution::Local);
                    Ok(ty)
                } else if let Some((index, ty)) = self.lookup_self_field(name) {
                    self.res.insert(e.id, Resolution::SelfField { index });
                    Ok(ty)
                } else if self.registry.is_record(name) {
                    Err(TypeError::new(
                        e.span,
                        format!("record name `{name}` is not a value"),
                    ))
                } else {
                    Err(TypeError::new(e.span, format!("unknown variable `{name}`")))
                }
            }
            ExprKind::This => match (&self.owner, self.is_static_method) {
                (Some(owner), false) => Ok(Type::Record(owner.clone())),
                _ => Err(TypeError::new(
                    e.span,
                    "`this` is only available in instance methods".to_string(),
                )),
            },
            ExprKind::Unary(op, operand) => {
                let t = self.expr(operand, None)?;
                match op {
                    UnOp::Not if t == Type::Bool => Ok(Type::Bool),
                    UnOp::Not => Err(TypeError::new(e.span, format!("`!` needs bool, found {t}"))),
                    UnOp::Neg if t == Type::Int => Ok(Type::Int),
                    UnOp::Neg => Err(TypeError::new(e.span, format!("`-` needs int, found {t}"))),
                }
            }
            ExprKind::Binary(op, lhs, rhs) => self.binary(e.span, *op, lhs, rhs),
            ExprKind::Member { base, name } => {
                if let Some(record) = self.base_record_name(base) {
                    self.res.insert(base.id, Resolution::RecordName(record.clone()));
                    let info = self.registry.record(&record).unwrap();
                    if let Some(index) = info.static_index(name) {
                        self.res
                            .insert(e.id, Resolution::StaticField { record, index });
                        return Ok(info.statics[index].1.clone());
                    }
                    if info.method(name).is_some_and(|m| m.is_static) {
                        return Err(TypeError::new(
                            e.span,
                            format!("static method `{record}.{name}` must be called"),
                        ));
                    }
                    return Err(TypeError::new(
                        e.span,
                        format!("no static member `{name}` on `{record}`"),
                    ));
                }
                let bt = self.expr(base, None)?;
                match &bt {
                    Type::Record(r) => {
                        let info = self.registry.record(r).unwrap();
                        if let Some(index) = info.field_index(name) {
                            self.res.insert(e.id, Resolution::Field { index });
                            Ok(info.fields[index].1.clone())
                        } else if info.method(name).is_some() {
                            Err(TypeError::new(
                                e.span,
                                format!("method `{name}` must be called"),
                            ))
                        } else {
                            Err(TypeError::new(e.span, format!("no field `{name}` on `{r}`")))
                        }
                    }
                    Type::Array(_) if name == "length" => {
                        self.res.insert(e.id, Resolution::ArrayLength);
                        Ok(Type::Int)
                    }
                    Type::Str => Err(TypeError::new(
                        e.span,
                        format!("string member `{name}` must be called"),
                    )),
                    other => Err(TypeError::new(
                        e.span,
                        format!("value of type {other} has no member `{name}`"),
                    )),
                }
            }
            ExprKind::Call { base, name, args } => {
                if let Some(record) = self.base_record_name(base) {
                    self.res.insert(base.id, Resolution::RecordName(record.clone()));
                    let info = self.registry.record(&record).unwrap();
                    let sig = info
                        .method(name)
                        .filter(|m| m.is_static)
                        .ok_or_else(|| {
                            TypeError::new(
                                e.span,
                                format!("no static method `{name}` on `{record}`"),
                            )
                        })?
                        .clone();
                    self.call_args(e.span, name, &sig.params, args)?;
                    self.check_purity(e.span, name, sig.is_pure)?;
                    self.res.insert(
                        e.id,
                        Resolution::StaticMethod {
                            record,
                            name: name.clone(),
                        },
                    );
                    return Ok(sig.ret);
                }
                let bt = self.expr(base, None)?;
                match &bt {
                    Type::Record(r) => {
                        let info = self.registry.record(r).unwrap();
                        let sig = info
                            .method(name)
                            .filter(|m| !m.is_static)
                            .ok_or_else(|| {
                                TypeError::new(e.span, format!("no method `{name}` on `{r}`"))
                            })?
                            .clone();
                        self.call_args(e.span, name, &sig.params, args)?;
                        self.check_purity(e.span, name, sig.is_pure)?;
                        self.res.insert(
                            e.id,
                            Resolution::Method {
                                record: r.clone(),
                                name: name.clone(),
                            },
                        );
                        Ok(sig.ret)
                    }
                    Type::Str => {
                        let (builtin, sig) = str_builtin(name).ok_or_else(|| {
                            TypeError::new(e.span, format!("no string method `{name}`"))
                        })?;
                        self.call_args(e.span, name, &sig.params, args)?;
                        self.res.insert(e.id, Resolution::StrBuiltin(builtin));
                        Ok(sig.ret)
                    }
                    other => Err(TypeError::new(
                        e.span,
                        format!("value of type {other} has no methods"),
                    )),
                }
            }
            ExprKind::FreeCall { name, args } => {
                if name.starts_with("test_") {
                    return Err(TypeError::new(
                        e.span,
                        "test functions cannot be called".to_string(),
                    ));
                }
                if let Some(sig) = self.registry.free_fn(name).cloned() {
                    self.call_args(e.span, name, &sig.params, args)?;
                    self.check_purity(e.span, name, sig.is_pure)?;
                    self.res.insert(e.id, Resolution::FreeFn(name.clone()));
                    return Ok(sig.ret);
                }
                if let Some(owner) = self.owner.clone() {
                    let info = self.registry.record(&owner).unwrap();
                    if let Some(sig) = info.method(name).cloned() {
                        if !sig.is_static && self.is_static_method {
                            return Err(TypeError::new(
                                e.span,
                                format!("cannot call instance method `{name}` from a static method"),
                            ));
                        }
                        self.call_args(e.span, name, &sig.params, args)?;
                        self.check_purity(e.span, name, sig.is_pure)?;
                        let res = if sig.is_static {
                            Resolution::StaticMethod {
                                record: owner,
                                name: name.clone(),
                            }
                        } else {
                            Resolution::SelfMethod {
                                record: owner,
                                name: name.clone(),
                            }
                        };
                        self.res.insert(e.id, res);
                        return Ok(sig.ret);
                    }
                }
                Err(TypeError::new(e.span, format!("unknown function `{name}`")))
            }
            ExprKind::Index { base, index } => {
                let bt = self.expr(base, None)?;
                let it = self.expr(index, None)?;
                if it != Type::Int {
                    return Err(TypeError::new(e.span, format!("index must be int, found {it}")));
                }
                match bt {
                    Type::Array(elem) => Ok(*elem),
                    other => Err(TypeError::new(e.span, format!("cannot index into {other}"))),
                }
            }
            ExprKind::New { record, inits } => {
                let info = self
                    .registry
                    .record(record)
                    .ok_or_else(|| TypeError::new(e.span, format!("unknown record `{record}`")))?
                    .clone();
                let mut seen = vec![false; info.fields.len()];
                for (fname, value) in inits {
                    let index = info.field_index(fname).ok_or_else(|| {
                        TypeError::new(e.span, format!("no field `{fname}` on `{record}`"))
                    })?;
                    if seen[index] {
                        return Err(TypeError::new(
                            e.span,
                            format!("field `{fname}` initialized twice"),
                        ));
                    }
                    seen[index] = true;
                    let want = info.fields[index].1.clone();
                    let got = self.expr(value, Some(&want))?;
                    if !assignable(&want, &got) {
                        return Err(TypeError::new(
                            e.span,
                            format!("field `{fname}` expects {want}, found {got}"),
                        ));
                    }
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return Err(TypeError::new(
                        e.span,
                        format!("field `{}` is not initialized", info.fields[missing].0),
                    ));
                }
                Ok(Type::Record(record.clone()))
            }
            ExprKind::ArrayLit(elems) => {
                let elem_ty = match expected {
                    Some(Type::Array(t)) => Some((**t).clone()),
                    _ => None,
                };
                let elem_ty = match (elem_ty, elems.first()) {
                    (Some(t), _) => t,
                    (None, Some(first)) => {
                        let t = self.expr(first, None)?;
                        if t == Type::Null {
                            return Err(TypeError::new(
                                e.span,
                                "cannot infer the element type of this array".to_string(),
                            ));
                        }
                        t
                    }
                    (None, None) => {
                        return Err(TypeError::new(
                            e.span,
                            "cannot infer the element type of an empty array".to_string(),
                        ))
                    }
                };
                for elem in elems {
                    let t = self.expr(elem, Some(&elem_ty))?;
                    if !assignable(&elem_ty, &t) {
                        return Err(TypeError::new(
                            elem.span,
                            format!("array of {elem_ty} cannot hold {t}"),
                        ));
                    }
                }
                Ok(Type::Array(Box::new(elem_ty)))
            }
        }
    }

    fn binary(&mut self, span: Span, op: BinOp, lhs: &Expr, rhs: &Expr) -> Result<Type, TypeError> {
        let lt = self.expr(lhs, None)?;
        let rt = self.expr(rhs, None)?;
        match op {
            BinOp::And | BinOp::Or => {
                if lt == Type::Bool && rt == Type::Bool {
                    Ok(Type::Bool)
                } else {
                    Err(TypeError::new(
                        span,
                        format!("`{}` needs bool operands, found {lt} and {rt}", op.symbol()),
                    ))
                }
            }
            BinOp::Eq | BinOp::Ne => {
                if equality_comparable(&lt, &rt) {
                    Ok(Type::Bool)
                } else {
                    Err(TypeError::new(
                        span,
                        format!("cannot compare {lt} and {rt} with `{}`", op.symbol()),
                    ))
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if lt == rt && lt.is_ordered() {
                    Ok(Type::Bool)
                } else {
                    Err(TypeError::new(
                        span,
                        format!("cannot order {lt} and {rt} with `{}`", op.symbol()),
                    ))
                }
            }
            BinOp::Add => {
                if lt == Type::Int && rt == Type::Int {
                    Ok(Type::Int)
                } else if lt == Type::Str && rt == Type::Str {
                    Ok(Type::Str)
                } else {
                    Err(TypeError::new(
                        span,
                        format!("`+` needs two ints or two strings, found {lt} and {rt}"),
                    ))
                }
            }
            BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                if lt == Type::Int && rt == Type::Int {
                    Ok(Type::Int)
                } else {
                    Err(TypeError::new(
                        span,
                        format!("`{}` needs int operands, found {lt} and {rt}", op.symbol()),
                    ))
                }
            }
        }
    }

    fn call_args(
        &mut self,
        span: Span,
        name: &str,
        params: &[Type],
        args: &[Expr],
    ) -> Result<(), TypeError> {
        if params.len() != args.len() {
            return Err(TypeError::new(
                span,
                format!(
                    "`{name}` takes {} argument(s), found {}",
                    params.len(),
                    args.len()
                ),
            ));
        }
        for (param, arg) in params.iter().zip(args) {
            let got = self.expr(arg, Some(param))?;
            if !assignable(param, &got) {
                return Err(TypeError::new(
                    arg.span,
                    format!("argument to `{name}` expects {param}, found {got}"),
                ));
            }
        }
        Ok(())
    }

    fn check_purity(&self, span: Span, name: &str, callee_pure: bool) -> Result<(), TypeError> {
        if self.in_pure && !callee_pure {
            Err(TypeError::new(
                span,
                format!("pure function cannot call impure `{name}`"),
            ))
        } else {
            Ok(())
        }
    }
}

fn str_builtin(name: &str) -> Option<(StrFn, MemberSig)> {
    str_members().into_iter().find_map(|sig| {
        let builtin = match sig.name.as_str() {
            "length" => StrFn::Length,
            "charAt" => StrFn::CharAt,
            "isEmpty" => StrFn::IsEmpty,
            _ => return None,
        };
        (sig.name == name).then_some((builtin, sig))
    })
}
