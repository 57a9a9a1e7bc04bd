//! Typed expression grammar over a program scope.
//!
//! A [`GrammarState`] tracks a partially built predicate token by token.
//! [`GrammarState::legal_next`] returns exactly the tokens that keep the
//! prefix completable to a well-typed boolean expression within the depth
//! budget, so a search driving the grammar can never paint itself into a
//! corner. Completability is decided by a memoized search over abstract
//! recognizer states (position plus operator/delimiter stack, independent of
//! the concrete tokens consumed so far).
//!
//! The predicate language is the subset of expressions that only read
//! existing state: variables, fields, member and static member access, calls,
//! indexing, literals and the two placeholder literals. Constructors, array
//! literals, `this` and free-function calls are deliberately outside it.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use minilang::ast::BinOp;
use minilang::token::{CHAR_PLACEHOLDER, STR_PLACEHOLDER};
use minilang::types::{assignable, equality_comparable};
use minilang::{MemberSig, ScopeEntry, ScopeOrigin, Token, TokenKind, Type, TypedProgram};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("token `{token}` is not legal here")]
    IllegalToken { token: String },
    #[error("reopened prefix rejected at position {position}: token `{token}`")]
    InvalidReopenPrefix { position: usize, token: String },
    #[error("predicate uses `{placeholder}` but the method has no matching literal")]
    NoLiteralsAvailable { placeholder: String },
}

/// Caps on structural depth. `max_nesting` bounds simultaneously open
/// parentheses, call argument lists and index brackets; `max_call_args`
/// bounds how many calls *with at least one argument* may be open at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DepthBudget {
    pub max_nesting: usize,
    pub max_call_args: usize,
}

impl Default for DepthBudget {
    fn default() -> Self {
        DepthBudget {
            max_nesting: 4,
            max_call_args: 2,
        }
    }
}

/// How the predicate starts: from scratch (a fresh `if (` was planted), or by
/// replaying the condition of an existing `if` so the search extends it.
#[derive(Clone, Debug)]
pub enum SeedMode {
    FreshIf,
    ReopenExisting(Vec<Token>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum UnaryOp {
    Not,
    Neg,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CallSig {
    params: Vec<Type>,
    ret: Type,
}

/// Where the recognizer stands relative to the next token.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Pos {
    NeedOperand,
    HaveOperand(Type),
    NeedMember(Type),
    HaveStaticName(String),
    NeedStaticMember(String),
    NeedCallOpen(CallSig),
    NeedCallClose(Type),
}

/// One pending construct. `Binary` frames between two delimiter frames are
/// kept in strictly ascending precedence; lower-or-equal incoming operators
/// reduce eagerly, which mirrors left associativity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Frame {
    Paren,
    Unary(UnaryOp),
    Binary { op: BinOp, lhs: Type },
    Call { sig: CallSig, next_arg: usize },
    Index { elem: Type },
}

/// Snapshot of everything the grammar may draw on at one location: variables,
/// record names with statics, literal leaves, and the member table of every
/// type reachable by chaining members from those roots.
pub struct GrammarScope {
    vars: Vec<(String, Type)>,
    statics: Vec<(String, Vec<MemberSig>)>,
    literals: Vec<(String, Type)>,
    members: HashMap<Type, Vec<MemberSig>>,
    universe: Vec<Token>,
}

impl GrammarScope {
    pub fn build(prog: &TypedProgram, entries: &[ScopeEntry]) -> GrammarScope {
        let mut vars = Vec::new();
        let mut statics = Vec::new();
        let mut literals = Vec::new();
        for e in entries {
            match e.origin {
                ScopeOrigin::Parameter | ScopeOrigin::Local | ScopeOrigin::Field => {
                    vars.push((e.identifier.clone(), e.type_info.ty.clone()));
                }
                ScopeOrigin::StaticMember => {
                    statics.push((e.identifier.clone(), e.type_info.members.clone()));
                }
                ScopeOrigin::Literal | ScopeOrigin::StringPlaceholder => {
                    literals.push((e.identifier.clone(), e.type_info.ty.clone()));
                }
            }
        }

        let mut members: HashMap<Type, Vec<MemberSig>> = HashMap::new();
        let mut work: Vec<Type> = Vec::new();
        work.extend(vars.iter().map(|(_, t)| t.clone()));
        work.extend(literals.iter().map(|(_, t)| t.clone()));
        for (_, ms) in &statics {
            work.extend(ms.iter().map(|m| m.ret.clone()));
        }
        while let Some(ty) = work.pop() {
            if members.contains_key(&ty) {
                continue;
            }
            let table = prog.registry.members_of(&ty);
            for m in &table {
                work.push(m.ret.clone());
            }
            if let Type::Array(elem) = &ty {
                work.push((**elem).clone());
            }
            members.insert(ty, table);
        }

        let universe = build_universe(&vars, &statics, &literals, &members);
        GrammarScope {
            vars,
            statics,
            literals,
            members,
            universe,
        }
    }

    /// Every token the grammar can ever emit at this location, in a fixed
    /// deterministic order.
    pub fn universe(&self) -> &[Token] {
        &self.universe
    }
}

const OPERATORS: [&str; 14] = [
    "&&", "||", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%", "!",
];

fn build_universe(
    vars: &[(String, Type)],
    statics: &[(String, Vec<MemberSig>)],
    literals: &[(String, Type)],
    members: &HashMap<Type, Vec<MemberSig>>,
) -> Vec<Token> {
    let mut out = Vec::new();
    let mut seen: HashSet<(TokenKind, String)> = HashSet::new();
    let mut push = |out: &mut Vec<Token>, kind: TokenKind, lexeme: &str| {
        if seen.insert((kind, lexeme.to_string())) {
            out.push(Token::synthetic(kind, lexeme));
        }
    };

    for (name, _) in vars {
        push(&mut out, TokenKind::Identifier, name);
    }
    for (name, _) in statics {
        push(&mut out, TokenKind::Identifier, name);
    }
    for (lex, _) in literals {
        push(&mut out, TokenKind::Literal, lex);
    }
    let mut member_names: BTreeSet<&str> = BTreeSet::new();
    let mut any_array = false;
    let mut any_multi_arg = false;
    for (ty, table) in members {
        if matches!(ty, Type::Array(_)) {
            any_array = true;
        }
        for m in table {
            member_names.insert(&m.name);
            any_multi_arg |= m.params.len() >= 2;
        }
    }
    for (_, ms) in statics {
        for m in ms {
            member_names.insert(&m.name);
            any_multi_arg |= m.params.len() >= 2;
        }
    }
    for name in member_names {
        push(&mut out, TokenKind::Identifier, name);
    }
    for op in OPERATORS {
        push(&mut out, TokenKind::Operator, op);
    }
    push(&mut out, TokenKind::Punctuation, "(");
    push(&mut out, TokenKind::Punctuation, ")");
    push(&mut out, TokenKind::Punctuation, ".");
    if any_array {
        push(&mut out, TokenKind::Punctuation, "[");
        push(&mut out, TokenKind::Punctuation, "]");
    }
    if any_multi_arg {
        push(&mut out, TokenKind::Punctuation, ",");
    }
    out
}

type StateKey = (Pos, Vec<Frame>);

#[derive(Default)]
struct Memo {
    known: HashMap<StateKey, bool>,
    in_progress: HashSet<StateKey>,
}

struct SearchCtx {
    scope: GrammarScope,
    budget: DepthBudget,
    memo: RefCell<Memo>,
}

/// One partially built predicate. Cloning is cheap enough for beam search;
/// all clones share the scope snapshot and the completability memo.
#[derive(Clone)]
pub struct GrammarState {
    tokens: Vec<Token>,
    pos: Pos,
    frames: Vec<Frame>,
    ctx: Rc<SearchCtx>,
}

impl std::fmt::Debug for GrammarState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrammarState")
            .field("surface", &self.surface())
            .field("pos", &self.pos)
            .field("frames", &self.frames)
            .finish()
    }
}


impl GrammarState {
    pub fn init(
        scope: GrammarScope,
        mode: &SeedMode,
        budget: DepthBudget,
    ) -> Result<GrammarState, GrammarError> {
        let ctx = Rc::new(SearchCtx {
            scope,
            budget,
            memo: RefCell::new(Memo::default()),
        });
        let mut state = GrammarState {
            tokens: Vec::new(),
            pos: Pos::NeedOperand,
            frames: Vec::new(),
            ctx,
        };
        if let SeedMode::ReopenExisting(prefix) = mode {
            for (position, tok) in prefix.iter().enumerate() {
                state = state
                    .advance(tok)
                    .map_err(|_| GrammarError::InvalidReopenPrefix {
                        position,
                        token: tok.lexeme.clone(),
                    })?;
            }
        }
        Ok(state)
    }

    /// Tokens consumed so far (the replayed prefix included in reopen mode).
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn surface_len(&self) -> usize {
        self.tokens.len()
    }

    /// Canonical source text of the tokens so far.
    pub fn surface(&self) -> String {
        minilang::render_tokens(&self.tokens)
    }

    /// True when the tokens so far already form a well-typed boolean
    /// expression. A complete state may still be extendable.
    pub fn is_complete(&self) -> bool {
        accepting(&self.pos, &self.frames)
    }

    /// Exactly the tokens whose consumption leaves the prefix completable,
    /// in universe order.
    pub fn legal_next(&self) -> Vec<Token> {
        self.ctx
            .scope
            .universe
            .iter()
            .filter(|tok| {
                step(&self.ctx, &self.pos, &self.frames, tok)
                    .is_some_and(|(p, f)| viable(&self.ctx, &p, &f))
            })
            .cloned()
            .collect()
    }

    /// Hash of the recognizer position and pending stack. Two states with
    /// equal digests accept exactly the same continuation languages, no
    /// matter which concrete tokens produced them.
    pub fn state_digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.pos.hash(&mut h);
        self.frames.hash(&mut h);
        h.finish()
    }

    pub fn advance(&self, tok: &Token) -> Result<GrammarState, GrammarError> {
        let (pos, frames) = step(&self.ctx, &self.pos, &self.frames, tok)
            .filter(|(p, f)| viable(&self.ctx, p, f))
            .ok_or_else(|| GrammarError::IllegalToken {
                token: tok.lexeme.clone(),
            })?;
        let mut tokens = self.tokens.clone();
        tokens.push(tok.clone());
        Ok(GrammarState {
            tokens,
            pos,
            frames,
            ctx: Rc::clone(&self.ctx),
        })
    }
}

/// In-method literal pool for placeholder substitution. The tokens carry the
/// exact source lexemes, quotes and escapes included.
#[derive(Clone, Debug, Default)]
pub struct MethodLiterals {
    pub strings: Vec<Token>,
    pub chars: Vec<Token>,
}

/// Expand every placeholder occurrence against the in-method literal pool,
/// one output sequence per combination. Sequences without placeholders pass
/// through unchanged as a single instantiation.
pub fn instantiate_placeholders(
    tokens: &[Token],
    literals: &MethodLiterals,
) -> Result<Vec<Vec<Token>>, GrammarError> {
    let mut out: Vec<Vec<Token>> = vec![Vec::with_capacity(tokens.len())];
    for tok in tokens {
        let choices = if tok.kind == TokenKind::Literal && tok.lexeme == STR_PLACEHOLDER {
            Some(&literals.strings)
        } else if tok.kind == TokenKind::Literal && tok.lexeme == CHAR_PLACEHOLDER {
            Some(&literals.chars)
        } else {
            None
        };
        match choices {
            None => {
                for seq in &mut out {
                    seq.push(tok.clone());
                }
            }
            Some(pool) => {
                if pool.is_empty() {
                    return Err(GrammarError::NoLiteralsAvailable {
                        placeholder: tok.lexeme.clone(),
                    });
                }
                out = out
                    .into_iter()
                    .flat_map(|seq| {
                        pool.iter().map(move |lit| {
                            let mut next = seq.clone();
                            next.push(lit.clone());
                            next
                        })
                    })
                    .collect();
            }
        }
    }
    Ok(out)
}

fn unary_type(op: UnaryOp, operand: &Type) -> Option<Type> {
    match op {
        UnaryOp::Not if *operand == Type::Bool => Some(Type::Bool),
        UnaryOp::Neg if *operand == Type::Int => Some(Type::Int),
        _ => None,
    }
}

fn bin_type(op: BinOp, lhs: &Type, rhs: &Type) -> Option<Type> {
    match op {
        BinOp::And | BinOp::Or => {
            (*lhs == Type::Bool && *rhs == Type::Bool).then_some(Type::Bool)
        }
        BinOp::Eq | BinOp::Ne => equality_comparable(lhs, rhs).then_some(Type::Bool),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            (lhs == rhs && lhs.is_ordered()).then_some(Type::Bool)
        }
        BinOp::Add => match (lhs, rhs) {
            (Type::Int, Type::Int) => Some(Type::Int),
            (Type::Str, Type::Str) => Some(Type::Str),
            _ => None,
        },
        BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
            (*lhs == Type::Int && *rhs == Type::Int).then_some(Type::Int)
        }
    }
}

/// Reduce all pending unary and binary frames against `ty`, stopping at the
/// first delimiter frame. `None` when some reduction is ill-typed.
fn reduce_pending(frames: &mut Vec<Frame>, mut ty: Type) -> Option<Type> {
    loop {
        let reduced = match frames.last() {
            Some(Frame::Unary(op)) => unary_type(*op, &ty)?,
            Some(Frame::Binary { op, lhs }) => bin_type(*op, lhs, &ty)?,
            _ => return Some(ty),
        };
        ty = reduced;
        frames.pop();
    }
}

/// A state accepts when every frame reduces and the result is boolean.
fn accepting(pos: &Pos, frames: &[Frame]) -> bool {
    let Pos::HaveOperand(ty) = pos else {
        return false;
    };
    let mut cur = ty.clone();
    for frame in frames.iter().rev() {
        let reduced = match frame {
            Frame::Unary(op) => unary_type(*op, &cur),
            Frame::Binary { op, lhs } => bin_type(*op, lhs, &cur),
            _ => return false,
        };
        match reduced {
            Some(t) => cur = t,
            None => return false,
        }
    }
    cur == Type::Bool
}

fn open_nesting(frames: &[Frame]) -> usize {
    frames
        .iter()
        .filter(|f| matches!(f, Frame::Paren | Frame::Call { .. } | Frame::Index { .. }))
        .count()
}

fn open_arg_calls(frames: &[Frame]) -> usize {
    frames
        .iter()
        .filter(|f| matches!(f, Frame::Call { sig, .. } if !sig.params.is_empty()))
        .count()
}

fn member_step(m: &MemberSig, frames: &[Frame]) -> (Pos, Vec<Frame>) {
    if m.is_field {
        (Pos::HaveOperand(m.ret.clone()), frames.to_vec())
    } else {
        (
            Pos::NeedCallOpen(CallSig {
                params: m.params.clone(),
                ret: m.ret.clone(),
            }),
            frames.to_vec(),
        )
    }
}

/// Structural and type-local transition. Produces dead ends freely; the
/// viability search filters those out.
fn step(ctx: &SearchCtx, pos: &Pos, frames: &[Frame], tok: &Token) -> Option<(Pos, Vec<Frame>)> {
    let scope = &ctx.scope;
    match pos {
        Pos::NeedOperand => match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Identifier, name) => {
                if let Some((_, ty)) = scope.vars.iter().find(|(n, _)| n == name) {
                    Some((Pos::HaveOperand(ty.clone()), frames.to_vec()))
                } else if scope.statics.iter().any(|(n, _)| n == name) {
                    Some((Pos::HaveStaticName(name.to_string()), frames.to_vec()))
                } else {
                    None
                }
            }
            (TokenKind::Literal, lex) => {
                let ty = scope.literals.iter().find(|(n, _)| n == lex)?.1.clone();
                Some((Pos::HaveOperand(ty), frames.to_vec()))
            }
            (TokenKind::Operator, "!") => {
                let mut fs = frames.to_vec();
                fs.push(Frame::Unary(UnaryOp::Not));
                Some((Pos::NeedOperand, fs))
            }
            (TokenKind::Operator, "-") => {
                let mut fs = frames.to_vec();
                fs.push(Frame::Unary(UnaryOp::Neg));
                Some((Pos::NeedOperand, fs))
            }
            (TokenKind::Punctuation, "(") => {
                if open_nesting(frames) >= ctx.budget.max_nesting {
                    return None;
                }
                let mut fs = frames.to_vec();
                fs.push(Frame::Paren);
                Some((Pos::NeedOperand, fs))
            }
            _ => None,
        },
        Pos::HaveOperand(ty) => match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Punctuation, ".") => scope
                .members
                .get(ty)
                .filter(|table| !table.is_empty())
                .map(|_| (Pos::NeedMember(ty.clone()), frames.to_vec())),
            (TokenKind::Punctuation, "[") => {
                let Type::Array(elem) = ty else {
                    return None;
                };
                if open_nesting(frames) >= ctx.budget.max_nesting {
                    return None;
                }
                let mut fs = frames.to_vec();
                fs.push(Frame::Index {
                    elem: (**elem).clone(),
                });
                Some((Pos::NeedOperand, fs))
            }
            (TokenKind::Operator, sym) => {
                let op = BinOp::from_symbol(sym)?;
                let mut fs = frames.to_vec();
                let mut cur = ty.clone();
                loop {
                    let reduced = match fs.last() {
                        Some(Frame::Unary(u)) => unary_type(*u, &cur)?,
                        Some(Frame::Binary { op: top, lhs })
                            if top.precedence() >= op.precedence() =>
                        {
                            bin_type(*top, lhs, &cur)?
                        }
                        _ => break,
                    };
                    cur = reduced;
                    fs.pop();
                }
                fs.push(Frame::Binary { op, lhs: cur });
                Some((Pos::NeedOperand, fs))
            }
            (TokenKind::Punctuation, ")") => {
                let mut fs = frames.to_vec();
                let reduced = reduce_pending(&mut fs, ty.clone())?;
                match fs.pop()? {
                    Frame::Paren => Some((Pos::HaveOperand(reduced), fs)),
                    Frame::Call { sig, next_arg } => (next_arg + 1 == sig.params.len()
                        && assignable(&sig.params[next_arg], &reduced))
                    .then(|| (Pos::HaveOperand(sig.ret.clone()), fs)),
                    _ => None,
                }
            }
            (TokenKind::Punctuation, "]") => {
                let mut fs = frames.to_vec();
                let reduced = reduce_pending(&mut fs, ty.clone())?;
                if reduced != Type::Int {
                    return None;
                }
                match fs.pop()? {
                    Frame::Index { elem } => Some((Pos::HaveOperand(elem), fs)),
                    _ => None,
                }
            }
            (TokenKind::Punctuation, ",") => {
                let mut fs = frames.to_vec();
                let reduced = reduce_pending(&mut fs, ty.clone())?;
                match fs.pop()? {
                    Frame::Call { sig, next_arg }
                        if next_arg + 1 < sig.params.len()
                            && assignable(&sig.params[next_arg], &reduced) =>
                    {
                        fs.push(Frame::Call {
                            sig,
                            next_arg: next_arg + 1,
                        });
                        Some((Pos::NeedOperand, fs))
                    }
                    _ => None,
                }
            }
            _ => None,
        },
        Pos::NeedMember(ty) => {
            if tok.kind != TokenKind::Identifier {
                return None;
            }
            let table = scope.members.get(ty)?;
            let m = table.iter().find(|m| m.name == tok.lexeme)?;
            Some(member_step(m, frames))
        }
        Pos::HaveStaticName(record) => {
            (tok.kind == TokenKind::Punctuation && tok.lexeme == ".")
                .then(|| (Pos::NeedStaticMember(record.clone()), frames.to_vec()))
        }
        Pos::NeedStaticMember(record) => {
            if tok.kind != TokenKind::Identifier {
                return None;
            }
            let (_, table) = scope.statics.iter().find(|(n, _)| n == record)?;
            let m = table.iter().find(|m| m.name == tok.lexeme)?;
            Some(member_step(m, frames))
        }
        Pos::NeedCallOpen(sig) => {
            if !(tok.kind == TokenKind::Punctuation && tok.lexeme == "(") {
                return None;
            }
            if open_nesting(frames) >= ctx.budget.max_nesting {
                return None;
            }
            if sig.params.is_empty() {
                Some((Pos::NeedCallClose(sig.ret.clone()), frames.to_vec()))
            } else if open_arg_calls(frames) < ctx.budget.max_call_args {
                let mut fs = frames.to_vec();
                fs.push(Frame::Call {
                    sig: sig.clone(),
                    next_arg: 0,
                });
                Some((Pos::NeedOperand, fs))
            } else {
                None
            }
        }
        Pos::NeedCallClose(ret) => (tok.kind == TokenKind::Punctuation && tok.lexeme == ")")
            .then(|| (Pos::HaveOperand(ret.clone()), frames.to_vec())),
    }
}

fn viable(ctx: &SearchCtx, pos: &Pos, frames: &[Frame]) -> bool {
    viable_rec(ctx, pos, frames).0
}

/// Reachability of an accepting state, memoized on the abstract state. The
/// second component marks results computed under an in-progress cycle edge;
/// only untainted negatives are cached. The search never stacks a unary
/// frame directly on another one: unary operators preserve the operand type
/// they demand, and bool/int literals are always in scope, so skipping those
/// edges cannot hide a completion (user-built states may still stack them).
fn viable_rec(ctx: &SearchCtx, pos: &Pos, frames: &[Frame]) -> (bool, bool) {
    if accepting(pos, frames) {
        return (true, false);
    }
    let key: StateKey = (pos.clone(), frames.to_vec());
    {
        let memo = ctx.memo.borrow();
        if let Some(&known) = memo.known.get(&key) {
            return (known, false);
        }
        if memo.in_progress.contains(&key) {
            return (false, true);
        }
    }
    ctx.memo.borrow_mut().in_progress.insert(key.clone());
    let mut ok = false;
    let mut tainted = false;
    for tok in &ctx.scope.universe {
        if *pos == Pos::NeedOperand
            && tok.kind == TokenKind::Operator
            && matches!(tok.lexeme.as_str(), "!" | "-")
            && matches!(frames.last(), Some(Frame::Unary(_)))
        {
            continue;
        }
        if let Some((p, f)) = step(ctx, pos, frames, tok) {
            let (value, t) = viable_rec(ctx, &p, &f);
            tainted |= t;
            if value {
                ok = true;
                break;
            }
        }
    }
    let mut memo = ctx.memo.borrow_mut();
    memo.in_progress.remove(&key);
    if ok {
        memo.known.insert(key, true);
    } else if !tainted {
        memo.known.insert(key, false);
    }
    (ok, tainted)
}
