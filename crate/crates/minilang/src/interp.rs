//! Tree-walking interpreter and test runner.
//!
//! Execution is metered: every statement execution (and every loop
//! iteration) costs one step against a budget, so diverging programs settle
//! into a `Timeout` verdict instead of hanging. A paused-probe mode lets the
//! debug probe evaluate candidate expressions in the middle of a run inside
//! a write journal, so candidate side effects on pre-existing state are
//! rolled back and reported instead of leaking into the test.

use crate::ast::*;
use crate::error::RtErr;
use crate::probe::ProbeState;
use crate::typecheck::{CheckedExpr, Resolution, StrFn, TypedProgram};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Char(char),
    Str(Rc<str>),
    Null,
    Ref(usize),
}

impl Value {
    fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Char(_) => "char",
            Value::Str(_) => "string",
            Value::Null => "null",
            Value::Ref(_) => "reference",
        }
    }
}

#[derive(Clone, Debug)]
pub enum HeapObj {
    Record { record: String, fields: Vec<Value> },
    Array(Vec<Value>),
}

/// Equality semantics: primitives and strings by value, records and arrays
/// by identity, `null` only equal to `null`.
fn eq_values(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Char(x), Value::Char(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Null, Value::Null) => true,
        (Value::Ref(x), Value::Ref(y)) => x == y,
        _ => false,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail { message: String },
    Error { error: RtErr },
    Timeout,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    /// Name of the exception behind this verdict, if it was a raise.
    pub fn raised_exception(&self) -> Option<&str> {
        match self {
            Verdict::Error {
                error: RtErr::Raised(name),
            } => Some(name),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub verdict: Verdict,
    pub steps: u64,
    /// Statements executed at least once, when coverage was requested.
    pub covered: BTreeSet<StatementId>,
    /// Exceptions the test declared via `expect` before finishing.
    pub expected_exceptions: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TestReport {
    pub outcomes: Vec<TestOutcome>,
}

impl TestReport {
    pub fn failing(&self) -> impl Iterator<Item = &TestOutcome> {
        self.outcomes.iter().filter(|o| !o.verdict.passed())
    }

    pub fn passing(&self) -> impl Iterator<Item = &TestOutcome> {
        self.outcomes.iter().filter(|o| o.verdict.passed())
    }

    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.verdict.passed())
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Statement-execution budget per test.
    pub step_budget: u64,
    /// Statement budget for one candidate evaluation inside the probe.
    pub eval_step_budget: u64,
    pub call_depth_limit: usize,
    pub coverage: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            step_budget: 1_000_000,
            eval_step_budget: 100_000,
            call_depth_limit: 200,
            coverage: false,
        }
    }
}

/// Run the named tests (or every `test_` function, in declaration order).
/// Each test starts from a fresh heap and freshly initialized statics.
pub fn run_tests(
    prog: &TypedProgram,
    names: Option<&[String]>,
    opts: &RunOptions,
) -> TestReport {
    let all: Vec<String> = match names {
        Some(ns) => ns.to_vec(),
        None => prog.program.test_fns().map(|f| f.name.clone()).collect(),
    };
    let mut report = TestReport::default();
    for name in all {
        let mut interp = Interp::new(prog, opts.clone());
        report.outcomes.push(interp.run_test(&name));
    }
    report
}

pub(crate) enum Flow {
    Normal,
    Return(Option<Value>),
    Break,
    Continue,
}

struct Frame {
    function: String,
    this: Option<Value>,
    /// One layer per open block, parameters in layer 0.
    scopes: Vec<Vec<(String, Value)>>,
}

struct Sandbox {
    base_heap: usize,
    journal: Vec<(usize, Slot, Value)>,
    wrote_prior_state: bool,
}

#[derive(Clone, Copy)]
enum Slot {
    Field(usize),
    Elem(usize),
}

/// Resolution table to evaluate against: the whole-program table or the
/// private table of one checked candidate.
#[derive(Clone, Copy)]
pub(crate) struct TableRef<'a> {
    pub res: &'a HashMap<ExprId, Resolution>,
}

pub struct Interp<'p> {
    prog: &'p TypedProgram,
    opts: RunOptions,
    heap: Vec<HeapObj>,
    /// Static field values per record name, in declaration slot order.
    statics: HashMap<String, Vec<Value>>,
    frames: Vec<Frame>,
    steps: u64,
    eval_steps: u64,
    covered: BTreeSet<StatementId>,
    expected_exceptions: Vec<String>,
    sandbox: Option<Sandbox>,
    pub(crate) probe: Option<Box<ProbeState>>,
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p TypedProgram, opts: RunOptions) -> Self {
        Interp {
            prog,
            opts,
            heap: Vec::new(),
            statics: HashMap::new(),
            frames: Vec::new(),
            steps: 0,
            eval_steps: 0,
            covered: BTreeSet::new(),
            expected_exceptions: Vec::new(),
            sandbox: None,
            probe: None,
        }
    }

    pub fn with_probe(mut self, state: ProbeState) -> Self {
        self.probe = Some(Box::new(state));
        self
    }

    pub fn take_probe(&mut self) -> Option<ProbeState> {
        self.probe.take().map(|b| *b)
    }

    pub fn run_test(&mut self, name: &str) -> TestOutcome {
        self.heap.clear();
        self.frames.clear();
        self.steps = 0;
        self.covered.clear();
        self.expected_exceptions.clear();
        self.init_statics();
        let result = self.run_fn(name, Vec::new(), None);
        let verdict = match result {
            Ok(_) => {
                if self.expected_exceptions.is_empty() {
                    Verdict::Pass
                } else {
                    Verdict::Fail {
                        message: format!(
                            "expected `{}` to be raised",
                            self.expected_exceptions.join("`, `")
                        ),
                    }
                }
            }
            Err(RtErr::Raised(ref e)) if self.expected_exceptions.iter().any(|x| x == e) => {
                Verdict::Pass
            }
            Err(RtErr::StepLimit) => Verdict::Timeout,
            Err(RtErr::AssertFailed(m)) => Verdict::Fail { message: m },
            Err(error) => Verdict::Error { error },
        };
        TestOutcome {
            name: name.to_string(),
            verdict,
            steps: self.steps,
            covered: std::mem::take(&mut self.covered),
            expected_exceptions: std::mem::take(&mut self.expected_exceptions),
        }
    }

    fn init_statics(&mut self) {
        self.statics.clear();
        for item in &self.prog.program.items {
            let Item::Record(r) = item else { continue };
            let values = r.statics.iter().map(|s| literal_value(&s.init)).collect();
            self.statics.insert(r.name.clone(), values);
        }
    }

    fn run_fn(
        &mut self,
        qualified: &str,
        args: Vec<Value>,
        this: Option<Value>,
    ) -> Result<Option<Value>, RtErr> {
        if self.frames.len() >= self.opts.call_depth_limit {
            return Err(RtErr::StackOverflow);
        }
        let f = self
            .prog
            .find_fn_fast(qualified)
            .unwrap_or_else(|| panic!("function {qualified} exists"));
        let params = f
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(args)
            .collect::<Vec<_>>();
        self.frames.push(Frame {
            function: qualified.to_string(),
            this,
            scopes: vec![params],
        });
        let flow = self.exec_block(&f.body);
        self.frames.pop();
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(None),
            Flow::Break | Flow::Continue => Err(RtErr::Internal(
                "break/continue escaped the function body".into(),
            )),
        }
    }

    fn exec_block(&mut self, b: &Block) -> Result<Flow, RtErr> {
        self.frame_mut().scopes.push(Vec::new());
        let mut flow = Flow::Normal;
        for s in &b.stmts {
            flow = self.exec_stmt(s)?;
            if !matches!(flow, Flow::Normal) {
                break;
            }
        }
        self.frame_mut().scopes.pop();
        Ok(flow)
    }

    fn charge_step(&mut self) -> Result<(), RtErr> {
        if self.sandbox.is_some() {
            self.eval_steps += 1;
            if self.eval_steps > self.opts.eval_step_budget {
                return Err(RtErr::StepLimit);
            }
        } else {
            self.steps += 1;
            if self.steps > self.opts.step_budget {
                return Err(RtErr::StepLimit);
            }
        }
        Ok(())
    }

    fn exec_stmt(&mut self, s: &Stmt) -> Result<Flow, RtErr> {
        self.charge_step()?;
        if self.sandbox.is_none() {
            if self.opts.coverage {
                let id = StatementId::new(self.frame().function.clone(), s.index);
                self.covered.insert(id);
            }
            if self.probe.is_some() {
                let here = {
                    let f = self.frame();
                    let loc = &self.probe.as_ref().unwrap().loc;
                    f.function == loc.function && s.index == loc.index
                };
                if here {
                    self.handle_arrival();
                }
            }
        }
        let tables = self.program_tables();
        match &s.kind {
            StmtKind::Let { name, init, .. } => {
                let v = self.eval(init, tables)?;
                self.frame_mut()
                    .scopes
                    .last_mut()
                    .unwrap()
                    .push((name.clone(), v));
                Ok(Flow::Normal)
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, tables)?;
                self.assign(target, v, tables)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then, els } => {
                if self.eval_bool(cond, tables)? {
                    self.exec_block(then)
                } else if let Some(e) = els {
                    self.exec_block(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => loop {
                if !self.eval_bool(cond, tables)? {
                    return Ok(Flow::Normal);
                }
                match self.exec_block(body)? {
                    Flow::Normal | Flow::Continue => {}
                    Flow::Break => return Ok(Flow::Normal),
                    ret @ Flow::Return(_) => return Ok(ret),
                }
                // Each trip around the loop is another step.
                self.charge_step()?;
            },
            StmtKind::Return(v) => {
                let value = match v {
                    Some(e) => Some(self.eval(e, tables)?),
                    None => None,
                };
                Ok(Flow::Return(value))
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Assert(cond) => {
                if self.eval_bool(cond, tables)? {
                    Ok(Flow::Normal)
                } else {
                    let text = self
                        .prog
                        .program
                        .source
                        .get(cond.span.start..cond.span.end)
                        .unwrap_or("assertion");
                    Err(RtErr::AssertFailed(text.to_string()))
                }
            }
            StmtKind::Expect(name) => {
                self.expected_exceptions.push(name.clone());
                Ok(Flow::Normal)
            }
            StmtKind::Raise(name) => Err(RtErr::Raised(name.clone())),
            StmtKind::Expr(e) => {
                self.eval(e, tables)?;
                Ok(Flow::Normal)
            }
        }
    }

    fn program_tables(&self) -> TableRef<'p> {
        TableRef {
            res: &self.prog.res,
        }
    }

    fn frame(&self) -> &Frame {
        self.frames.last().expect("active frame")
    }

    fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    // ---- probe support ----

    /// The statement at the probe location is about to execute; evaluate all
    /// candidates against the current state.
    fn handle_arrival(&mut self) {
        let Some(mut ps) = self.probe.take() else {
            return;
        };
        if (ps.arrivals.len() as u64) < ps.arrival_cap {
            ps.arrivals.push(self.steps);
            for i in 0..ps.checked.len() {
                let (v, pure, evaluated) = match &ps.checked[i] {
                    None => (crate::probe::TriVal::Err, true, false),
                    Some(ce) => {
                        let (result, pure) = self.eval_sandboxed(ce);
                        let v = match result {
                            Ok(Value::Bool(true)) => crate::probe::TriVal::True,
                            Ok(Value::Bool(false)) => crate::probe::TriVal::False,
                            _ => crate::probe::TriVal::Err,
                        };
                        (v, pure, true)
                    }
                };
                if !pure {
                    ps.dynamically_pure[i] = false;
                }
                if evaluated && matches!(v, crate::probe::TriVal::Err) {
                    ps.any_eval_error[i] = true;
                }
                ps.values[i].push(v);
            }
        } else {
            ps.truncated = true;
        }
        self.probe = Some(ps);
    }

    /// Evaluate a checked expression in the current frame inside a write
    /// journal. Returns the result and whether the evaluation left all
    /// pre-existing state untouched.
    fn eval_sandboxed(&mut self, ce: &CheckedExpr) -> (Result<Value, RtErr>, bool) {
        self.sandbox = Some(Sandbox {
            base_heap: self.heap.len(),
            journal: Vec::new(),
            wrote_prior_state: false,
        });
        self.eval_steps = 0;
        let tables = TableRef { res: &ce.res };
        let result = self.eval(&ce.expr, tables);
        let sb = self.sandbox.take().expect("sandbox still open");
        for (idx, slot, old) in sb.journal.into_iter().rev() {
            match (&mut self.heap[idx], slot) {
                (HeapObj::Record { fields, .. }, Slot::Field(f)) => fields[f] = old,
                (HeapObj::Array(elems), Slot::Elem(e)) => elems[e] = old,
                _ => {}
            }
        }
        self.heap.truncate(sb.base_heap);
        (result, !sb.wrote_prior_state)
    }

    // ---- evaluation ----

    fn eval_bool(&mut self, e: &Expr, t: TableRef<'_>) -> Result<bool, RtErr> {
        match self.eval(e, t)? {
            Value::Bool(b) => Ok(b),
            other => Err(RtErr::Internal(format!(
                "condition evaluated to {}",
                other.kind_name()
            ))),
        }
    }

    fn eval(&mut self, e: &Expr, t: TableRef<'_>) -> Result<Value, RtErr> {
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Bool(v) => Ok(Value::Bool(*v)),
            ExprKind::Char(c) => Ok(Value::Char(*c)),
            ExprKind::Str(s) => Ok(Value::Str(Rc::from(s.as_str()))),
            ExprKind::Null => Ok(Value::Null),
            ExprKind::StrPlaceholder | ExprKind::CharPlaceholder => Err(RtErr::Internal(
                "placeholder literal reached evaluation".into(),
            )),
            ExprKind::Ident(name) => match t.res.get(&e.id) {
                Some(Resolution::Local) => self.lookup_local(name),
                Some(Resolution::SelfField { index }) => {
                    let this = self.this_value()?;
                    self.read_field(&this, *index)
                }
                other => Err(RtErr::Internal(format!(
                    "identifier `{name}` resolved to {other:?}"
                ))),
            },
            ExprKind::This => self.this_value(),
            ExprKind::Unary(op, operand) => {
                let v = self.eval(operand, t)?;
                match (op, v) {
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
                    (_, v) => Err(RtErr::Internal(format!(
                        "unary operator on {}",
                        v.kind_name()
                    ))),
                }
            }
            ExprKind::Binary(op, lhs, rhs) => self.eval_binary(*op, lhs, rhs, t),
            ExprKind::Member { base, name } => match t.res.get(&e.id) {
                Some(Resolution::StaticField { record, index }) => Ok(self.statics[record]
                    [*index]
                    .clone()),
                Some(Resolution::Field { index }) => {
                    let b = self.eval(base, t)?;
                    self.read_field(&b, *index)
                }
                Some(Resolution::ArrayLength) => {
                    let b = self.eval(base, t)?;
                    let idx = self.deref(&b)?;
                    match &self.heap[idx] {
                        HeapObj::Array(elems) => Ok(Value::Int(elems.len() as i64)),
                        _ => Err(RtErr::Internal("length of a non-array".into())),
                    }
                }
                other => Err(RtErr::Internal(format!(
                    "member `{name}` resolved to {other:?}"
                ))),
            },
            ExprKind::Call { base, name, args } => match t.res.get(&e.id).cloned() {
                Some(Resolution::Method { record, name }) => {
                    let recv = self.eval(base, t)?;
                    if matches!(recv, Value::Null) {
                        return Err(RtErr::NullAccess);
                    }
                    let argv = self.eval_args(args, t)?;
                    Ok(self
                        .run_fn(&format!("{record}.{name}"), argv, Some(recv))?
                        .unwrap_or(Value::Null))
                }
                Some(Resolution::StaticMethod { record, name }) => {
                    let argv = self.eval_args(args, t)?;
                    Ok(self
                        .run_fn(&format!("{record}.{name}"), argv, None)?
                        .unwrap_or(Value::Null))
                }
                Some(Resolution::StrBuiltin(builtin)) => {
                    let recv = self.eval(base, t)?;
                    let argv = self.eval_args(args, t)?;
                    self.str_builtin(builtin, recv, argv)
                }
                other => Err(RtErr::Internal(format!(
                    "call `{name}` resolved to {other:?}"
                ))),
            },
            ExprKind::FreeCall { name, args } => match t.res.get(&e.id).cloned() {
                Some(Resolution::FreeFn(f)) => {
                    let argv = self.eval_args(args, t)?;
                    Ok(self.run_fn(&f, argv, None)?.unwrap_or(Value::Null))
                }
                Some(Resolution::SelfMethod { record, name }) => {
                    let this = self.this_value()?;
                    let argv = self.eval_args(args, t)?;
                    Ok(self
                        .run_fn(&format!("{record}.{name}"), argv, Some(this))?
                        .unwrap_or(Value::Null))
                }
                Some(Resolution::StaticMethod { record, name }) => {
                    let argv = self.eval_args(args, t)?;
                    Ok(self
                        .run_fn(&format!("{record}.{name}"), argv, None)?
                        .unwrap_or(Value::Null))
                }
                other => Err(RtErr::Internal(format!(
                    "free call `{name}` resolved to {other:?}"
                ))),
            },
            ExprKind::Index { base, index } => {
                let b = self.eval(base, t)?;
                let i = self.eval(index, t)?;
                let idx = self.deref(&b)?;
                let Value::Int(i) = i else {
                    return Err(RtErr::Internal("non-int index".into()));
                };
                match &self.heap[idx] {
                    HeapObj::Array(elems) => {
                        if i < 0 || i as usize >= elems.len() {
                            Err(RtErr::IndexOutOfBounds {
                                index: i,
                                len: elems.len(),
                            })
                        } else {
                            Ok(elems[i as usize].clone())
                        }
                    }
                    _ => Err(RtErr::Internal("indexing a non-array".into())),
                }
            }
            ExprKind::New { record, inits } => {
                let info = self
                    .prog
                    .registry
                    .record(record)
                    .expect("checked record name");
                let mut fields = vec![Value::Null; info.fields.len()];
                let indices: Vec<usize> = inits
                    .iter()
                    .map(|(n, _)| info.field_index(n).expect("checked field name"))
                    .collect();
                for ((_, init), idx) in inits.iter().zip(indices) {
                    fields[idx] = self.eval(init, t)?;
                }
                let id = self.alloc(HeapObj::Record {
                    record: record.clone(),
                    fields,
                });
                Ok(Value::Ref(id))
            }
            ExprKind::ArrayLit(elems) => {
                let mut values = Vec::with_capacity(elems.len());
                for e in elems {
                    values.push(self.eval(e, t)?);
                }
                let id = self.alloc(HeapObj::Array(values));
                Ok(Value::Ref(id))
            }
        }
    }

    fn eval_binary(
        &mut self,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
        t: TableRef<'_>,
    ) -> Result<Value, RtErr> {
        // Short-circuit forms first.
        match op {
            BinOp::And => {
                return Ok(Value::Bool(
                    self.eval_bool(lhs, t)? && self.eval_bool(rhs, t)?,
                ))
            }
            BinOp::Or => {
                return Ok(Value::Bool(
                    self.eval_bool(lhs, t)? || self.eval_bool(rhs, t)?,
                ))
            }
            _ => {}
        }
        let a = self.eval(lhs, t)?;
        let b = self.eval(rhs, t)?;
        match op {
            BinOp::Eq => Ok(Value::Bool(eq_values(&a, &b))),
            BinOp::Ne => Ok(Value::Bool(!eq_values(&a, &b))),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let ord = match (&a, &b) {
                    (Value::Int(x), Value::Int(y)) => x.cmp(y),
                    (Value::Char(x), Value::Char(y)) => x.cmp(y),
                    _ => {
                        return Err(RtErr::Internal(format!(
                            "ordering {} and {}",
                            a.kind_name(),
                            b.kind_name()
                        )))
                    }
                };
                Ok(Value::Bool(match op {
                    BinOp::Lt => ord.is_lt(),
                    BinOp::Le => ord.is_le(),
                    BinOp::Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                }))
            }
            BinOp::Add => match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => Ok(Value::Int(x.wrapping_add(*y))),
                (Value::Str(x), Value::Str(y)) => {
                    Ok(Value::Str(Rc::from(format!("{x}{y}").as_str())))
                }
                _ => Err(RtErr::Internal("`+` on mixed operands".into())),
            },
            BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                let (Value::Int(x), Value::Int(y)) = (&a, &b) else {
                    return Err(RtErr::Internal("arithmetic on non-ints".into()));
                };
                match op {
                    BinOp::Sub => Ok(Value::Int(x.wrapping_sub(*y))),
                    BinOp::Mul => Ok(Value::Int(x.wrapping_mul(*y))),
                    BinOp::Div | BinOp::Rem if *y == 0 => Err(RtErr::DivisionByZero),
                    BinOp::Div => Ok(Value::Int(x.wrapping_div(*y))),
                    _ => Ok(Value::Int(x.wrapping_rem(*y))),
                }
            }
            BinOp::And | BinOp::Or => unreachable!("short-circuit forms handled above"),
        }
    }

    fn str_builtin(&mut self, f: StrFn, recv: Value, args: Vec<Value>) -> Result<Value, RtErr> {
        let Value::Str(s) = recv else {
            return match recv {
                Value::Null => Err(RtErr::NullAccess),
                other => Err(RtErr::Internal(format!(
                    "string method on {}",
                    other.kind_name()
                ))),
            };
        };
        match f {
            StrFn::Length => Ok(Value::Int(s.chars().count() as i64)),
            StrFn::IsEmpty => Ok(Value::Bool(s.is_empty())),
            StrFn::CharAt => {
                let Some(Value::Int(i)) = args.first() else {
                    return Err(RtErr::Internal("charAt needs an int".into()));
                };
                let len = s.chars().count();
                if *i < 0 || *i as usize >= len {
                    Err(RtErr::IndexOutOfBounds {
                        index: *i,
                        len,
                    })
                } else {
                    Ok(Value::Char(s.chars().nth(*i as usize).unwrap()))
                }
            }
        }
    }

    fn eval_args(&mut self, args: &[Expr], t: TableRef<'_>) -> Result<Vec<Value>, RtErr> {
        args.iter().map(|a| self.eval(a, t)).collect()
    }

    fn assign(&mut self, target: &Expr, value: Value, t: TableRef<'_>) -> Result<(), RtErr> {
        match &target.kind {
            ExprKind::Ident(name) => match t.res.get(&target.id) {
                Some(Resolution::Local) => {
                    let frame = self.frames.last_mut().expect("active frame");
                    for layer in frame.scopes.iter_mut().rev() {
                        if let Some(slot) = layer.iter_mut().rev().find(|(n, _)| n == name) {
                            slot.1 = value;
                            return Ok(());
                        }
                    }
                    Err(RtErr::Internal(format!("missing local `{name}`")))
                }
                Some(Resolution::SelfField { index }) => {
                    let this = self.this_value()?;
                    let idx = self.deref(&this)?;
                    self.write_heap(idx, Slot::Field(*index), value)
                }
                other => Err(RtErr::Internal(format!(
                    "assign target `{name}` resolved to {other:?}"
                ))),
            },
            ExprKind::Member { base, .. } => match t.res.get(&target.id) {
                Some(Resolution::Field { index }) => {
                    let b = self.eval(base, t)?;
                    let idx = self.deref(&b)?;
                    self.write_heap(idx, Slot::Field(*index), value)
                }
                other => Err(RtErr::Internal(format!(
                    "member assign resolved to {other:?}"
                ))),
            },
            ExprKind::Index { base, index } => {
                let b = self.eval(base, t)?;
                let i = self.eval(index, t)?;
                let idx = self.deref(&b)?;
                let Value::Int(i) = i else {
                    return Err(RtErr::Internal("non-int index".into()));
                };
                let len = match &self.heap[idx] {
                    HeapObj::Array(elems) => elems.len(),
                    _ => return Err(RtErr::Internal("indexing a non-array".into())),
                };
                if i < 0 || i as usize >= len {
                    return Err(RtErr::IndexOutOfBounds { index: i, len });
                }
                self.write_heap(idx, Slot::Elem(i as usize), value)
            }
            _ => Err(RtErr::Internal("unsupported assignment target".into())),
        }
    }

    fn write_heap(&mut self, idx: usize, slot: Slot, value: Value) -> Result<(), RtErr> {
        if let Some(sb) = &mut self.sandbox {
            if idx < sb.base_heap {
                let old = match (&self.heap[idx], slot) {
                    (HeapObj::Record { fields, .. }, Slot::Field(f)) => fields[f].clone(),
                    (HeapObj::Array(elems), Slot::Elem(e)) => elems[e].clone(),
                    _ => return Err(RtErr::Internal("slot mismatch".into())),
                };
                sb.journal.push((idx, slot, old));
                sb.wrote_prior_state = true;
            }
        }
        match (&mut self.heap[idx], slot) {
            (HeapObj::Record { fields, .. }, Slot::Field(f)) => fields[f] = value,
            (HeapObj::Array(elems), Slot::Elem(e)) => elems[e] = value,
            _ => return Err(RtErr::Internal("slot mismatch".into())),
        }
        Ok(())
    }

    fn alloc(&mut self, obj: HeapObj) -> usize {
        self.heap.push(obj);
        self.heap.len() - 1
    }

    fn deref(&self, v: &Value) -> Result<usize, RtErr> {
        match v {
            Value::Ref(idx) => Ok(*idx),
            Value::Null => Err(RtErr::NullAccess),
            other => Err(RtErr::Internal(format!(
                "dereferencing {}",
                other.kind_name()
            ))),
        }
    }

    fn read_field(&self, base: &Value, index: usize) -> Result<Value, RtErr> {
        let idx = self.deref(base)?;
        match &self.heap[idx] {
            HeapObj::Record { fields, .. } => Ok(fields[index].clone()),
            _ => Err(RtErr::Internal("field access on a non-record".into())),
        }
    }

    fn this_value(&self) -> Result<Value, RtErr> {
        self.frame()
            .this
            .clone()
            .ok_or_else(|| RtErr::Internal("`this` outside an instance method".into()))
    }

    fn lookup_local(&self, name: &str) -> Result<Value, RtErr> {
        let frame = self.frame();
        for layer in frame.scopes.iter().rev() {
            if let Some((_, v)) = layer.iter().rev().find(|(n, _)| n == name) {
                return Ok(v.clone());
            }
        }
        Err(RtErr::Internal(format!("missing local `{name}`")))
    }
}

fn literal_value(e: &Expr) -> Value {
    match &e.kind {
        ExprKind::Int(v) => Value::Int(*v),
        ExprKind::Bool(v) => Value::Bool(*v),
        ExprKind::Char(c) => Value::Char(*c),
        ExprKind::Str(s) => Value::Str(Rc::from(s.as_str())),
        ExprKind::Null => Value::Null,
        ExprKind::Unary(UnOp::Neg, inner) => match &inner.kind {
            ExprKind::Int(v) => Value::Int(v.wrapping_neg()),
            _ => Value::Null,
        },
        _ => Value::Null,
    }
}
