//! Pausing debug probe. A probed run executes one test normally until the
//! statement at the requested location is about to execute; at every such
//! arrival all candidate expressions are evaluated against the live state
//! (each inside a rollback journal), and the run then continues as if
//! nothing happened. One pass over a test therefore yields every candidate's
//! value at every arrival without re-running the test per candidate.

use crate::ast::{Expr, StatementId};
use crate::error::UnknownLocation;
use crate::interp::{Interp, RunOptions, Verdict};
use crate::typecheck::{typecheck_expr_at, CheckedExpr, TypedProgram};
use crate::types::Type;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriVal {
    #[serde(rename = "T")]
    True,
    #[serde(rename = "F")]
    False,
    /// Evaluation failed, produced a non-bool, or the candidate was not
    /// evaluable at all.
    #[serde(rename = "E")]
    Err,
}

/// What to probe: where to pause, which tests to run, and the caps that keep
/// pathological tests from flooding the trace.
#[derive(Clone, Debug)]
pub struct ProbeRequest {
    pub loc: StatementId,
    pub tests: Vec<String>,
    /// Maximum recorded arrivals per test; later arrivals execute without
    /// candidate evaluation and mark the trace truncated.
    pub arrival_cap: u64,
    /// Wall-clock budget for the whole probe, checked between tests.
    pub wall_budget: Option<Duration>,
}

/// Mutable probe bookkeeping carried by the interpreter during one test run.
pub struct ProbeState {
    pub(crate) loc: StatementId,
    /// Candidates that are evaluable (well-typed and bool); `None` entries
    /// keep indices aligned with the caller's candidate list.
    pub(crate) checked: Vec<Option<CheckedExpr>>,
    pub(crate) arrivals: Vec<u64>,
    pub(crate) values: Vec<Vec<TriVal>>,
    pub(crate) dynamically_pure: Vec<bool>,
    pub(crate) any_eval_error: Vec<bool>,
    pub(crate) arrival_cap: u64,
    pub(crate) truncated: bool,
}

impl ProbeState {
    fn new(loc: StatementId, checked: Vec<Option<CheckedExpr>>, arrival_cap: u64) -> Self {
        let n = checked.len();
        ProbeState {
            loc,
            checked,
            arrivals: Vec::new(),
            values: vec![Vec::new(); n],
            dynamically_pure: vec![true; n],
            any_eval_error: vec![false; n],
            arrival_cap,
            truncated: false,
        }
    }
}

/// Static and dynamic health of one candidate, aggregated over all probed
/// tests.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateProbe {
    pub is_boolean_typed: bool,
    pub is_dynamically_pure: bool,
    pub any_eval_error: bool,
}

/// Everything observed while running one test under the probe.
/// `values[c][a]` is candidate `c` at arrival `a`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestTrace {
    pub test: String,
    pub verdict: Verdict,
    /// Step numbers at which execution reached the probed statement.
    pub arrivals: Vec<u64>,
    pub values: Vec<Vec<TriVal>>,
    pub arrivals_truncated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeResult {
    pub candidates: Vec<CandidateProbe>,
    pub tests: Vec<TestTrace>,
    /// True when the wall budget ran out before all requested tests ran;
    /// `tests` then holds only the completed prefix.
    pub truncated_by_budget: bool,
}

/// Probe `candidates` at `req.loc` across the requested tests.
///
/// Candidates that fail to typecheck at the location, or that type to
/// something other than bool, are never evaluated: their trace values are
/// all [`TriVal::Err`] and their `is_boolean_typed` flag is false.
pub fn probe(
    prog: &TypedProgram,
    candidates: &[Expr],
    req: &ProbeRequest,
    opts: &RunOptions,
) -> Result<ProbeResult, UnknownLocation> {
    if prog.program.find_stmt(&req.loc).is_none() {
        return Err(UnknownLocation {
            loc: req.loc.clone(),
        });
    }
    let checked: Vec<Option<CheckedExpr>> = candidates
        .iter()
        .map(|c| {
            typecheck_expr_at(prog, &req.loc, c)
                .ok()
                .filter(|ce| ce.ty == Type::Bool)
        })
        .collect();
    let is_boolean: Vec<bool> = checked.iter().map(Option::is_some).collect();

    let started = Instant::now();
    let mut tests = Vec::new();
    let mut truncated_by_budget = false;
    let mut pure = vec![true; candidates.len()];
    let mut eval_error = vec![false; candidates.len()];

    for name in &req.tests {
        if req
            .wall_budget
            .is_some_and(|budget| started.elapsed() >= budget)
        {
            truncated_by_budget = true;
            break;
        }
        let state = ProbeState::new(req.loc.clone(), checked.clone(), req.arrival_cap);
        let mut interp = Interp::new(prog, opts.clone()).with_probe(state);
        let outcome = interp.run_test(name);
        let state = interp.take_probe().expect("probe state retained");
        for i in 0..candidates.len() {
            pure[i] &= state.dynamically_pure[i];
            eval_error[i] |= state.any_eval_error[i];
        }
        tests.push(TestTrace {
            test: name.clone(),
            verdict: outcome.verdict,
            arrivals: state.arrivals,
            values: state.values,
            arrivals_truncated: state.truncated,
        });
    }

    let candidates = is_boolean
        .into_iter()
        .zip(pure)
        .zip(eval_error)
        .map(|((b, p), e)| CandidateProbe {
            is_boolean_typed: b,
            is_dynamically_pure: p,
            any_eval_error: e,
        })
        .collect();
    Ok(ProbeResult {
        candidates,
        tests,
        truncated_by_budget,
    })
}
