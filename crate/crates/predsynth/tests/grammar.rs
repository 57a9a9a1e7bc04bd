//! Exactness tests for the typed expression grammar.
//!
//! Ground truth is computed without the recognizer: a candidate token
//! sequence is valid iff the production parser accepts it, the AST stays
//! inside the predicate language (no constructors, array literals, `this` or
//! free calls), structural depths respect the budget, and the type checker
//! assigns `bool` at the location. The tests drive both directions:
//! exhaustive enumeration of valid completions must thread through
//! `legal_next`, and everything `legal_next` offers must be finishable into
//! an independently verified completion.

use std::collections::HashMap;

use minilang::ast::{Expr, ExprKind, StatementId};
use minilang::error::ParseError;
use minilang::{
    legal_identifiers, lex, parse, parse_expr_tokens, typecheck, typecheck_expr_at, Token,
    TokenKind, Type, TypedProgram,
};
use predsynth::grammar::{
    instantiate_placeholders, DepthBudget, GrammarError, GrammarScope, GrammarState,
    MethodLiterals, SeedMode,
};

const TOY: &str = "\
record Node {
    next: Node;

    pure fn isDelProp(): bool {
        return true;
    }
}

fn probeHere(n: Node, len: int, ok: bool): bool {
    return ok;
}
";

const RICH: &str = "\
record Util {
    static BASE: int = 3;

    static pure fn scaled(k: int): int {
        return k * Util.BASE;
    }

    static pure fn within(x: int, lo: int, hi: int): bool {
        return lo <= x && x <= hi;
    }
}

fn checkHere(xs: [int], tag: string, i: int): bool {
    let hit: bool = Util.scaled(i) > 0;
    return hit;
}
";

fn program(src: &str) -> TypedProgram {
    typecheck(&parse(&lex(src).unwrap(), src).unwrap()).unwrap()
}

fn toy_loc() -> StatementId {
    StatementId::new("probeHere", 0)
}

fn rich_loc() -> StatementId {
    StatementId::new("checkHere", 1)
}

fn scope_at(prog: &TypedProgram, loc: &StatementId) -> GrammarScope {
    GrammarScope::build(prog, &legal_identifiers(prog, loc).unwrap())
}

fn fresh(prog: &TypedProgram, loc: &StatementId, budget: DepthBudget) -> GrammarState {
    GrammarState::init(scope_at(prog, loc), &SeedMode::FreshIf, budget).unwrap()
}

fn tok(kind: TokenKind, lexeme: &str) -> Token {
    Token::synthetic(kind, lexeme)
}

fn toks(spec: &[(&str, TokenKind)]) -> Vec<Token> {
    spec.iter().map(|(l, k)| tok(*k, l)).collect()
}

/// Lexes a whitespace-separated expression into tokens (placeholders are not
/// lexable, so tests that need them build tokens directly).
fn lex_expr(src: &str) -> Vec<Token> {
    lex(src).unwrap()
}

fn lexemes(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| t.lexeme.clone()).collect()
}

// ---- independent validity oracle ----

fn ast_allowed(expr: &Expr) -> bool {
    let mut stack = vec![expr];
    while let Some(e) = stack.pop() {
        match &e.kind {
            ExprKind::New { .. }
            | ExprKind::ArrayLit(_)
            | ExprKind::This
            | ExprKind::FreeCall { .. } => return false,
            ExprKind::Unary(_, inner) => stack.push(inner),
            ExprKind::Binary(_, lhs, rhs) => {
                stack.push(lhs);
                stack.push(rhs);
            }
            ExprKind::Member { base, .. } => stack.push(base),
            ExprKind::Call { base, args, .. } => {
                stack.push(base);
                stack.extend(args.iter());
            }
            ExprKind::Index { base, index } => {
                stack.push(base);
                stack.push(index);
            }
            _ => {}
        }
    }
    true
}

/// Maximum simultaneously open brackets over the token sequence.
fn max_bracket_depth(tokens: &[Token]) -> usize {
    let mut depth: usize = 0;
    let mut max = 0;
    for t in tokens {
        match t.lexeme.as_str() {
            "(" | "[" if t.kind == TokenKind::Punctuation => {
                depth += 1;
                max = max.max(depth);
            }
            ")" | "]" if t.kind == TokenKind::Punctuation => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    max
}

/// Deepest chain of calls-with-arguments open at once (a call in receiver
/// position closes before the outer argument list opens, so only argument
/// subtrees extend the chain).
fn max_arg_call_depth(expr: &Expr) -> usize {
    match &expr.kind {
        ExprKind::Call { base, args, .. } => {
            let in_args = args.iter().map(max_arg_call_depth).max().unwrap_or(0);
            let own = if args.is_empty() { 0 } else { 1 + in_args };
            own.max(max_arg_call_depth(base))
        }
        ExprKind::Unary(_, inner) => max_arg_call_depth(inner),
        ExprKind::Binary(_, lhs, rhs) => max_arg_call_depth(lhs).max(max_arg_call_depth(rhs)),
        ExprKind::Member { base, .. } => max_arg_call_depth(base),
        ExprKind::Index { base, index } => max_arg_call_depth(base).max(max_arg_call_depth(index)),
        _ => 0,
    }
}

fn oracle_valid(
    prog: &TypedProgram,
    loc: &StatementId,
    tokens: &[Token],
    budget: DepthBudget,
) -> bool {
    let Ok(expr) = parse_expr_tokens(tokens) else {
        return false;
    };
    if !ast_allowed(&expr) {
        return false;
    }
    if max_bracket_depth(tokens) > budget.max_nesting {
        return false;
    }
    if max_arg_call_depth(&expr) > budget.max_call_args {
        return false;
    }
    matches!(typecheck_expr_at(prog, loc, &expr), Ok(ce) if ce.ty == Type::Bool)
}

// ---- spec point behavior ----

#[test]
fn member_position_offers_exactly_the_members_of_the_receiver() {
    let prog = program(TOY);
    let state = fresh(&prog, &toy_loc(), DepthBudget::default());
    let state = state.advance(&tok(TokenKind::Identifier, "n")).unwrap();
    let state = state.advance(&tok(TokenKind::Punctuation, ".")).unwrap();
    assert_eq!(lexemes(&state.legal_next()), ["isDelProp", "next"]);
    assert!(!state.is_complete());
}

#[test]
fn complete_boolean_atom_extends_only_with_boolean_operators() {
    let prog = program(TOY);
    let state = fresh(&prog, &toy_loc(), DepthBudget::default());
    let state = state.advance(&tok(TokenKind::Literal, "true")).unwrap();
    assert!(state.is_complete());
    assert_eq!(lexemes(&state.legal_next()), ["&&", "||", "==", "!="]);
}

#[test]
fn zero_arity_call_continuations_are_forced_one_by_one() {
    let prog = program(TOY);
    let mut state = fresh(&prog, &toy_loc(), DepthBudget::default());
    for lexeme in ["n", "isDelProp"] {
        state = state.advance(&tok(TokenKind::Identifier, lexeme)).unwrap();
        if lexeme == "n" {
            state = state.advance(&tok(TokenKind::Punctuation, ".")).unwrap();
        }
    }
    assert_eq!(lexemes(&state.legal_next()), ["("]);
    let state = state.advance(&tok(TokenKind::Punctuation, "(")).unwrap();
    assert_eq!(lexemes(&state.legal_next()), [")"]);
    let state = state.advance(&tok(TokenKind::Punctuation, ")")).unwrap();
    assert!(state.is_complete());
    assert_eq!(state.surface(), "n.isDelProp()");
}

#[test]
fn reopened_comparison_offers_connectives_close_and_arithmetic() {
    let prog = program(TOY);
    let prefix = lex_expr("( len > 0");
    let state = GrammarState::init(
        scope_at(&prog, &toy_loc()),
        &SeedMode::ReopenExisting(prefix),
        DepthBudget::default(),
    )
    .unwrap();
    assert!(!state.is_complete());
    let legal = lexemes(&state.legal_next());
    assert_eq!(legal, ["&&", "||", "==", "!=", "+", "-", "*", "/", "%", ")"]);
}

#[test]
fn reopening_a_malformed_prefix_is_rejected_with_its_position() {
    let prog = program(TOY);
    let err = GrammarState::init(
        scope_at(&prog, &toy_loc()),
        &SeedMode::ReopenExisting(lex_expr(") len")),
        DepthBudget::default(),
    )
    .unwrap_err();
    assert_eq!(
        err,
        GrammarError::InvalidReopenPrefix {
            position: 0,
            token: ")".into()
        }
    );

    let err = GrammarState::init(
        scope_at(&prog, &toy_loc()),
        &SeedMode::ReopenExisting(lex_expr("len > >")),
        DepthBudget::default(),
    )
    .unwrap_err();
    assert_eq!(
        err,
        GrammarError::InvalidReopenPrefix {
            position: 2,
            token: ">".into()
        }
    );
}

#[test]
fn advance_rejects_tokens_outside_the_legal_set() {
    let prog = program(TOY);
    let state = fresh(&prog, &toy_loc(), DepthBudget::default());
    let state = state.advance(&tok(TokenKind::Identifier, "len")).unwrap();
    // `.` is structurally meaningless on int, `&&` is type-dead.
    for bad in [
        tok(TokenKind::Punctuation, "."),
        tok(TokenKind::Operator, "&&"),
        tok(TokenKind::Identifier, "unknown"),
    ] {
        assert_eq!(
            state.advance(&bad).unwrap_err(),
            GrammarError::IllegalToken {
                token: bad.lexeme.clone()
            }
        );
    }
}

#[test]
fn nesting_budget_caps_bracket_depth_exactly() {
    let prog = program(TOY);
    let mut state = fresh(&prog, &toy_loc(), DepthBudget::default());
    let open = tok(TokenKind::Punctuation, "(");
    for _ in 0..4 {
        assert!(lexemes(&state.legal_next()).contains(&"(".to_string()));
        state = state.advance(&open).unwrap();
    }
    assert!(!lexemes(&state.legal_next()).contains(&"(".to_string()));
    // A full completion at exactly the budget still works.
    for t in lex_expr("ok ) ) ) )") {
        state = state.advance(&t).unwrap();
    }
    assert!(state.is_complete());
    assert_eq!(state.surface(), "((((ok))))");
}

#[test]
fn argument_call_budget_limits_calls_inside_arguments() {
    let prog = program(TOY);
    let tight = DepthBudget {
        max_nesting: 4,
        max_call_args: 1,
    };
    let mut state = fresh(&prog, &toy_loc(), tight);
    for t in toks(&[
        ("<str>", TokenKind::Literal),
        (".", TokenKind::Punctuation),
        ("charAt", TokenKind::Identifier),
        ("(", TokenKind::Punctuation),
        ("<str>", TokenKind::Literal),
        (".", TokenKind::Punctuation),
    ]) {
        state = state.advance(&t).unwrap();
    }
    // Inside charAt's argument only members that need no further
    // parameterized call survive the budget.
    assert_eq!(lexemes(&state.legal_next()), ["isEmpty", "length"]);

    // The default budget of two admits one more level.
    let mut state = fresh(&prog, &toy_loc(), DepthBudget::default());
    for t in toks(&[
        ("<str>", TokenKind::Literal),
        (".", TokenKind::Punctuation),
        ("charAt", TokenKind::Identifier),
        ("(", TokenKind::Punctuation),
        ("<str>", TokenKind::Literal),
        (".", TokenKind::Punctuation),
    ]) {
        state = state.advance(&t).unwrap();
    }
    assert_eq!(
        lexemes(&state.legal_next()),
        ["charAt", "isEmpty", "length"]
    );
}

#[test]
fn multi_argument_static_call_threads_commas() {
    let prog = program(RICH);
    let mut state = fresh(&prog, &rich_loc(), DepthBudget::default());
    let walk = lex_expr("Util . within ( i , 0 , i + 1 )");
    for (i, t) in walk.iter().enumerate() {
        let legal = state.legal_next();
        assert!(
            legal.contains(t),
            "token {} `{}` missing from legal set {:?}",
            i,
            t.lexeme,
            lexemes(&legal)
        );
        state = state.advance(t).unwrap();
    }
    assert!(state.is_complete());
    assert_eq!(state.surface(), "Util.within(i, 0, i + 1)");
}

// ---- placeholder instantiation ----

#[test]
fn placeholder_free_predicates_pass_through_unchanged() {
    let tokens = lex_expr("len > 0");
    let out = instantiate_placeholders(&tokens, &MethodLiterals::default()).unwrap();
    assert_eq!(out, vec![tokens]);
}

#[test]
fn each_placeholder_occurrence_expands_over_the_literal_pool() {
    let tokens = vec![
        tok(TokenKind::Literal, "<char>"),
        tok(TokenKind::Operator, "=="),
        tok(TokenKind::Literal, "<char>"),
    ];
    let pool = MethodLiterals {
        strings: Vec::new(),
        chars: vec![tok(TokenKind::Literal, "'0'"), tok(TokenKind::Literal, "'x'")],
    };
    let out = instantiate_placeholders(&tokens, &pool).unwrap();
    let rendered: Vec<String> = out.iter().map(|seq| minilang::render_tokens(seq)).collect();
    assert_eq!(
        rendered,
        ["'0' == '0'", "'0' == 'x'", "'x' == '0'", "'x' == 'x'"]
    );
}

#[test]
fn placeholders_without_matching_literals_are_reported() {
    let tokens = vec![
        tok(TokenKind::Literal, "<str>"),
        tok(TokenKind::Punctuation, "."),
        tok(TokenKind::Identifier, "isEmpty"),
        tok(TokenKind::Punctuation, "("),
        tok(TokenKind::Punctuation, ")"),
    ];
    let err = instantiate_placeholders(&tokens, &MethodLiterals::default()).unwrap_err();
    assert_eq!(
        err,
        GrammarError::NoLiteralsAvailable {
            placeholder: "<str>".into()
        }
    );
}

// ---- exhaustive agreement with the oracle ----

/// Enumerates every token sequence up to `max_len` that the oracle accepts as
/// a valid completion, pruning subtrees the parser rejects outright.
fn enumerate_valid(
    prog: &TypedProgram,
    loc: &StatementId,
    universe: &[Token],
    budget: DepthBudget,
    max_len: usize,
) -> Vec<Vec<Token>> {
    let mut out = Vec::new();
    let mut prefix: Vec<Token> = Vec::new();
    fn open_bracket_debt(tokens: &[Token]) -> usize {
        let mut depth: usize = 0;
        for t in tokens {
            if t.kind == TokenKind::Punctuation {
                match t.lexeme.as_str() {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth = depth.saturating_sub(1),
                    _ => {}
                }
            }
        }
        depth
    }
    fn rec(
        prog: &TypedProgram,
        loc: &StatementId,
        universe: &[Token],
        budget: DepthBudget,
        max_len: usize,
        prefix: &mut Vec<Token>,
        out: &mut Vec<Vec<Token>>,
    ) {
        if !prefix.is_empty() {
            match parse_expr_tokens(prefix) {
                Err(ParseError::Malformed { .. }) => return,
                Err(ParseError::Incomplete { .. }) => {}
                Ok(expr) => {
                    if ast_allowed(&expr)
                        && max_bracket_depth(prefix) <= budget.max_nesting
                        && max_arg_call_depth(&expr) <= budget.max_call_args
                        && matches!(typecheck_expr_at(prog, loc, &expr),
                                    Ok(ce) if ce.ty == Type::Bool)
                    {
                        out.push(prefix.clone());
                    }
                }
            }
            if max_bracket_depth(prefix) > budget.max_nesting {
                return;
            }
            // Closing the open brackets alone would overrun the horizon.
            if prefix.len() + open_bracket_debt(prefix) > max_len {
                return;
            }
        }
        if prefix.len() == max_len {
            return;
        }
        for t in universe {
            prefix.push(t.clone());
            rec(prog, loc, universe, budget, max_len, prefix, out);
            prefix.pop();
        }
    }
    rec(prog, loc, universe, budget, max_len, &mut prefix, &mut out);
    out
}

/// Every oracle-valid completion must thread through the grammar: each token
/// in the legal set of the state before it, with the final state complete.
fn assert_grammar_covers_enumeration(src: &str, loc: &StatementId, max_len: usize) {
    let prog = program(src);
    let budget = DepthBudget::default();
    let scope = scope_at(&prog, loc);
    let universe: Vec<Token> = scope.universe().to_vec();
    let init = GrammarState::init(scope, &SeedMode::FreshIf, budget).unwrap();

    let valid = enumerate_valid(&prog, loc, &universe, budget, max_len);
    assert!(
        valid.len() > 50,
        "enumeration unexpectedly small: {}",
        valid.len()
    );
    for completion in &valid {
        let mut state = init.clone();
        for (i, t) in completion.iter().enumerate() {
            assert!(
                state.legal_next().contains(t),
                "grammar rejects `{}` at position {} of valid `{}`",
                t.lexeme,
                i,
                minilang::render_tokens(completion)
            );
            state = state.advance(t).unwrap();
        }
        assert!(
            state.is_complete(),
            "grammar does not accept valid `{}`",
            minilang::render_tokens(completion)
        );
    }
}

#[test]
fn every_oracle_valid_completion_is_accepted_toy_scope() {
    assert_grammar_covers_enumeration(TOY, &toy_loc(), 5);
}

#[test]
fn every_oracle_valid_completion_is_accepted_rich_scope() {
    assert_grammar_covers_enumeration(RICH, &rich_loc(), 4);
}

/// Grammar-guided shortest completion by iterative deepening.
fn witness_completion(state: &GrammarState, max_extra: usize) -> Option<Vec<Token>> {
    fn dfs(state: &GrammarState, depth: usize) -> Option<Vec<Token>> {
        if state.is_complete() {
            return Some(state.tokens().to_vec());
        }
        if depth == 0 {
            return None;
        }
        for t in state.legal_next() {
            if let Some(seq) = dfs(&state.advance(&t).unwrap(), depth - 1) {
                return Some(seq);
            }
        }
        None
    }
    (0..=max_extra).find_map(|d| dfs(state, d))
}

/// Everything the grammar offers must be finishable: walk all reachable
/// prefixes, and for representatives of every distinct recognizer state
/// verify an independently checked witness completion. Complete states must
/// themselves pass the oracle.
fn assert_grammar_is_sound(src: &str, loc: &StatementId, max_depth: usize) {
    let prog = program(src);
    let budget = DepthBudget::default();
    let init = fresh(&prog, loc, budget);

    const SAMPLES_PER_STATE: usize = 3;
    let mut reps: HashMap<u64, usize> = HashMap::new();
    let mut stack = vec![init];
    let mut visited = 0usize;
    while let Some(state) = stack.pop() {
        visited += 1;
        let seen = reps.entry(state.state_digest()).or_insert(0);
        if *seen < SAMPLES_PER_STATE {
            *seen += 1;
            if state.is_complete() {
                assert!(
                    oracle_valid(&prog, loc, state.tokens(), budget),
                    "grammar accepts invalid `{}`",
                    state.surface()
                );
            }
            let witness = witness_completion(&state, 10).unwrap_or_else(|| {
                panic!("no completion reachable from `{}`", state.surface())
            });
            assert!(
                oracle_valid(&prog, loc, &witness, budget),
                "witness `{}` from `{}` fails the oracle",
                minilang::render_tokens(&witness),
                state.surface()
            );
        }
        if state.surface_len() < max_depth {
            for t in state.legal_next() {
                stack.push(state.advance(&t).unwrap());
            }
        }
    }
    assert!(visited > 300, "soundness walk unexpectedly small: {visited}");
}

#[test]
fn every_offered_token_leads_to_an_oracle_valid_completion_toy_scope() {
    assert_grammar_is_sound(TOY, &toy_loc(), 4);
}

#[test]
fn every_offered_token_leads_to_an_oracle_valid_completion_rich_scope() {
    assert_grammar_is_sound(RICH, &rich_loc(), 3);
}

// ---- determinism ----

#[test]
fn legal_sets_are_deterministic_across_states_and_inits() {
    let prog = program(RICH);
    let a = fresh(&prog, &rich_loc(), DepthBudget::default());
    let b = fresh(&prog, &rich_loc(), DepthBudget::default());
    assert_eq!(a.legal_next(), b.legal_next());
    assert_eq!(a.legal_next(), a.legal_next());

    let walk = lex_expr("Util . scaled ( xs [ i ] )");
    let mut sa = a;
    let mut sb = b;
    for t in &walk {
        sa = sa.advance(t).unwrap();
        sb = sb.advance(t).unwrap();
        assert_eq!(sa.legal_next(), sb.legal_next());
        assert_eq!(sa.is_complete(), sb.is_complete());
    }
    assert!(!sa.is_complete());
    assert_eq!(sa.surface(), "Util.scaled(xs[i])");
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Random legal walks that reach completion always satisfy the
        /// independent oracle, including walks deeper than the exhaustive
        /// horizons.
        #[test]
        fn random_legal_walks_complete_into_oracle_valid_predicates(
            choices in proptest::collection::vec(0usize..64, 1..12),
            use_rich in proptest::bool::ANY,
        ) {
            let (src, loc) = if use_rich {
                (RICH, rich_loc())
            } else {
                (TOY, toy_loc())
            };
            let prog = program(src);
            let mut state = fresh(&prog, &loc, DepthBudget::default());
            for c in choices {
                let legal = state.legal_next();
                prop_assume!(!legal.is_empty());
                state = state.advance(&legal[c % legal.len()]).unwrap();
            }
            if state.is_complete() {
                prop_assert!(oracle_valid(&prog, &loc, state.tokens(), DepthBudget::default()));
            }
        }
    }
}
