//! Type checker rules: what must pass, what must be rejected, and how
//! standalone expressions are checked against a statement's scope.

use minilang::{lex, parse, parse_expr_tokens, typecheck, typecheck_expr_at, StatementId, Type};

fn check(src: &str) -> Result<minilang::TypedProgram, minilang::TypeError> {
    typecheck(&parse(&lex(src).unwrap(), src).unwrap())
}

fn assert_rejected(src: &str, needle: &str) {
    match check(src) {
        Ok(_) => panic!("program should be rejected: {src}"),
        Err(e) => assert!(
            e.to_string().contains(needle),
            "error {e} should mention {needle:?}"
        ),
    }
}

#[test]
fn well_typed_program_checks() {
    let src = "record Pair {\n    a: int;\n    b: int;\n    static ZERO: int = 0;\n\n    pure fn sum(): int {\n        return a + b;\n    }\n\n    static fn origin(): Pair {\n        return new Pair { a: Pair.ZERO, b: 0 };\n    }\n}\n\nfn swap_ok(p: Pair): bool {\n    let t: int = p.a;\n    p.a = p.b;\n    p.b = t;\n    return p.sum() == p.a + p.b;\n}\n\nfn test_swap() {\n    let p: Pair = Pair.origin();\n    assert swap_ok(p);\n}\n";
    check(src).unwrap();
}

#[test]
fn conditions_must_be_bool() {
    assert_rejected("fn f(a: int) { if (a) { return; } }", "bool");
    assert_rejected("fn f(a: int) { while (a + 1) { return; } }", "bool");
    assert_rejected("fn f(a: int) { assert a; }", "bool");
}

#[test]
fn arithmetic_and_comparison_rules() {
    assert_rejected("fn f(a: bool): int { return a + 1; }", "`+`");
    assert_rejected("fn f(s: string): bool { return s < s; }", "order");
    assert_rejected(
        "fn f(c: char, i: int): bool { return c < i; }",
        "order",
    );
    // char ordering and string concatenation are allowed
    check("fn f(c: char): bool { return c >= 'a'; } fn g(s: string): string { return s + \"x\"; }")
        .unwrap();
}

#[test]
fn equality_needs_compatible_types() {
    assert_rejected("fn f(a: int, b: bool): bool { return a == b; }", "compare");
    assert_rejected("fn f(a: int): bool { return a == null; }", "compare");
    check("record R { x: int; }\nfn f(r: R, s: string): bool { return r == null || s == null || null == null; }").unwrap();
}

#[test]
fn static_fields_are_immutable() {
    assert_rejected(
        "record C { static MAX: int = 9; }\nfn f() { C.MAX = 1; }",
        "immutable",
    );
}

#[test]
fn pure_functions_cannot_write_heap_or_call_impure() {
    assert_rejected(
        "record R { x: int; pure fn bad() { x = 1; } }",
        "pure",
    );
    assert_rejected(
        "record R { x: int; fn bump() { x = x + 1; } pure fn bad() { bump(); } }",
        "pure",
    );
    assert_rejected(
        "fn imp(xs: [int]) { xs[0] = 1; }\npure fn bad(xs: [int]) { imp(xs); }",
        "pure",
    );
    // Pure functions may allocate, read fields, and call pure functions.
    check("record R { x: int; pure fn twice(): int { return x * 2; } pure fn fresh(): R { return new R { x: twice() }; } }").unwrap();
}

#[test]
fn value_functions_must_return_on_all_paths() {
    assert_rejected(
        "fn f(a: int): int { if (a > 0) { return 1; } }",
        "without returning",
    );
    // A raise counts as leaving the function.
    check("fn f(a: int): int { if (a > 0) { return 1; } raise Underflow; }").unwrap();
    check("fn f(a: int): int { if (a > 0) { return 1; } else { return 0; } }").unwrap();
}

#[test]
fn expect_only_in_tests_and_test_shape_enforced() {
    assert_rejected("fn f() { expect Boom; }", "test");
    assert_rejected("fn test_bad(a: int) { assert a == 0; }", "test function");
    check("fn test_ok() { expect Boom; raise Boom; }").unwrap();
}

#[test]
fn test_functions_cannot_be_called() {
    assert_rejected(
        "fn test_a() { assert true; }\nfn f() { test_a(); }",
        "cannot be called",
    );
}

#[test]
fn member_resolution_rules() {
    assert_rejected(
        "record R { x: int; }\nfn f(r: R): int { return r.y; }",
        "no field",
    );
    assert_rejected("fn f(s: string): int { return s.length; }", "called");
    assert_rejected("record R { x: int; }\nfn f(): int { return R; }", "not a value");
    check("fn f(s: string, xs: [int]): int { return s.length() + xs.length; }").unwrap();
}

#[test]
fn this_and_bare_fields_resolve_in_instance_methods_only() {
    assert_rejected(
        "record R { x: int; static fn s(): int { return x; } }",
        "unknown variable",
    );
    assert_rejected(
        "record R { x: int; static fn s(): int { return this.x; } }",
        "instance method",
    );
    check("record R { x: int; fn both(): int { return this.x + x; } }").unwrap();
}

#[test]
fn news_require_every_field_exactly_once() {
    assert_rejected(
        "record P { a: int; b: int; }\nfn f(): P { return new P { a: 1 }; }",
        "not initialized",
    );
    assert_rejected(
        "record P { a: int; }\nfn f(): P { return new P { a: 1, a: 2 }; }",
        "twice",
    );
}

#[test]
fn empty_array_literal_needs_context() {
    assert_rejected("fn f() { let x: int = 0; x = [].length; }", "infer");
    check("fn f(): int { let xs: [int] = []; return xs.length; }").unwrap();
}

#[test]
fn expr_at_uses_scope_of_that_statement() {
    let src = "fn f(a: int): int {\n    let x: int = a + 1;\n    if (x > 0) {\n        let y: int = x * 2;\n        return y;\n    }\n    return x;\n}\n";
    let tp = check(src).unwrap();
    let at = |loc: u32, text: &str| {
        let e = parse_expr_tokens(&lex(text).unwrap()).unwrap();
        typecheck_expr_at(&tp, &StatementId::new("f", loc), &e).map(|ce| ce.ty)
    };
    // Before the first let, only the parameter is visible.
    assert!(at(0, "a > 0").is_ok());
    assert!(at(0, "x > 0").is_err());
    // Before its own let, y is not yet visible.
    assert!(at(2, "y == x").is_err());
    // Before the return inside the if, both locals are visible.
    assert_eq!(at(3, "y == x").unwrap(), Type::Bool);
    // After the if block, y is gone again.
    assert!(at(4, "y == x").is_err());
    assert_eq!(at(4, "x + 1").unwrap(), Type::Int);
    // Unknown locations are reported as such.
    assert!(at(9, "a > 0").is_err());
}
