//! Scope queries against an independent brute-force visibility walker, plus
//! the soundness link between scope entries and expression checking.

use minilang::ast::{Block, StmtKind};
use minilang::{
    legal_identifiers, lex, parse, parse_expr_tokens, typecheck, typecheck_expr_at, ScopeOrigin,
    StatementId, Type, TypedProgram,
};

fn load(src: &str) -> TypedProgram {
    typecheck(&parse(&lex(src).unwrap(), src).unwrap()).unwrap()
}

/// Reference visibility computation, written independently of the scope
/// module: walk every root-to-statement path and collect let bindings that
/// appear strictly earlier at each level, then the parameters.
fn reference_visible_vars(tp: &TypedProgram, loc: &StatementId) -> Vec<String> {
    // acc grows only by let names; each descent records the length just
    // before entering the child block and restores it afterwards, so inner
    // declarations never leak to following statements.
    fn walk(block: &Block, index: u32, acc: &mut Vec<String>, out: &mut Option<Vec<String>>) {
        for stmt in &block.stmts {
            if stmt.index == index {
                *out = Some(acc.clone());
                return;
            }
            match &stmt.kind {
                StmtKind::If { then, els, .. } => {
                    let before = acc.len();
                    walk(then, index, acc, out);
                    if out.is_some() {
                        return;
                    }
                    acc.truncate(before);
                    if let Some(e) = els {
                        walk(e, index, acc, out);
                        if out.is_some() {
                            return;
                        }
                        acc.truncate(before);
                    }
                }
                StmtKind::While { body, .. } => {
                    let before = acc.len();
                    walk(body, index, acc, out);
                    if out.is_some() {
                        return;
                    }
                    acc.truncate(before);
                }
                StmtKind::Let { name, .. } => acc.push(name.clone()),
                _ => {}
            }
        }
    }

    let f = tp.program.find_fn(&loc.function).unwrap();
    let mut acc: Vec<String> = Vec::new();
    let mut out = None;
    walk(&f.body, loc.index, &mut acc, &mut out);
    let mut names: Vec<String> = f.params.iter().map(|p| p.name.clone()).collect();
    for n in out.expect("location exists") {
        if !names.contains(&n) {
            names.push(n);
        }
    }
    names
}

const SRC: &str = r#"
record Util {
    seed: int;
    static BASE: int = 7;

    static fn scaled(k: int): int {
        return Util.BASE * k;
    }
}

record Plain {
    p: int;
}

fn mix(a: int, flag: bool): int {
    let total: int = a;
    if (flag) {
        let bonus: int = Util.scaled(2);
        total = total + bonus;
    }
    while (total > 100) {
        let step: int = 10;
        total = total - step;
    }
    return total;
}

fn test_mix() {
    let r: int = mix(3, true);
    assert r == 17;
}
"#;

#[test]
fn variables_match_reference_walker_at_every_statement() {
    let tp = load(SRC);
    let f = tp.program.find_fn("mix").unwrap();
    let count = minilang::ast::statement_count(f) as u32;
    for index in 0..count {
        let loc = StatementId::new("mix", index);
        let expected = reference_visible_vars(&tp, &loc);
        let entries = legal_identifiers(&tp, &loc).unwrap();
        let vars: Vec<String> = entries
            .iter()
            .filter(|e| matches!(e.origin, ScopeOrigin::Parameter | ScopeOrigin::Local))
            .map(|e| e.identifier.clone())
            .collect();
        assert_eq!(vars, expected, "at mix#{index}");
    }
}

#[test]
fn hand_checked_scope_at_inner_statement() {
    let tp = load(SRC);
    // mix: let total=0, if=1, let bonus=2, assign=3, while=4, let step=5,
    // assign=6, return=7. At the assignment inside the if, `bonus` is
    // visible; at the one inside the while, `step` is but `bonus` is not.
    let at = |i: u32| {
        legal_identifiers(&tp, &StatementId::new("mix", i))
            .unwrap()
            .into_iter()
            .map(|e| e.identifier)
            .collect::<Vec<_>>()
    };
    let names3 = at(3);
    assert!(names3.contains(&"bonus".to_string()));
    let names6 = at(6);
    assert!(names6.contains(&"step".to_string()));
    assert!(!names6.contains(&"bonus".to_string()));
}

#[test]
fn statics_literals_and_placeholders_are_present() {
    let tp = load(SRC);
    let entries = legal_identifiers(&tp, &StatementId::new("mix", 0)).unwrap();
    let util = entries
        .iter()
        .find(|e| e.identifier == "Util")
        .expect("record with statics is usable");
    assert_eq!(util.origin, ScopeOrigin::StaticMember);
    let member_names: Vec<&str> = util
        .type_info
        .members
        .iter()
        .map(|m| m.name.as_str())
        .collect();
    assert_eq!(member_names, vec!["BASE", "scaled"]);
    // Plain has no statics, so its bare name can start no expression.
    assert!(!entries.iter().any(|e| e.identifier == "Plain"));
    let tail: Vec<&str> = entries
        .iter()
        .rev()
        .take(7)
        .map(|e| e.identifier.as_str())
        .collect();
    assert_eq!(
        tail,
        vec!["<char>", "<str>", "false", "true", "1", "0", "null"]
    );
}

#[test]
fn fields_appear_bare_inside_instance_methods_only() {
    let src = r#"
record Counter {
    n: int;

    fn tick(): int {
        return n + 1;
    }

    static fn zero(): int {
        return 0;
    }
}

fn test_counter() {
    let c: Counter = new Counter { n: 1 };
    assert c.tick() == 2;
}
"#;
    let tp = load(src);
    let in_method = legal_identifiers(&tp, &StatementId::new("Counter.tick", 0)).unwrap();
    assert!(in_method
        .iter()
        .any(|e| e.identifier == "n" && e.origin == ScopeOrigin::Field));
    let in_static = legal_identifiers(&tp, &StatementId::new("Counter.zero", 0)).unwrap();
    assert!(!in_static.iter().any(|e| e.identifier == "n"));
}

#[test]
fn every_bare_entry_typechecks_at_its_location() {
    let tp = load(SRC);
    let loc = StatementId::new("mix", 3);
    for entry in legal_identifiers(&tp, &loc).unwrap() {
        match entry.origin {
            ScopeOrigin::StaticMember => {
                // Static members are reachable as Name.member; check the
                // zero-argument ones directly.
                for m in entry
                    .type_info
                    .members
                    .iter()
                    .filter(|m| m.is_field || m.params.is_empty())
                {
                    let text = if m.is_field {
                        format!("{}.{}", entry.identifier, m.name)
                    } else {
                        format!("{}.{}()", entry.identifier, m.name)
                    };
                    let e = parse_expr_tokens(&lex(&text).unwrap()).unwrap();
                    let ce = typecheck_expr_at(&tp, &loc, &e).unwrap();
                    assert_eq!(ce.ty, m.ret, "{text}");
                }
            }
            ScopeOrigin::StringPlaceholder => {
                // Placeholders have no surface syntax; instantiation replaces
                // them with concrete literals before any parse.
            }
            _ => {
                let e = parse_expr_tokens(&lex(&entry.identifier).unwrap()).unwrap();
                let ce = typecheck_expr_at(&tp, &loc, &e).unwrap();
                assert_eq!(ce.ty, entry.type_info.ty, "{}", entry.identifier);
            }
        }
    }
}

#[test]
fn shadowing_resolves_to_innermost_binding() {
    let src = r#"
fn shadow(a: int): int {
    let x: int = a;
    if (a > 0) {
        let x: bool = true;
        return 1;
    }
    return x;
}

fn test_shadow() {
    assert shadow(1) == 1;
}
"#;
    let tp = load(src);
    let entries = legal_identifiers(&tp, &StatementId::new("shadow", 3)).unwrap();
    let x = entries.iter().find(|e| e.identifier == "x").unwrap();
    assert_eq!(x.type_info.ty, Type::Bool);
    assert_eq!(
        entries.iter().filter(|e| e.identifier == "x").count(),
        1,
        "shadowed names collapse to one entry"
    );
}
