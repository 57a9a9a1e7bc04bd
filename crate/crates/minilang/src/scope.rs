//! What a synthesized expression inserted before a given statement may refer
//! to: visible variables, the enclosing record's fields, record names usable
//! for static access, a fixed literal set, and literal placeholders.

use crate::ast::StatementId;
use crate::error::UnknownLocation;
use crate::typecheck::{stmt_ctx, TypedProgram};
use crate::token::{CHAR_PLACEHOLDER, STR_PLACEHOLDER};
use crate::types::{used_records, Type, TypeInfo};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeOrigin {
    Parameter,
    Local,
    /// Field of the enclosing record, accessible bare inside instance
    /// methods.
    Field,
    /// A record name; only its static members are reachable, and only
    /// through `Name.member`.
    StaticMember,
    Literal,
    /// A hole standing for a string or char literal, filled in later from
    /// literals that occur near the target.
    StringPlaceholder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeEntry {
    pub identifier: String,
    pub type_info: TypeInfo,
    pub origin: ScopeOrigin,
}

/// Identifiers legal as expression leaves right before `loc`, in a fixed
/// deterministic order: variables (shadowing resolved innermost-wins),
/// enclosing-record fields, record names with static members, literals,
/// placeholders.
///
/// Record names already shadowed by a variable or field are omitted, as the
/// shadowing binding wins at resolution and the static access would not
/// typecheck. Records without static members are omitted for the same
/// reason: their bare name can begin no well-typed expression.
pub fn legal_identifiers(
    prog: &TypedProgram,
    loc: &StatementId,
) -> Result<Vec<ScopeEntry>, UnknownLocation> {
    let ctx = stmt_ctx(prog, loc).ok_or_else(|| UnknownLocation { loc: loc.clone() })?;
    let mut entries: Vec<ScopeEntry> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();

    for (layer_idx, layer) in ctx.layers.iter().enumerate() {
        let origin = if layer_idx == 0 {
            ScopeOrigin::Parameter
        } else {
            ScopeOrigin::Local
        };
        for (name, ty) in layer {
            let entry = ScopeEntry {
                identifier: name.clone(),
                type_info: prog.registry.type_info(ty),
                origin,
            };
            match by_name.get(name) {
                // Inner declarations shadow outer ones in place.
                Some(&i) => entries[i] = entry,
                None => {
                    by_name.insert(name.clone(), entries.len());
                    entries.push(entry);
                }
            }
        }
    }

    if !ctx.is_static_method {
        if let Some(owner) = &ctx.owner {
            let info = prog.registry.record(owner).expect("owner record exists");
            for (fname, fty) in info.fields.clone() {
                if by_name.contains_key(&fname) {
                    continue;
                }
                by_name.insert(fname.clone(), entries.len());
                entries.push(ScopeEntry {
                    identifier: fname,
                    type_info: prog.registry.type_info(&fty),
                    origin: ScopeOrigin::Field,
                });
            }
        }
    }

    for rec in used_records(&prog.program, &prog.registry) {
        if by_name.contains_key(&rec) {
            continue;
        }
        let members = prog.registry.static_members_of(&rec);
        if members.is_empty() {
            continue;
        }
        entries.push(ScopeEntry {
            identifier: rec.clone(),
            type_info: TypeInfo {
                ty: Type::Record(rec),
                members,
            },
            origin: ScopeOrigin::StaticMember,
        });
    }

    for (lexeme, ty) in [
        ("null", Type::Null),
        ("0", Type::Int),
        ("1", Type::Int),
        ("true", Type::Bool),
        ("false", Type::Bool),
    ] {
        entries.push(ScopeEntry {
            identifier: lexeme.to_string(),
            type_info: prog.registry.type_info(&ty),
            origin: ScopeOrigin::Literal,
        });
    }

    for (lexeme, ty) in [(STR_PLACEHOLDER, Type::Str), (CHAR_PLACEHOLDER, Type::Char)] {
        entries.push(ScopeEntry {
            identifier: lexeme.to_string(),
            type_info: prog.registry.type_info(&ty),
            origin: ScopeOrigin::StringPlaceholder,
        });
    }

    Ok(entries)
}
