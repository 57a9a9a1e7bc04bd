//! Predicate synthesis engine.
//!
//! Given a program, a fault location and a sequence model, this crate builds
//! well-typed boolean predicates token by token ([`grammar`]), explores the
//! predicate space with likelihood-guided beam search ([`beam`]), reranks the
//! surviving candidates by their observed effect on the test suite
//! ([`rerank`]) and turns them into concrete source patches ([`patcher`]).

pub mod grammar;
