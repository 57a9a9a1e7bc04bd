//! Trainer and codec checks. The heavier assertions compare against
//! independent reimplementations: a standalone pair counter for merge
//! selection and a priority-order encoder for merge application.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use subtok::{train_bpe, BpeVocab, VocabFormatError, BASE_SYMBOLS, MARKER};

fn corpus_lexeme_seqs() -> Vec<Vec<String>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/pretrain");
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .expect("pretrain corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mini"))
        .collect();
    paths.sort();
    assert!(!paths.is_empty(), "pretrain corpus has files");
    paths
        .iter()
        .map(|p| {
            let src = fs::read_to_string(p).unwrap();
            minilang::lex(&src)
                .unwrap_or_else(|e| panic!("{p:?}: {e}"))
                .into_iter()
                .map(|t| t.lexeme)
                .collect()
        })
        .collect()
}

fn byte(b: u8) -> u32 {
    4 + b as u32
}

#[test]
fn unique_most_frequent_pair_is_merged_first() {
    let vocab = train_bpe(&[vec!["ababab"]], 1).unwrap();
    assert_eq!(vocab.merges(), &[(byte(b'a'), byte(b'b'))]);
}

#[test]
fn zero_merges_yields_byte_level_encoding() {
    let vocab = train_bpe(&[vec!["ab"]], 0).unwrap();
    assert_eq!(vocab.size(), BASE_SYMBOLS as usize);
    assert_eq!(vocab.encode_one("ab"), vec![byte(b'a'), byte(b'b'), MARKER]);
    assert_eq!(vocab.decode(&vocab.encode(&["ab", "c"])), vec!["ab", "c"]);
}

#[test]
fn empty_corpus_is_rejected() {
    assert!(train_bpe::<&str>(&[], 4).is_err());
    assert!(train_bpe::<&str>(&[vec![], vec![]], 4).is_err());
}

/// Standalone pair counter: words as unit sequences (255 < marker), every
/// adjacent position counted, ties to the lexicographically smallest pair.
fn independent_first_pair(seqs: &[Vec<String>]) -> (Vec<u16>, Vec<u16>) {
    let mut words: HashMap<Vec<u16>, u64> = HashMap::new();
    for seq in seqs {
        for lexeme in seq {
            let mut w: Vec<u16> = lexeme.bytes().map(|b| b as u16).collect();
            w.push(256);
            *words.entry(w).or_insert(0) += 1;
        }
    }
    let mut counts: HashMap<(u16, u16), u64> = HashMap::new();
    for (w, n) in &words {
        for p in w.windows(2) {
            *counts.entry((p[0], p[1])).or_insert(0) += n;
        }
    }
    let mut ranked: Vec<((u16, u16), u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let ((l, r), _) = ranked[0];
    (vec![l], vec![r])
}

#[test]
fn first_merge_matches_independent_pair_counter_on_toy_corpus() {
    let seqs = vec![
        vec!["let", "i", "=", "i", "+", "1", ";"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>(),
        vec!["while", "(", "i", "<", "length", ")"]
            .into_iter()
            .map(String::from)
            .collect(),
    ];
    let vocab = train_bpe(&seqs, 1).unwrap();
    let (a, b) = vocab.merges()[0];
    let got = (
        vocab.symbol(a).unwrap().to_vec(),
        vocab.symbol(b).unwrap().to_vec(),
    );
    assert_eq!(got, independent_first_pair(&seqs));
}

#[test]
fn first_merge_matches_independent_pair_counter_on_bundled_corpus() {
    let seqs = corpus_lexeme_seqs();
    let vocab = train_bpe(&seqs, 64).unwrap();
    let (a, b) = vocab.merges()[0];
    let got = (
        vocab.symbol(a).unwrap().to_vec(),
        vocab.symbol(b).unwrap().to_vec(),
    );
    assert_eq!(got, independent_first_pair(&seqs));
}

/// Priority-order reference encoder: repeatedly find the earliest-trained
/// merge whose pair occurs anywhere in the word and apply it everywhere,
/// until no merge applies. The production encoder makes one in-order pass
/// instead; the two must agree.
fn reference_encode(vocab: &BpeVocab, lexeme: &str) -> Vec<u32> {
    let mut word: Vec<u32> = lexeme.bytes().map(byte).collect();
    word.push(MARKER);
    loop {
        let applicable = vocab.merges().iter().enumerate().find(|(_, (a, b))| {
            word.windows(2).any(|p| p[0] == *a && p[1] == *b)
        });
        let Some((k, (a, b))) = applicable else {
            return word;
        };
        let (a, b, merged) = (*a, *b, BASE_SYMBOLS + k as u32);
        let mut out = Vec::with_capacity(word.len());
        let mut i = 0;
        while i < word.len() {
            if i + 1 < word.len() && word[i] == a && word[i + 1] == b {
                out.push(merged);
                i += 2;
            } else {
                out.push(word[i]);
                i += 1;
            }
        }
        word = out;
    }
}

#[test]
fn production_encoding_matches_priority_reference() {
    let seqs = corpus_lexeme_seqs();
    let vocab = train_bpe(&seqs, 64).unwrap();
    for seq in &seqs {
        for lexeme in seq {
            assert_eq!(
                vocab.encode_one(lexeme),
                reference_encode(&vocab, lexeme),
                "{lexeme:?}"
            );
        }
    }
    for s in ["isDelProp", "xyzzy", "…unicode…", "a b\tc", ""] {
        assert_eq!(vocab.encode_one(s), reference_encode(&vocab, s), "{s:?}");
    }
}

#[test]
fn round_trip_on_every_bundled_corpus_file() {
    let seqs = corpus_lexeme_seqs();
    let vocab = train_bpe(&seqs, 512).unwrap();
    for seq in &seqs {
        assert_eq!(&vocab.decode(&vocab.encode(seq)), seq);
    }
}

#[test]
fn unseen_identifier_encodes_without_failure() {
    let vocab = train_bpe(&corpus_lexeme_seqs(), 512).unwrap();
    let ids = vocab.encode_one("isDelProp");
    assert!(ids.len() > 1, "novel identifier splits into subtokens");
    assert_eq!(vocab.decode(&ids), vec!["isDelProp"]);
}

#[test]
fn adding_merges_never_lengthens_encodings() {
    let seqs = corpus_lexeme_seqs();
    let samples = ["length", "charAt", "total", "while", "isDelProp", "=="];
    let mut prev: Option<(Vec<(u32, u32)>, Vec<usize>)> = None;
    for k in 0..=24 {
        let vocab = train_bpe(&seqs, k).unwrap();
        let lens: Vec<usize> = samples.iter().map(|s| vocab.encode_one(s).len()).collect();
        if let Some((prev_merges, prev_lens)) = &prev {
            assert_eq!(&vocab.merges()[..prev_merges.len()], &prev_merges[..]);
            for (a, b) in prev_lens.iter().zip(&lens) {
                assert!(b <= a, "merge {k} lengthened an encoding");
            }
        }
        prev = Some((vocab.merges().to_vec(), lens));
    }
}

#[test]
fn training_stops_when_no_pair_repeats() {
    let vocab = train_bpe(&[vec!["ab"]], 5).unwrap();
    assert_eq!(vocab.merges().len(), 0);
    let vocab = train_bpe(&[vec!["abab"]], 5).unwrap();
    assert_eq!(vocab.merges().len(), 1);
}

#[test]
fn vocab_file_round_trips_and_hashes_stably() {
    let vocab = train_bpe(&corpus_lexeme_seqs(), 128).unwrap();
    let text = vocab.to_text();
    let back = BpeVocab::from_text(&text).unwrap();
    assert_eq!(back, vocab);
    assert_eq!(back.content_hash(), vocab.content_hash());

    let retrained = train_bpe(&corpus_lexeme_seqs(), 128).unwrap();
    assert_eq!(retrained.to_text(), text, "training is deterministic");

    assert!(matches!(
        BpeVocab::from_text(&text.replace("bpe-vocab v1", "bpe-vocab v9")),
        Err(VocabFormatError::Header(_))
    ));
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    assert!(BpeVocab::from_text(&(lines.join("\n") + "\n")).is_err());
    assert!(matches!(
        BpeVocab::from_text("bpe-vocab v1 merges=1\n\\q x\n"),
        Err(VocabFormatError::Line { line: 2, .. })
    ));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn arbitrary_lexeme_sequences_round_trip(
            lexemes in prop::collection::vec("[A-Za-z_][A-Za-z0-9_]{0,11}", 0..12),
            merges in 0usize..48,
        ) {
            let training = corpus_lexeme_seqs();
            let vocab = train_bpe(&training, merges).unwrap();
            prop_assert_eq!(vocab.decode(&vocab.encode(&lexemes)), lexemes);
        }
    }
}
