//! Byte-pair-encoding subtokenizer.
//!
//! Lexemes are split into bytes, a boundary marker is appended to each one,
//! and trained merges are applied in order. Decoding expands every id back
//! to its bytes and re-segments at the markers, so an encode/decode round
//! trip reproduces the original lexeme sequence exactly and no input can be
//! out of vocabulary.

use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Start-of-sequence id. Never produced by [`BpeVocab::encode`]; models
/// frame sequences with it.
pub const SOS: u32 = 0;
/// End-of-sequence id, used for framing like [`SOS`].
pub const EOS: u32 = 1;
/// Reserved id kept for forward compatibility with tokenizers that can
/// fail; the byte-level scheme never emits it.
pub const UNK_BYTE: u32 = 2;
/// End-of-lexeme marker. Appears in encoded output, possibly fused into
/// merged symbols.
pub const MARKER: u32 = 3;
/// Ids below this are specials and single bytes; merge k gets id
/// `BASE_SYMBOLS + k`.
pub const BASE_SYMBOLS: u32 = 260;

/// Internal alphabet: 0..=255 are bytes, 256 is the boundary marker.
type Unit = u16;
const MARKER_UNIT: Unit = 256;

#[derive(Debug, Error)]
#[error("training corpus is empty")]
pub struct EmptyCorpus;

#[derive(Debug, Error)]
pub enum VocabFormatError {
    #[error("bad vocab header: {0}")]
    Header(String),
    #[error("vocab line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeVocab {
    /// Merge k fuses the symbol pair `merges[k]` into id `BASE_SYMBOLS + k`.
    merges: Vec<(u32, u32)>,
    /// Unit expansion of every id. Specials expand to nothing except the
    /// marker.
    units: Vec<Vec<Unit>>,
}

fn base_units() -> Vec<Vec<Unit>> {
    let mut units: Vec<Vec<Unit>> = vec![vec![], vec![], vec![], vec![MARKER_UNIT]];
    for b in 0u16..256 {
        units.push(vec![b]);
    }
    units
}

fn byte_id(b: u8) -> u32 {
    4 + b as u32
}

fn lexeme_ids(lexeme: &str) -> Vec<u32> {
    let mut ids: Vec<u32> = lexeme.bytes().map(byte_id).collect();
    ids.push(MARKER);
    ids
}

/// Replace every non-overlapping occurrence of `pair`, scanning left to
/// right.
fn apply_merge(word: &mut Vec<u32>, pair: (u32, u32), merged: u32) {
    if word.len() < 2 {
        return;
    }
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == pair.0 && word[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    *word = out;
}

/// Learn `target_merges` merges from the lexeme sequences in `corpus`.
///
/// Each round counts adjacent symbol pairs across all distinct lexemes
/// weighted by frequency, fuses the most frequent pair, and rewrites.
/// Pairs are counted at every adjacent position, so "aaa" contributes two
/// occurrences of (a, a). Ties break toward the lexicographically smallest
/// pair of unit expansions. Training stops early once no pair occurs at
/// least twice: further merges would be arbitrary.
pub fn train_bpe<S: AsRef<str>>(
    corpus: &[Vec<S>],
    target_merges: usize,
) -> Result<BpeVocab, EmptyCorpus> {
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    for seq in corpus {
        for lexeme in seq {
            *freq.entry(lexeme.as_ref().to_string()).or_insert(0) += 1;
        }
    }
    if freq.is_empty() {
        return Err(EmptyCorpus);
    }

    let mut units = base_units();
    let mut merges: Vec<(u32, u32)> = Vec::new();
    let mut words: Vec<(Vec<u32>, u64)> = freq
        .iter()
        .map(|(lex, n)| (lexeme_ids(lex), *n))
        .collect();

    let mut known_expansions: std::collections::HashSet<Vec<Unit>> =
        units.iter().skip(3).cloned().collect();

    while merges.len() < target_merges {
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (word, n) in &words {
            for pair in word.windows(2) {
                *counts.entry((pair[0], pair[1])).or_insert(0) += n;
            }
        }
        let mut ranked: Vec<((u32, u32), u64)> = counts.into_iter().collect();
        // Highest count first; ties go to the lexicographically smallest
        // pair of unit expansions, then the smallest id pair.
        ranked.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then_with(|| {
                    let ka = (&units[a.0 .0 as usize], &units[a.0 .1 as usize]);
                    let kb = (&units[b.0 .0 as usize], &units[b.0 .1 as usize]);
                    ka.cmp(&kb)
                })
                .then_with(|| a.0.cmp(&b.0))
        });
        // A merge whose expansion duplicates an existing symbol would make
        // the pair-per-line vocab file ambiguous, so such a pair is passed
        // over for the next best one.
        let chosen = ranked.into_iter().find(|(pair, count)| {
            if *count < 2 {
                return false;
            }
            let mut expansion = units[pair.0 as usize].clone();
            expansion.extend_from_slice(&units[pair.1 as usize]);
            !known_expansions.contains(&expansion)
        });
        let Some((pair, _)) = chosen else { break };
        let merged = BASE_SYMBOLS + merges.len() as u32;
        let mut expansion = units[pair.0 as usize].clone();
        expansion.extend_from_slice(&units[pair.1 as usize]);
        known_expansions.insert(expansion.clone());
        units.push(expansion);
        merges.push(pair);
        for (word, _) in &mut words {
            apply_merge(word, pair, merged);
        }
    }

    Ok(BpeVocab { merges, units })
}

impl BpeVocab {
    /// Total number of ids: specials, bytes, and merges.
    pub fn size(&self) -> usize {
        self.units.len()
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Unit expansion of an id (empty for the non-marker specials).
    pub fn symbol(&self, id: u32) -> Option<&[Unit]> {
        self.units.get(id as usize).map(|u| u.as_slice())
    }

    pub fn encode_one(&self, lexeme: &str) -> Vec<u32> {
        let mut word = lexeme_ids(lexeme);
        for (k, pair) in self.merges.iter().enumerate() {
            apply_merge(&mut word, *pair, BASE_SYMBOLS + k as u32);
        }
        word
    }

    /// Encode a lexeme sequence. No framing ids are added.
    pub fn encode<S: AsRef<str>>(&self, lexemes: &[S]) -> Vec<u32> {
        let mut cache: HashMap<&str, Vec<u32>> = HashMap::new();
        let mut out = Vec::new();
        for lexeme in lexemes {
            let lexeme = lexeme.as_ref();
            let ids = cache
                .entry(lexeme)
                .or_insert_with(|| self.encode_one(lexeme));
            out.extend_from_slice(ids);
        }
        out
    }

    /// Expand ids back to lexemes, splitting at boundary markers. Framing
    /// and reserved specials expand to nothing; a trailing fragment without
    /// its marker still yields a final (partial) lexeme.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        let mut out = Vec::new();
        let mut bytes: Vec<u8> = Vec::new();
        for id in ids {
            let Some(units) = self.units.get(*id as usize) else {
                continue;
            };
            for u in units {
                if *u == MARKER_UNIT {
                    out.push(String::from_utf8_lossy(&bytes).into_owned());
                    bytes.clear();
                } else {
                    bytes.push(*u as u8);
                }
            }
        }
        if !bytes.is_empty() {
            out.push(String::from_utf8_lossy(&bytes).into_owned());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("bpe-vocab v1 merges={}\n", self.merges.len());
        for (a, b) in &self.merges {
            out.push_str(&render_units(&self.units[*a as usize]));
            out.push(' ');
            out.push_str(&render_units(&self.units[*b as usize]));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<BpeVocab, VocabFormatError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let expected_merges: usize = header
            .strip_prefix("bpe-vocab v1 merges=")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| VocabFormatError::Header(header.to_string()))?;

        let mut units = base_units();
        let mut merges: Vec<(u32, u32)> = Vec::new();
        let mut by_units: HashMap<Vec<Unit>, u32> = units
            .iter()
            .enumerate()
            .skip(3)
            .map(|(i, u)| (u.clone(), i as u32))
            .collect();

        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let bad = |message: &str| VocabFormatError::Line {
                line: lineno,
                message: message.to_string(),
            };
            let (left, right) = line.split_once(' ').ok_or_else(|| bad("missing separator"))?;
            let left = parse_units(left).ok_or_else(|| bad("unparsable left symbol"))?;
            let right = parse_units(right).ok_or_else(|| bad("unparsable right symbol"))?;
            let a = *by_units
                .get(&left)
                .ok_or_else(|| bad("left symbol not yet defined"))?;
            let b = *by_units
                .get(&right)
                .ok_or_else(|| bad("right symbol not yet defined"))?;
            let mut expansion = units[a as usize].clone();
            expansion.extend_from_slice(&units[b as usize]);
            let id = units.len() as u32;
            by_units.insert(expansion.clone(), id);
            units.push(expansion);
            merges.push((a, b));
        }
        if merges.len() != expected_merges {
            return Err(VocabFormatError::Header(format!(
                "header promises {expected_merges} merges, file has {}",
                merges.len()
            )));
        }
        Ok(BpeVocab { merges, units })
    }

    /// FNV-1a over the serialized form; models embed this to refuse loading
    /// against the wrong vocabulary.
    pub fn content_hash(&self) -> u64 {
        fnv1a64(self.to_text().as_bytes())
    }
}

fn render_units(units: &[Unit]) -> String {
    let mut out = String::new();
    for u in units {
        match *u {
            MARKER_UNIT => out.push_str("\\m"),
            b => {
                let b = b as u8;
                if b == b'\\' {
                    out.push_str("\\\\");
                } else if (0x21..=0x7e).contains(&b) {
                    out.push(b as char);
                } else {
                    out.push_str(&format!("\\x{b:02x}"));
                }
            }
        }
    }
    out
}

fn parse_units(text: &str) -> Option<Vec<Unit>> {
    let mut out = Vec::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next()? {
                'm' => out.push(MARKER_UNIT),
                '\\' => out.push(b'\\' as Unit),
                'x' => {
                    let hi = chars.next()?.to_digit(16)?;
                    let lo = chars.next()?.to_digit(16)?;
                    out.push((hi * 16 + lo) as Unit);
                }
                _ => return None,
            }
        } else if c.is_ascii() && !c.is_ascii_control() {
            out.push(c as Unit);
        } else {
            return None;
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
