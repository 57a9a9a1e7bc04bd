//! Sequence probability models over subtoken ids.
//!
//! The pipeline talks to a model through one contract: given a context,
//! either the probability of a single next id or a renormalized
//! distribution over a supplied set of surface candidates. The bundled
//! implementation is a count-based backoff model with absolute
//! discounting, picked for determinism and trainability at desk scale; a
//! neural model can slot in behind the same trait.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use subtok::{BpeVocab, EOS, SOS};
use thiserror::Error;

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_DISCOUNT: f64 = 0.75;
/// Project counts are merged with this multiplier during finetuning, which
/// approximates the way a short finetune pass lets local lexical patterns
/// dominate general ones.
pub const DEFAULT_FINETUNE_WEIGHT: u64 = 5;

#[derive(Debug, Error)]
#[error("training corpus is empty")]
pub struct EmptyCorpus;

#[derive(Debug, Error)]
#[error("candidate set is empty")]
pub struct EmptyCandidateSet;

#[derive(Debug, Error)]
pub enum ModelLoadError {
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("model was trained against a different vocabulary (hash {file:#018x}, expected {expected:#018x})")]
    VocabMismatch { file: u64, expected: u64 },
}

/// Wrap a subtoken sequence in start and end markers for training.
pub fn frame(ids: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(ids.len() + 2);
    out.push(SOS);
    out.extend_from_slice(ids);
    out.push(EOS);
    out
}

/// The model contract: deterministic conditional probabilities over the
/// vocabulary, and candidate-set scoring built on top of them.
pub trait SequenceModel {
    fn vocab(&self) -> &BpeVocab;

    /// P(id | context). Non-negative; sums to one over the vocabulary
    /// within 1e-9 for any context.
    fn prob(&self, context: &[u32], id: u32) -> f64;

    fn full_distribution(&self, context: &[u32]) -> Vec<f64> {
        (0..self.vocab().size() as u32)
            .map(|id| self.prob(context, id))
            .collect()
    }

    /// Probability of a surface candidate: the chained conditionals of its
    /// subtoken expansion, renormalized over the candidate set. The result
    /// is keyed by lexeme, so it is independent of candidate order, and
    /// sums to one within 1e-9.
    fn score_candidates(
        &self,
        context: &[u32],
        candidates: &[String],
    ) -> Result<BTreeMap<String, f64>, EmptyCandidateSet> {
        if candidates.is_empty() {
            return Err(EmptyCandidateSet);
        }
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        for cand in candidates {
            if raw.contains_key(cand) {
                continue;
            }
            let ids = self.vocab().encode_one(cand);
            let mut ctx = context.to_vec();
            let mut p = 1.0;
            for id in ids {
                p *= self.prob(&ctx, id);
                ctx.push(id);
            }
            raw.insert(cand.clone(), p);
        }
        let total: f64 = raw.values().sum();
        for v in raw.values_mut() {
            *v /= total;
        }
        Ok(raw)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct CtxStats {
    total: u64,
    succ: HashMap<u32, u64>,
}

/// Count-based backoff model with absolute discounting.
///
/// Each context level subtracts a fixed discount from every seen successor
/// and hands the freed mass to the next shorter context; the shortest
/// level backs off to a uniform floor over the vocabulary minus the start
/// marker, so nothing that can occur ever scores zero. An unseen context
/// level passes through to the shorter one untouched.
#[derive(Clone, Debug)]
pub struct NgramModel {
    vocab: BpeVocab,
    order: usize,
    discount: f64,
    counts: HashMap<Vec<u32>, CtxStats>,
}

impl NgramModel {
    /// Single counting pass over framed sequences. Every context length
    /// from 0 to order-1 is recorded for every predicted position; the
    /// start marker itself is never a prediction target.
    pub fn pretrain(
        vocab: BpeVocab,
        corpus: &[Vec<u32>],
        order: usize,
        discount: f64,
    ) -> Result<NgramModel, EmptyCorpus> {
        assert!(order >= 1, "order must be at least 1");
        assert!(
            discount > 0.0 && discount < 1.0,
            "discount must lie in (0, 1)"
        );
        if corpus.iter().all(|s| s.len() <= 2) {
            return Err(EmptyCorpus);
        }
        let mut model = NgramModel {
            vocab,
            order,
            discount,
            counts: HashMap::new(),
        };
        model.absorb(corpus, 1);
        Ok(model)
    }

    fn absorb(&mut self, corpus: &[Vec<u32>], weight: u64) {
        for seq in corpus {
            debug_assert!(
                seq.first() == Some(&SOS) && seq.last() == Some(&EOS),
                "sequences are framed before training"
            );
            for t in 1..seq.len() {
                let target = seq[t];
                let max_k = self.order.saturating_sub(1).min(t);
                for k in 0..=max_k {
                    let ctx = seq[t - k..t].to_vec();
                    let stats = self.counts.entry(ctx).or_default();
                    stats.total += weight;
                    *stats.succ.entry(target).or_insert(0) += weight;
                }
            }
        }
    }

    /// Merge the project's counts on top of this model's, each occurrence
    /// weighted `weight` times, and return the combined model. The base
    /// model is untouched. An empty project corpus yields an identical
    /// model; the caller decides whether that deserves a warning.
    pub fn finetune(&self, project: &[Vec<u32>], weight: u64) -> NgramModel {
        assert!(weight >= 1, "a zero weight would record phantom successors");
        let mut tuned = self.clone();
        tuned.absorb(project, weight);
        tuned
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Raw merged count of `id` after `ctx` (exact context, not a suffix).
    pub fn count_of(&self, ctx: &[u32], id: u32) -> u64 {
        self.counts
            .get(ctx)
            .and_then(|s| s.succ.get(&id))
            .copied()
            .unwrap_or(0)
    }

    pub fn context_total(&self, ctx: &[u32]) -> u64 {
        self.counts.get(ctx).map(|s| s.total).unwrap_or(0)
    }

    fn uniform_floor(&self, id: u32) -> f64 {
        if id == SOS {
            0.0
        } else {
            1.0 / (self.vocab.size() as f64 - 1.0)
        }
    }

    fn prob_at_level(&self, ctx: &[u32], id: u32) -> f64 {
        if ctx.is_empty() {
            match self.counts.get(&Vec::new()) {
                None => return self.uniform_floor(id),
                Some(stats) => {
                    let c = stats.succ.get(&id).copied().unwrap_or(0) as f64;
                    let total = stats.total as f64;
                    let reserved = self.discount * stats.succ.len() as f64 / total;
                    let direct = if c > 0.0 { (c - self.discount) / total } else { 0.0 };
                    return direct + reserved * self.uniform_floor(id);
                }
            }
        }
        match self.counts.get(ctx) {
            None => self.prob_at_level(&ctx[1..], id),
            Some(stats) => {
                let c = stats.succ.get(&id).copied().unwrap_or(0) as f64;
                let total = stats.total as f64;
                let reserved = self.discount * stats.succ.len() as f64 / total;
                let direct = if c > 0.0 { (c - self.discount) / total } else { 0.0 };
                direct + reserved * self.prob_at_level(&ctx[1..], id)
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut contexts: Vec<SerContext> = self
            .counts
            .iter()
            .map(|(ctx, stats)| {
                let mut succ: Vec<(u32, u64)> =
                    stats.succ.iter().map(|(id, n)| (*id, *n)).collect();
                succ.sort_unstable();
                SerContext {
                    ctx: ctx.clone(),
                    succ,
                }
            })
            .collect();
        contexts.sort_by(|a, b| a.ctx.cmp(&b.ctx));
        let ser = SerModel {
            format: "ngram-model".into(),
            version: 1,
            order: self.order,
            discount: self.discount,
            vocab_hash: format!("{:016x}", self.vocab.content_hash()),
            contexts,
        };
        serde_json::to_string(&ser).expect("model serializes")
    }

    pub fn from_json(text: &str, vocab: &BpeVocab) -> Result<NgramModel, ModelLoadError> {
        let ser: SerModel =
            serde_json::from_str(text).map_err(|e| ModelLoadError::Malformed(e.to_string()))?;
        if ser.format != "ngram-model" || ser.version != 1 {
            return Err(ModelLoadError::Malformed(format!(
                "unsupported format {} v{}",
                ser.format, ser.version
            )));
        }
        let file_hash = u64::from_str_radix(&ser.vocab_hash, 16)
            .map_err(|_| ModelLoadError::Malformed("bad vocab hash".into()))?;
        if file_hash != vocab.content_hash() {
            return Err(ModelLoadError::VocabMismatch {
                file: file_hash,
                expected: vocab.content_hash(),
            });
        }
        let mut counts = HashMap::new();
        for sc in ser.contexts {
            let total = sc.succ.iter().map(|(_, n)| n).sum();
            let succ: HashMap<u32, u64> = sc.succ.into_iter().collect();
            counts.insert(sc.ctx, CtxStats { total, succ });
        }
        Ok(NgramModel {
            vocab: vocab.clone(),
            order: ser.order,
            discount: ser.discount,
            counts,
        })
    }
}

impl SequenceModel for NgramModel {
    fn vocab(&self) -> &BpeVocab {
        &self.vocab
    }

    fn prob(&self, context: &[u32], id: u32) -> f64 {
        let k = self.order.saturating_sub(1).min(context.len());
        self.prob_at_level(&context[context.len() - k..], id)
    }
}

#[derive(Serialize, Deserialize)]
struct SerModel {
    format: String,
    version: u32,
    order: usize,
    discount: f64,
    vocab_hash: String,
    contexts: Vec<SerContext>,
}

#[derive(Serialize, Deserialize)]
struct SerContext {
    ctx: Vec<u32>,
    succ: Vec<(u32, u64)>,
}

/// Mean per-prediction perplexity of framed sequences under a model.
pub fn perplexity<M: SequenceModel>(model: &M, corpus: &[Vec<u32>]) -> f64 {
    let mut log_sum = 0.0;
    let mut n = 0u64;
    for seq in corpus {
        for t in 1..seq.len() {
            log_sum += model.prob(&seq[..t], seq[t]).ln();
            n += 1;
        }
    }
    (-log_sum / n as f64).exp()
}
