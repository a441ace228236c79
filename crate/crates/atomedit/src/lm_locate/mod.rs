//! Interpolated Kneser-Ney n-gram language model and the perplexity-argmin
//! insertion-point locator.

mod io;

pub use io::{load_model, save_model, write_arpa, ModelIoError};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const UNK_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
const FIRST_WORD_ID: u32 = 3;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("order must be >= 1")]
    BadOrder,
    #[error("discount must lie in (0, 1)")]
    BadDiscount,
}

/// Interpolated Kneser-Ney model. Raw n-gram count tables are the
/// persisted state; continuation counts and context totals are derived
/// after training or loading.
#[derive(Debug)]
pub struct NGramModel {
    pub order: usize,
    /// Absolute discount per level (level k at index k-1).
    pub discounts: Vec<f64>,
    pub unk_threshold: u64,
    /// token -> id; reserved ids 0..3 are UNK, BOS, EOS.
    pub vocabulary: HashMap<String, u32>,
    /// Raw k-gram counts over BOS/EOS padded sentences, level k at index k-1.
    pub counts: Vec<HashMap<Vec<u32>, u64>>,
    // derived
    adjusted: Vec<HashMap<Vec<u32>, u64>>,
    ctx_stats: Vec<HashMap<Vec<u32>, CtxStat>>,
}

#[derive(Debug, Clone, Copy, Default)]
struct CtxStat {
    /// Sum of adjusted counts of all continuations of this context.
    total: u64,
    /// Number of distinct continuations.
    distinct: u64,
}

impl NGramModel {
    /// Number of predictable types: vocabulary words plus UNK and EOS.
    pub fn prediction_vocab_size(&self) -> usize {
        self.vocabulary.len() + 2
    }

    pub fn token_id(&self, token: &str) -> u32 {
        *self.vocabulary.get(token).unwrap_or(&UNK_ID)
    }

    /// Conditional probability of `word` given up to order-1 context ids.
    /// Strictly positive for every predictable id.
    pub fn prob(&self, context: &[u32], word: u32) -> f64 {
        let ctx = if context.len() >= self.order {
            &context[context.len() - (self.order - 1)..]
        } else {
            context
        };
        self.prob_level(ctx.len() + 1, ctx, word)
    }

    fn prob_level(&self, level: usize, context: &[u32], word: u32) -> f64 {
        debug_assert_eq!(context.len(), level - 1);
        let discount = self.discounts[level - 1];
        if level == 1 {
            let stat = self.ctx_stats[0]
                .get(&Vec::new())
                .copied()
                .unwrap_or_default();
            let uniform = 1.0 / self.prediction_vocab_size() as f64;
            if stat.total == 0 {
                return uniform;
            }
            let c = self.adjusted[0]
                .get(&vec![word])
                .copied()
                .unwrap_or(0) as f64;
            let total = stat.total as f64;
            (c - discount).max(0.0) / total
                + discount * stat.distinct as f64 / total * uniform
        } else {
            let stat = self.ctx_stats[level - 1].get(context);
            match stat {
                Some(stat) if stat.total > 0 => {
                    let mut gram = Vec::with_capacity(level);
                    gram.extend_from_slice(context);
                    gram.push(word);
                    let c = self.adjusted[level - 1].get(&gram).copied().unwrap_or(0) as f64;
                    let total = stat.total as f64;
                    (c - discount).max(0.0) / total
                        + discount * stat.distinct as f64 / total
                            * self.prob_level(level - 1, &context[1..], word)
                }
                _ => self.prob_level(level - 1, &context[1..], word),
            }
        }
    }

    /// Natural-log probability of a token sequence, BOS padded, EOS scored.
    pub fn log_prob(&self, tokens: &[String]) -> f64 {
        let ids = self.pad_ids(tokens);
        let n = self.order;
        let mut sum = 0.0;
        for t in (n - 1)..ids.len() {
            let p = self.prob(&ids[t + 1 - n..t], ids[t]);
            sum += p.ln();
        }
        sum
    }

    pub fn perplexity(&self, tokens: &[String]) -> f64 {
        let events = tokens.len() + 1; // EOS
        (-self.log_prob(tokens) / events as f64).exp()
    }

    fn pad_ids(&self, tokens: &[String]) -> Vec<u32> {
        let mut ids = vec![BOS_ID; self.order - 1];
        ids.extend(tokens.iter().map(|t| self.token_id(t)));
        ids.push(EOS_ID);
        ids
    }

    /// Rebuild the derived tables from the raw counts; called after
    /// training and after loading from disk.
    pub(crate) fn finalize(&mut self) {
        let n = self.order;
        let mut adjusted: Vec<HashMap<Vec<u32>, u64>> = Vec::with_capacity(n);
        for k in 1..=n {
            if k == n {
                adjusted.push(self.counts[k - 1].clone());
            } else {
                // continuation counts: distinct left extensions at level k+1
                let mut cont: HashMap<Vec<u32>, u64> = HashMap::new();
                for gram in self.counts[k].keys() {
                    *cont.entry(gram[1..].to_vec()).or_insert(0) += 1;
                }
                adjusted.push(cont);
            }
        }
        // an order-1 model has no bigrams to take continuation counts
        // from; fall back to raw unigram counts
        if n == 1 {
            adjusted[0] = self.counts[0].clone();
        }
        let mut ctx_stats: Vec<HashMap<Vec<u32>, CtxStat>> = Vec::with_capacity(n);
        for level in adjusted.iter() {
            let mut stats: HashMap<Vec<u32>, CtxStat> = HashMap::new();
            for (gram, &c) in level {
                let ctx = gram[..gram.len() - 1].to_vec();
                let s = stats.entry(ctx).or_default();
                s.total += c;
                s.distinct += 1;
            }
            ctx_stats.push(stats);
        }
        self.adjusted = adjusted;
        self.ctx_stats = ctx_stats;
    }

    pub(crate) fn from_raw(
        order: usize,
        discounts: Vec<f64>,
        unk_threshold: u64,
        vocabulary: HashMap<String, u32>,
        counts: Vec<HashMap<Vec<u32>, u64>>,
    ) -> NGramModel {
        let mut model = NGramModel {
            order,
            discounts,
            unk_threshold,
            vocabulary,
            counts,
            adjusted: Vec::new(),
            ctx_stats: Vec::new(),
        };
        model.finalize();
        model
    }
}

/// Train an interpolated KN model. Tokens with corpus frequency below
/// `unk_threshold` are mapped to UNK.
pub fn train(
    sentences: &[Vec<String>],
    order: usize,
    discount: f64,
    unk_threshold: u64,
) -> Result<NGramModel, TrainError> {
    if sentences.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if order < 1 {
        return Err(TrainError::BadOrder);
    }
    if !(0.0..1.0).contains(&discount) || discount <= 0.0 {
        return Err(TrainError::BadDiscount);
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for t in s {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut words: Vec<&str> = freq
        .iter()
        .filter(|(_, &c)| c >= unk_threshold)
        .map(|(&w, _)| w)
        .collect();
    words.sort_unstable();
    let vocabulary: HashMap<String, u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.to_string(), FIRST_WORD_ID + i as u32))
        .collect();

    let mut counts: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
    for s in sentences {
        let mut ids = vec![BOS_ID; order - 1];
        ids.extend(s.iter().map(|t| *vocabulary.get(t.as_str()).unwrap_or(&UNK_ID)));
        ids.push(EOS_ID);
        for k in 1..=order {
            for window in ids.windows(k) {
                // never count a k-gram that predicts BOS
                if *window.last().unwrap() == BOS_ID {
                    continue;
                }
                *counts[k - 1].entry(window.to_vec()).or_insert(0) += 1;
            }
        }
    }
    Ok(NGramModel::from_raw(
        order,
        vec![discount; order],
        unk_threshold,
        vocabulary,
        counts,
    ))
}

/// One locator decision for one edit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocatePrediction {
    pub record_id: String,
    pub predicted_index: usize,
    pub gold_index: Option<usize>,
    /// Perplexity of each candidate sentence; length = len(base) + 1.
    pub perplexities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

/// Anything that can score a candidate sentence; the n-gram model is the
/// built-in implementation, external LMs can be wired in behind this.
pub trait SentenceScorer {
    fn perplexity(&self, tokens: &[String]) -> f64;
}

impl SentenceScorer for NGramModel {
    fn perplexity(&self, tokens: &[String]) -> f64 {
        NGramModel::perplexity(self, tokens)
    }
}

/// Insert the phrase at every possible point and pick the index with the
/// lowest perplexity; ties go to the smallest index.
pub fn locate<S: SentenceScorer>(
    scorer: &S,
    base_tokens: &[String],
    phrase_tokens: &[String],
) -> LocatePrediction {
    assert!(!base_tokens.is_empty() && !phrase_tokens.is_empty());
    let mut perplexities = Vec::with_capacity(base_tokens.len() + 1);
    for i in 0..=base_tokens.len() {
        let mut candidate: Vec<String> = base_tokens[..i].to_vec();
        candidate.extend(phrase_tokens.iter().cloned());
        candidate.extend(base_tokens[i..].iter().cloned());
        perplexities.push(scorer.perplexity(&candidate));
    }
    let predicted_index = perplexities
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    LocatePrediction {
        record_id: String::new(),
        predicted_index,
        gold_index: None,
        perplexities,
        category: None,
    }
}

/// Exact-match accuracy, with a per-category breakdown when records carry
/// category labels. Records without a gold index are skipped.
pub fn eval_accuracy(
    predictions: &[LocatePrediction],
) -> (f64, std::collections::BTreeMap<String, (usize, usize)>) {
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut by_category: std::collections::BTreeMap<String, (usize, usize)> = Default::default();
    for p in predictions {
        let Some(gold) = p.gold_index else { continue };
        total += 1;
        let hit = p.predicted_index == gold;
        if hit {
            correct += 1;
        }
        if let Some(cat) = &p.category {
            let entry = by_category.entry(cat.clone()).or_insert((0, 0));
            entry.1 += 1;
            if hit {
                entry.0 += 1;
            }
        }
    }
    let accuracy = if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    };
    (accuracy, by_category)
}
