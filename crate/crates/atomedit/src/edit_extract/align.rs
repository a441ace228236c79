use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bleu::sentence_bleu;
use crate::ingest::Sentence;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignConfig {
    /// Window half-width: base sentence i is compared against edited
    /// sentences in [i-k, i+k].
    pub window_k: usize,
    pub bleu_max_order: usize,
    /// Candidate pairs below this BLEU are discarded.
    pub min_bleu: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            window_k: 5,
            bleu_max_order: 4,
            min_bleu: 0.1,
        }
    }
}

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("input too large for full alignment: {n} x {m} sentence pairs exceeds {max}")]
    Oversize { n: usize, m: usize, max: usize },
}

/// Candidate sentence pair: base index, edited index, BLEU score.
pub type CandidatePair = (usize, usize, f64);

const FULL_ALIGN_MAX_PAIRS: usize = 1_000_000;

/// Windowed sentence alignment: for each base sentence, the best-BLEU
/// edited sentence within the window, kept when the texts differ and the
/// score clears `min_bleu`. Ties prefer smaller displacement, then
/// smaller edited index.
pub fn align_windowed(
    base: &[Sentence],
    edited: &[Sentence],
    cfg: &AlignConfig,
) -> Vec<CandidatePair> {
    let mut out = Vec::new();
    for i in 0..base.len() {
        let lo = i.saturating_sub(cfg.window_k);
        let hi = (i + cfg.window_k + 1).min(edited.len());
        if let Some(pair) = best_in_range(base, edited, i, lo, hi, cfg) {
            out.push(pair);
        }
    }
    out
}

/// Quadratic-time alignment over all edited indices; the test oracle for
/// the windowed approximation. Rejects inputs over the size bound.
pub fn align_full(
    base: &[Sentence],
    edited: &[Sentence],
    cfg: &AlignConfig,
) -> Result<Vec<CandidatePair>, AlignError> {
    if base.len() * edited.len() > FULL_ALIGN_MAX_PAIRS {
        return Err(AlignError::Oversize {
            n: base.len(),
            m: edited.len(),
            max: FULL_ALIGN_MAX_PAIRS,
        });
    }
    let mut out = Vec::new();
    for i in 0..base.len() {
        if let Some(pair) = best_in_range(base, edited, i, 0, edited.len(), cfg) {
            out.push(pair);
        }
    }
    Ok(out)
}

fn best_in_range(
    base: &[Sentence],
    edited: &[Sentence],
    i: usize,
    lo: usize,
    hi: usize,
    cfg: &AlignConfig,
) -> Option<CandidatePair> {
    let mut best: Option<(usize, f64)> = None;
    for (j, candidate) in edited.iter().enumerate().take(hi).skip(lo) {
        let score = sentence_bleu(&base[i].tokens, &candidate.tokens, cfg.bleu_max_order);
        let better = match best {
            None => true,
            Some((bj, bs)) => {
                score > bs
                    || (score == bs
                        && (displacement(i, j) < displacement(i, bj)
                            || (displacement(i, j) == displacement(i, bj) && j < bj)))
            }
        };
        if better {
            best = Some((j, score));
        }
    }
    let (j, score) = best?;
    if score >= cfg.min_bleu && base[i].text != edited[j].text {
        Some((i, j, score))
    } else {
        None
    }
}

fn displacement(i: usize, j: usize) -> usize {
    i.abs_diff(j)
}
