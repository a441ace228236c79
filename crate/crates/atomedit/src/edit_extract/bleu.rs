use std::collections::HashMap;

/// Single-reference sentence-level BLEU: geometric mean of modified n-gram
/// precisions for n = 1..max_order, times a brevity penalty
/// exp(1 - |ref|/|cand|) when the candidate is shorter. Precisions for
/// n >= 2 are add-one smoothed on numerator and denominator; the unigram
/// precision is exact. Empty candidate or reference scores 0.
pub fn sentence_bleu(candidate: &[String], reference: &[String], max_order: usize) -> f64 {
    assert!(max_order >= 1);
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let (matches, total) = modified_precision(candidate, reference, n);
        let p = if n == 1 {
            if matches == 0 {
                return 0.0;
            }
            matches as f64 / total as f64
        } else {
            (matches + 1) as f64 / (total + 1) as f64
        };
        log_sum += p.ln();
    }
    let brevity = if candidate.len() < reference.len() {
        (1.0 - reference.len() as f64 / candidate.len() as f64).exp()
    } else {
        1.0
    };
    (log_sum / max_order as f64).exp() * brevity
}

/// Clipped n-gram matches and candidate n-gram total.
fn modified_precision(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    if candidate.len() < n {
        return (0, 0);
    }
    let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in reference.windows(n) {
        *ref_counts.entry(gram).or_insert(0) += 1;
    }
    let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in candidate.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let matches = cand_counts
        .iter()
        .map(|(gram, &c)| c.min(*ref_counts.get(gram).unwrap_or(&0)))
        .sum();
    (matches, candidate.len() - n + 1)
}
