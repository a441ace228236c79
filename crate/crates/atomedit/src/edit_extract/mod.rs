//! Atomic edit extraction: windowed BLEU sentence alignment plus a
//! byte-level minimal diff that keeps only single-contiguous-phrase
//! insertions and deletions.

mod align;
mod bleu;
mod diff;

pub use align::{align_full, align_windowed, AlignConfig, AlignError, CandidatePair};
pub use bleu::sentence_bleu;
pub use diff::{atomic_diff, DiffCore, EditKind};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::ingest::{tokenize, Sentence, Snapshot};

/// Manual edit-type category; labels are supplied externally, never
/// produced by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditCategory {
    Extend,
    Refine,
    ReferringExpression,
    Fluency,
    Error,
}

/// One mined edit: base sentence, edited sentence, and the single
/// contiguous phrase whose insertion (or deletion) maps one to the other.
///
/// Serialized as one JSON object per line with this exact key order; the
/// JSONL stream is the corpus interchange format for all downstream tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicEdit {
    pub record_id: String,
    pub language: String,
    pub article_id: String,
    pub base_revision_id: String,
    pub edited_revision_id: String,
    pub base_sentence: Sentence,
    pub edited_sentence: Sentence,
    pub phrase: String,
    pub phrase_tokens: Vec<String>,
    pub kind: EditKind,
    /// Byte offsets of the phrase within the longer sentence.
    pub byte_span: (usize, usize),
    /// Insertion position in the shorter sentence's token list; None when
    /// the phrase does not land on token boundaries.
    pub token_index: Option<usize>,
    pub token_aligned: bool,
    pub bleu: f64,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<EditCategory>,
}

impl AtomicEdit {
    /// The sentence the phrase lives in (edited for insertions, base for
    /// deletions).
    pub fn longer_sentence(&self) -> &Sentence {
        match self.kind {
            EditKind::Insertion => &self.edited_sentence,
            EditKind::Deletion => &self.base_sentence,
        }
    }

    pub fn shorter_sentence(&self) -> &Sentence {
        match self.kind {
            EditKind::Insertion => &self.base_sentence,
            EditKind::Deletion => &self.edited_sentence,
        }
    }

    /// Re-check the byte-exact reconstruction and token-alignment
    /// invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.phrase.is_empty() {
            return Err("empty phrase".to_string());
        }
        let short = &self.shorter_sentence().text;
        let long = &self.longer_sentence().text;
        let (a, b) = self.byte_span;
        if b > long.len() || a > b || !long.is_char_boundary(a) || !long.is_char_boundary(b) {
            return Err(format!("byte span ({a}, {b}) out of range"));
        }
        if long[a..b] != self.phrase {
            return Err("phrase does not match byte span".to_string());
        }
        let rebuilt = format!("{}{}", &long[..a], &long[b..]);
        if &rebuilt != short {
            return Err("removing the phrase does not reproduce the shorter sentence".to_string());
        }
        if self.token_aligned {
            let i = self
                .token_index
                .ok_or_else(|| "token_aligned without token_index".to_string())?;
            let short_toks = &self.shorter_sentence().tokens;
            let long_toks = &self.longer_sentence().tokens;
            if i > short_toks.len() {
                return Err(format!("token_index {i} out of range"));
            }
            let mut rebuilt: Vec<String> = short_toks[..i].to_vec();
            rebuilt.extend(self.phrase_tokens.iter().cloned());
            rebuilt.extend(short_toks[i..].iter().cloned());
            if &rebuilt != long_toks {
                return Err("reinserting phrase tokens does not reproduce the longer token list"
                    .to_string());
            }
        }
        Ok(())
    }
}

/// Align the sentences of one snapshot pair and keep every candidate that
/// survives the atomic diff. Output is ordered by base sentence index;
/// duplicate (base, edited, span) triples within the pair are emitted once.
pub fn extract_edits(
    base: &Snapshot,
    edited: &Snapshot,
    cfg: &AlignConfig,
    language: &str,
) -> Vec<AtomicEdit> {
    let pairs = align_windowed(&base.sentences, &edited.sentences, cfg);
    let mut seen: HashSet<(String, String, (usize, usize))> = HashSet::new();
    let mut out = Vec::new();
    for (i, j, score) in pairs {
        let s = &base.sentences[i];
        let t = &edited.sentences[j];
        let Some(core) = atomic_diff(s, t) else {
            continue;
        };
        if !seen.insert((s.text.clone(), t.text.clone(), core.byte_span)) {
            continue;
        }
        let phrase_tokens = core
            .aligned_phrase_tokens
            .clone()
            .unwrap_or_else(|| tokenize(core.phrase.trim(), language).tokens);
        out.push(AtomicEdit {
            record_id: format!(
                "{}:{}:{}:{}",
                base.article_id, base.revision_id, edited.revision_id, i
            ),
            language: language.to_string(),
            article_id: base.article_id.clone(),
            base_revision_id: base.revision_id.clone(),
            edited_revision_id: edited.revision_id.clone(),
            base_sentence: s.clone(),
            edited_sentence: t.clone(),
            phrase: core.phrase,
            phrase_tokens,
            kind: core.kind,
            byte_span: core.byte_span,
            token_index: core.token_index,
            token_aligned: core.token_aligned,
            bleu: score,
            provenance: "wikipedia".to_string(),
            category: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tokenize;

    fn snapshot(article: &str, rev: &str, texts: &[&str]) -> Snapshot {
        Snapshot {
            article_id: article.to_string(),
            revision_id: rev.to_string(),
            sentences: texts.iter().map(|t| tokenize(t, "en")).collect(),
        }
    }

    #[test]
    fn single_insertion_pair() {
        let base = snapshot("a", "1", &["Filler text here.", "She died from an illness."]);
        let edited = snapshot(
            "a",
            "2",
            &["Filler text here.", "She died in 1949 from an illness."],
        );
        let edits = extract_edits(&base, &edited, &AlignConfig::default(), "en");
        assert_eq!(edits.len(), 1);
        let e = &edits[0];
        assert_eq!(e.kind, EditKind::Insertion);
        assert_eq!(e.phrase, "in 1949 ");
        assert_eq!(e.token_index, Some(2));
        assert_eq!(e.record_id, "a:1:2:1");
        e.check_invariants().unwrap();
    }

    #[test]
    fn full_rewrite_below_threshold() {
        let base = snapshot("a", "1", &["The quick brown fox jumps over everything."]);
        let edited = snapshot("a", "2", &["Completely unrelated replacement text appears now."]);
        let edits = extract_edits(&base, &edited, &AlignConfig::default(), "en");
        assert!(edits.is_empty());
    }

    #[test]
    fn insertion_and_deletion_in_one_pair() {
        let mut texts = vec![
            "Opening line of the article text.",
            "The cat sat on the mat today.",
            "Some middle filler sentence one.",
            "Some middle filler sentence two.",
            "Some middle filler sentence three.",
            "Some middle filler sentence four.",
            "Some middle filler sentence five.",
            "He wrote several novels and many short stories.",
        ];
        let base = snapshot("a", "1", &texts);
        texts[1] = "The big cat sat on the mat today.";
        texts[7] = "He wrote several novels and stories.";
        let edited = snapshot("a", "2", &texts);
        let edits = extract_edits(&base, &edited, &AlignConfig::default(), "en");
        assert_eq!(edits.len(), 2);
        let kinds: Vec<EditKind> = edits.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&EditKind::Insertion));
        assert!(kinds.contains(&EditKind::Deletion));
        // ordered by base sentence index
        assert_eq!(edits[0].record_id, "a:1:2:1");
        assert_eq!(edits[1].record_id, "a:1:2:7");
    }

    #[test]
    fn deterministic_output() {
        let base = snapshot("a", "1", &["She died from an illness."]);
        let edited = snapshot("a", "2", &["She died in 1949 from an illness."]);
        let cfg = AlignConfig::default();
        let x = extract_edits(&base, &edited, &cfg, "en");
        let y = extract_edits(&base, &edited, &cfg, "en");
        let jx: Vec<String> = x.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
        let jy: Vec<String> = y.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
        assert_eq!(jx, jy);
    }

    #[test]
    fn corrupted_record_fails_invariants() {
        let base = snapshot("a", "1", &["She died from an illness."]);
        let edited = snapshot("a", "2", &["She died in 1949 from an illness."]);
        let mut e = extract_edits(&base, &edited, &AlignConfig::default(), "en")
            .pop()
            .unwrap();
        e.phrase = "in 1950 ".to_string();
        assert!(e.check_invariants().is_err());
    }
}
