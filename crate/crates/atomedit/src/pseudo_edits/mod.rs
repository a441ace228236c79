//! Pseudo-edit generation: simulate insertions by deleting contiguous,
//! non-subject dependency subtrees from parsed sentences.

mod conllu;

pub use conllu::{read_conllu, ConlluError, ParsedSentence};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::edit_extract::{sentence_bleu, AtomicEdit, EditKind};
use crate::ingest::Sentence;

/// A candidate deletion span: the surface-contiguous descendant set of one
/// token, inclusive token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubtreeSpan {
    pub root_token_index: usize,
    pub span: (usize, usize),
    pub is_subject: bool,
}

#[derive(Debug, Error)]
pub enum MarkError {
    #[error("edit {0} is not token-aligned; cannot place an insertion marker")]
    NotTokenAligned(String),
}

/// Marker token placed at the insertion point in seq2seq-style output.
pub const INSERTION_MARKER: &str = "<ins>";

fn is_subject_rel(deprel: &str) -> bool {
    deprel.split(':').next() == Some("nsubj")
}

fn is_punctuation_token(parse: &ParsedSentence, i: usize) -> bool {
    parse.pos[i] == "PUNCT"
        || parse.deprels[i] == "punct"
        || parse.tokens[i].chars().all(|c| !c.is_alphanumeric())
}

/// All spans eligible for deletion: full descendant sets that are
/// surface-contiguous, excluding the whole sentence, subject subtrees,
/// and bare single-punctuation spans. Sorted by start index.
pub fn subtree_spans(parse: &ParsedSentence) -> Vec<SubtreeSpan> {
    let n = parse.tokens.len();
    // descendant counts via head chains; n is small so the quadratic walk
    // is fine
    let mut spans = Vec::new();
    for root in 0..n {
        let mut members: Vec<usize> = Vec::new();
        for tok in 0..n {
            let mut cur = tok + 1; // 1-based
            loop {
                if cur == root + 1 {
                    members.push(tok);
                    break;
                }
                cur = parse.heads[cur - 1];
                if cur == 0 {
                    break;
                }
            }
        }
        let lo = *members.iter().min().unwrap();
        let hi = *members.iter().max().unwrap();
        if hi - lo + 1 != members.len() {
            continue; // non-projective span
        }
        if members.len() == n {
            continue; // whole sentence
        }
        if members.len() == 1 && is_punctuation_token(parse, lo) {
            continue;
        }
        if is_subject_rel(&parse.deprels[root]) {
            continue;
        }
        spans.push(SubtreeSpan {
            root_token_index: root,
            span: (lo, hi),
            is_subject: false,
        });
    }
    spans.sort_by_key(|s| (s.span.0, s.span.1));
    spans
}

/// Tokenization of a space-joined token list.
fn sentence_from_tokens(tokens: &[String]) -> Sentence {
    let text = tokens.join(" ");
    let mut byte_offsets = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    for t in tokens {
        byte_offsets.push((pos, pos + t.len()));
        pos += t.len() + 1;
    }
    Sentence {
        text,
        tokens: tokens.to_vec(),
        byte_offsets,
    }
}

/// Uniformly sample one eligible span and emit the corresponding
/// simulated insertion. None when the sentence has no eligible span.
/// Reproducible for a given seed.
pub fn generate_pseudo_edit(parse: &ParsedSentence, rng_seed: u64) -> Option<AtomicEdit> {
    let spans = subtree_spans(parse);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let &chosen = spans.choose(&mut rng)?;
    let (a, b) = chosen.span;
    let edited = sentence_from_tokens(&parse.tokens);
    let base_tokens: Vec<String> = parse
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| *i < a || *i > b)
        .map(|(_, t)| t.clone())
        .collect();
    let base = sentence_from_tokens(&base_tokens);
    // whitespace ownership: a span before the sentence end owns its
    // trailing space, a sentence-final span owns its leading space
    let (start, end) = if b + 1 < parse.tokens.len() {
        (edited.byte_offsets[a].0, edited.byte_offsets[b + 1].0)
    } else {
        (edited.byte_offsets[a].0.saturating_sub(1), edited.text.len())
    };
    let phrase = edited.text[start..end].to_string();
    let phrase_tokens: Vec<String> = parse.tokens[a..=b].to_vec();
    let bleu = sentence_bleu(&base.tokens, &edited.tokens, 4);
    Some(AtomicEdit {
        record_id: format!("pseudo:{rng_seed}"),
        language: String::new(),
        article_id: String::new(),
        base_revision_id: String::new(),
        edited_revision_id: String::new(),
        base_sentence: base,
        edited_sentence: edited,
        phrase,
        phrase_tokens,
        kind: EditKind::Insertion,
        byte_span: (start, end),
        token_index: Some(a),
        token_aligned: true,
        bleu,
        provenance: "pseudo".to_string(),
        category: None,
    })
}

/// Base tokens with the insertion marker at the edit's token index,
/// space-joined: the seq2seq input encoding.
pub fn emit_marked(edit: &AtomicEdit) -> Result<String, MarkError> {
    let index = match (edit.token_aligned, edit.token_index) {
        (true, Some(i)) => i,
        _ => return Err(MarkError::NotTokenAligned(edit.record_id.clone())),
    };
    let base = &edit.shorter_sentence().tokens;
    let mut out: Vec<&str> = base[..index].iter().map(String::as_str).collect();
    out.push(INSERTION_MARKER);
    out.extend(base[index..].iter().map(String::as_str));
    Ok(out.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    /// "The cat sat on the mat": `on the mat` is a subtree headed by
    /// `on` -> `sat`; `The cat` is the nsubj subtree.
    fn fixture() -> ParsedSentence {
        let text = "\
1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_
2\tcat\tcat\tNOUN\tNN\t_\t3\tnsubj\t_\t_
3\tsat\tsit\tVERB\tVBD\t_\t0\troot\t_\t_
4\ton\ton\tADP\tIN\t_\t6\tcase\t_\t_
5\tthe\tthe\tDET\tDT\t_\t6\tdet\t_\t_
6\tmat\tmat\tNOUN\tNN\t_\t3\tobl\t_\t_
";
        read_conllu(Cursor::new(text)).next().unwrap().unwrap()
    }

    #[test]
    fn eligible_spans() {
        let spans = subtree_spans(&fixture());
        // (3,5) = "on the mat" eligible; (0,1) = "The cat" excluded as
        // subject; single determiners/adpositions are single-word spans
        assert!(spans.iter().any(|s| s.span == (3, 5)));
        assert!(!spans.iter().any(|s| s.span == (0, 1)));
        assert!(spans.iter().all(|s| !s.is_subject));
        // sorted by start
        let starts: Vec<usize> = spans.iter().map(|s| s.span.0).collect();
        let mut sorted = starts.clone();
        sorted.sort_unstable();
        assert_eq!(starts, sorted);
    }

    #[test]
    fn non_projective_excluded() {
        // token 3's subtree is {1, 3}: non-contiguous
        let text = "\
1\ta\t_\tX\t_\t_\t3\tdep\t_\t_
2\tb\t_\tX\t_\t_\t4\tdep\t_\t_
3\tc\t_\tX\t_\t_\t4\tdep\t_\t_
4\td\t_\tX\t_\t_\t0\troot\t_\t_
";
        let parse = read_conllu(Cursor::new(text)).next().unwrap().unwrap();
        let spans = subtree_spans(&parse);
        assert!(!spans.iter().any(|s| s.root_token_index == 2));
    }

    #[test]
    fn pseudo_edit_reconstructs() {
        let parse = fixture();
        for seed in 0..20 {
            let Some(edit) = generate_pseudo_edit(&parse, seed) else {
                panic!("fixture has eligible spans");
            };
            edit.check_invariants().unwrap();
            assert_eq!(edit.kind, EditKind::Insertion);
            assert_eq!(edit.provenance, "pseudo");
        }
    }

    #[test]
    fn subject_only_sentence_yields_none() {
        let text = "\
1\tBirds\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_
2\tsing\t_\tVERB\t_\t_\t0\troot\t_\t_
";
        let parse = read_conllu(Cursor::new(text)).next().unwrap().unwrap();
        assert!(generate_pseudo_edit(&parse, 1).is_none());
    }

    #[test]
    fn seeded_determinism() {
        let parse = fixture();
        let a = generate_pseudo_edit(&parse, 42).unwrap();
        let b = generate_pseudo_edit(&parse, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn marked_output() {
        let parse = fixture();
        let edit = generate_pseudo_edit(&parse, 7).unwrap();
        let marked = emit_marked(&edit).unwrap();
        assert_eq!(marked.matches(INSERTION_MARKER).count(), 1);
        let expected_tokens = edit.base_sentence.tokens.len() + 1;
        assert_eq!(marked.split_whitespace().count(), expected_tokens);
    }

    #[test]
    fn marker_at_index_zero_is_first_token() {
        let mut edit = generate_pseudo_edit(&fixture(), 7).unwrap();
        edit.token_index = Some(0);
        let marked = emit_marked(&edit).unwrap();
        assert!(marked.starts_with(INSERTION_MARKER));
    }

    #[test]
    fn non_aligned_edit_rejected() {
        let mut edit = generate_pseudo_edit(&fixture(), 7).unwrap();
        edit.token_aligned = false;
        edit.token_index = None;
        assert!(emit_marked(&edit).is_err());
    }
}
