use serde::{Deserialize, Serialize};

use crate::ingest::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditKind {
    Insertion,
    Deletion,
}

/// Result of the byte-level minimal diff between two sentences that differ
/// by one contiguous phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffCore {
    pub kind: EditKind,
    pub phrase: String,
    /// Byte offsets of the phrase within the longer sentence.
    pub byte_span: (usize, usize),
    /// Token position of the phrase in the shorter sentence's token list,
    /// when the phrase lands on token boundaries.
    pub token_index: Option<usize>,
    pub token_aligned: bool,
    /// Phrase as tokens of the longer sentence when token-aligned.
    pub aligned_phrase_tokens: Option<Vec<String>>,
}

/// Canonical single-phrase diff: maximal common byte prefix, then maximal
/// common byte suffix of the remainders. Returns None unless one side is
/// exactly the other with one contiguous phrase inserted.
pub fn atomic_diff(s: &Sentence, t: &Sentence) -> Option<DiffCore> {
    debug_assert_ne!(s.text, t.text);
    let (short, long, kind) = if t.text.len() > s.text.len() {
        (s, t, EditKind::Insertion)
    } else if s.text.len() > t.text.len() {
        (t, s, EditKind::Deletion)
    } else {
        return None;
    };
    let (start, end) = byte_phrase_span(short.text.as_bytes(), long.text.as_bytes())?;
    let phrase = long.text[start..end].to_string();
    let alignment = token_alignment(short, long);
    Some(DiffCore {
        kind,
        phrase,
        byte_span: (start, end),
        token_index: alignment.as_ref().map(|(i, _)| *i),
        token_aligned: alignment.is_some(),
        aligned_phrase_tokens: alignment.map(|(_, toks)| toks),
    })
}

/// Byte span of the inserted phrase in `long`, or None when no single
/// contiguous decomposition exists. Among equivalent decompositions the
/// rightmost one on UTF-8 character boundaries is chosen.
fn byte_phrase_span(short: &[u8], long: &[u8]) -> Option<(usize, usize)> {
    debug_assert!(long.len() > short.len());
    let plen = long.len() - short.len();
    let prefix = short
        .iter()
        .zip(long.iter())
        .take_while(|(a, b)| a == b)
        .count();
    let suffix = short[prefix..]
        .iter()
        .rev()
        .zip(long[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    if prefix + suffix != short.len() {
        return None;
    }
    // the insertion point slides left over repeated bytes; take the
    // rightmost position that is a character boundary on both ends
    let long_str = std::str::from_utf8(long).ok()?;
    let mut a = prefix;
    loop {
        if long_str.is_char_boundary(a) && long_str.is_char_boundary(a + plen) {
            return Some((a, a + plen));
        }
        if a == 0 || long[a - 1] != long[a + plen - 1] {
            return None;
        }
        a -= 1;
    }
}

/// Token insertion index and phrase tokens when the phrase lands on token
/// boundaries: maximal common token prefix, then maximal common token
/// suffix, mirroring the byte-level canonicalization.
fn token_alignment(short: &Sentence, long: &Sentence) -> Option<(usize, Vec<String>)> {
    let st = &short.tokens;
    let lt = &long.tokens;
    if lt.len() <= st.len() {
        return None;
    }
    let prefix = st.iter().zip(lt.iter()).take_while(|(a, b)| a == b).count();
    let suffix = st[prefix..]
        .iter()
        .rev()
        .zip(lt[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    if prefix + suffix != st.len() {
        return None;
    }
    let phrase_tokens = lt[prefix..lt.len() - suffix].to_vec();
    Some((prefix, phrase_tokens))
}
