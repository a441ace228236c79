//! Snapshot ingestion: dump reading, markup stripping, sentence splitting
//! and tokenization.

mod dump;
mod markup;
mod split;
mod tokenize;

pub use dump::{read_dump, read_dump_xml, DumpSource, IngestError};
pub use markup::strip_markup;
pub use split::{split_sentences, AbbrevList};
pub use tokenize::tokenize;

use serde::{Deserialize, Serialize};

/// One historical version of one article, before any text processing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSnapshot {
    pub article_id: String,
    pub revision_id: String,
    /// ISO-8601 UTC timestamp as found in the dump.
    pub timestamp: String,
    pub body: String,
}

/// A snapshot reduced to an ordered list of sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub article_id: String,
    pub revision_id: String,
    pub sentences: Vec<Sentence>,
}

/// A tokenized sentence. `byte_offsets[i]` is the half-open byte range of
/// `tokens[i]` within `text`; the bytes between consecutive tokens are
/// whitespace, so the original text is recoverable from `text` alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub byte_offsets: Vec<(usize, usize)>,
}

impl Sentence {
    pub fn new(text: &str, language: &str) -> Sentence {
        tokenize(text, language)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    /// Keep at most this many most-recent revisions per article.
    pub max_snapshots: usize,
    pub language: String,
    /// Optional path to a newline-separated abbreviation list overriding
    /// the built-in one for `language`.
    pub abbrev_list_path: Option<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            max_snapshots: 100_000,
            language: "en".to_string(),
            abbrev_list_path: None,
        }
    }
}

/// Turn a raw snapshot into sentences: strip markup, split, tokenize.
pub fn process_snapshot(raw: &RawSnapshot, abbrevs: &AbbrevList, language: &str) -> Snapshot {
    let plain = strip_markup(&raw.body);
    let sentences = split_sentences(&plain, abbrevs)
        .into_iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| tokenize(&s, language))
        .collect();
    Snapshot {
        article_id: raw.article_id.clone(),
        revision_id: raw.revision_id.clone(),
        sentences,
    }
}

/// Consecutive (base, edited) pairs of one article's snapshot list.
pub fn pair_snapshots(snapshots: &[Snapshot]) -> Vec<(&Snapshot, &Snapshot)> {
    snapshots.windows(2).map(|w| (&w[0], &w[1])).collect()
}
