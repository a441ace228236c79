//! Mining and analysis of atomic single-phrase edits from Wikipedia
//! revision histories.
//!
//! The pipeline reads article revision snapshots, aligns sentences between
//! consecutive snapshots with a windowed BLEU search, keeps only pairs that
//! differ by the insertion or deletion of one contiguous phrase, and writes
//! the resulting edit records as JSONL shards. On top of the mined corpus it
//! provides POS/rate statistics, an n-gram LM insertion-point locator,
//! dependency-subtree pseudo-edit generation, and annotation/metric
//! evaluation.

pub mod corpus_stats;
pub mod edit_extract;
pub mod eval_annotations;
pub mod ingest;
pub mod lm_locate;
pub mod pipeline;
pub mod pseudo_edits;
