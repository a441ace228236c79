//! Corpus-linguistic analyses over mined edits: POS distributions of
//! inserted words, per-thousand insertion-rate ratios, and phrase-length
//! histograms.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::edit_extract::AtomicEdit;
use crate::pseudo_edits::ParsedSentence;

/// A token with its part-of-speech tag; tags are consumed from external
/// annotation files, never produced here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub pos: String,
}

/// POS tags for inserted phrase tokens, keyed by edit record id.
/// Sidecar TSV layout: `record_id  token_index  surface  pos`.
#[derive(Debug, Clone, Default)]
pub struct TagSidecar {
    by_record: HashMap<String, Vec<(usize, TaggedToken)>>,
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("sidecar line {0}: expected 4 tab-separated columns")]
    BadSidecarLine(usize),
    #[error("unknown POS tag {requested:?}; valid tags: {valid:?}")]
    UnknownPos { requested: String, valid: Vec<String> },
}

impl TagSidecar {
    pub fn read(reader: impl BufRead) -> Result<TagSidecar, StatsError> {
        let mut by_record: HashMap<String, Vec<(usize, TaggedToken)>> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 4 {
                return Err(StatsError::BadSidecarLine(i + 1));
            }
            let Ok(index) = cols[1].parse::<usize>() else {
                // tolerate a header row
                if i == 0 {
                    continue;
                }
                return Err(StatsError::BadSidecarLine(i + 1));
            };
            by_record.entry(cols[0].to_string()).or_default().push((
                index,
                TaggedToken {
                    surface: cols[2].to_string(),
                    pos: cols[3].to_string(),
                },
            ));
        }
        for tags in by_record.values_mut() {
            tags.sort_by_key(|(i, _)| *i);
        }
        Ok(TagSidecar { by_record })
    }

    pub fn get(&self, record_id: &str) -> Option<&[(usize, TaggedToken)]> {
        self.by_record.get(record_id).map(Vec::as_slice)
    }

    pub fn insert(&mut self, record_id: &str, tags: Vec<(usize, TaggedToken)>) {
        self.by_record.insert(record_id.to_string(), tags);
    }
}

/// Relative POS frequencies plus the count of edits that had no sidecar
/// entry (excluded from the distribution).
#[derive(Debug, Clone, PartialEq)]
pub struct PosDistribution {
    pub frequencies: BTreeMap<String, f64>,
    pub untagged: usize,
}

/// Distribution of POS tags over (tagged) inserted phrase tokens. With
/// `single_word_only`, edits whose phrase has more than one token are
/// skipped, matching the single-word-insertion analysis.
pub fn pos_distribution(
    edits: &[AtomicEdit],
    tags: &TagSidecar,
    single_word_only: bool,
) -> PosDistribution {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut untagged = 0usize;
    for edit in edits {
        if single_word_only && edit.phrase_tokens.len() != 1 {
            continue;
        }
        match tags.get(&edit.record_id) {
            Some(entries) => {
                for (_, t) in entries {
                    *counts.entry(t.pos.clone()).or_insert(0) += 1;
                }
            }
            None => untagged += 1,
        }
    }
    let total: u64 = counts.values().sum();
    let frequencies = counts
        .into_iter()
        .map(|(pos, c)| (pos, c as f64 / total as f64))
        .collect();
    PosDistribution {
        frequencies,
        untagged,
    }
}

/// Relative POS frequencies over a background tagged-token stream.
pub fn pos_distribution_background(background: &[TaggedToken]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in background {
        *counts.entry(t.pos.clone()).or_insert(0) += 1;
    }
    let total: u64 = counts.values().sum();
    counts
        .into_iter()
        .map(|(pos, c)| (pos, c as f64 / total as f64))
        .collect()
}

/// Per-thousand rates of one word within one POS, as insertion vs. in
/// general text.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRatio {
    pub word: String,
    pub pos: String,
    /// Occurrences per 1000 insertions of this POS.
    pub rate_insertion: f64,
    /// Occurrences per 1000 general occurrences of this POS.
    pub rate_general: f64,
    pub count_insertion: u64,
    pub count_general: u64,
    /// True when the word was absent from the background and its general
    /// rate was add-one smoothed.
    pub smoothed: bool,
}

pub const RATE_RATIO_MIN_COUNT: u64 = 5;

/// Words of the given POS that are inserted at the highest rate relative
/// to their background rate. Words with fewer than `min_count` insertion
/// occurrences are dropped; background-absent words get an add-one
/// smoothed general rate and a flag.
pub fn rate_ratios(
    edits: &[AtomicEdit],
    tags: &TagSidecar,
    background: &[TaggedToken],
    pos: &str,
    top_n: usize,
    min_count: u64,
) -> Result<Vec<RateRatio>, StatsError> {
    let mut ins_words: HashMap<String, u64> = HashMap::new();
    let mut ins_pos_total = 0u64;
    let mut seen_pos: BTreeMap<String, ()> = BTreeMap::new();
    for edit in edits {
        if let Some(entries) = tags.get(&edit.record_id) {
            for (_, t) in entries {
                seen_pos.insert(t.pos.clone(), ());
                if t.pos == pos {
                    *ins_words.entry(t.surface.clone()).or_insert(0) += 1;
                    ins_pos_total += 1;
                }
            }
        }
    }
    let mut gen_words: HashMap<String, u64> = HashMap::new();
    let mut gen_pos_total = 0u64;
    for t in background {
        seen_pos.insert(t.pos.clone(), ());
        if t.pos == pos {
            *gen_words.entry(t.surface.clone()).or_insert(0) += 1;
            gen_pos_total += 1;
        }
    }
    if !seen_pos.contains_key(pos) {
        return Err(StatsError::UnknownPos {
            requested: pos.to_string(),
            valid: seen_pos.into_keys().collect(),
        });
    }
    let mut out: Vec<RateRatio> = ins_words
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(word, count_insertion)| {
            let count_general = gen_words.get(&word).copied().unwrap_or(0);
            let smoothed = count_general == 0;
            let rate_insertion = 1000.0 * count_insertion as f64 / ins_pos_total as f64;
            let rate_general =
                1000.0 * (count_general + u64::from(smoothed)) as f64 / gen_pos_total.max(1) as f64;
            RateRatio {
                word,
                pos: pos.to_string(),
                rate_insertion,
                rate_general,
                count_insertion,
                count_general,
                smoothed,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        let ra = a.rate_insertion / a.rate_general;
        let rb = b.rate_insertion / b.rate_general;
        rb.partial_cmp(&ra)
            .unwrap()
            .then_with(|| a.word.cmp(&b.word))
    });
    out.truncate(top_n);
    Ok(out)
}

/// Histogram of inserted-phrase token lengths with the cumulative
/// fractions the corpus analysis reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LengthHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
    /// Fraction of phrases that are a single token.
    pub fraction_single: f64,
    /// Fraction of phrases shorter than five tokens.
    pub fraction_under_5: f64,
}

pub fn length_histogram(edits: &[AtomicEdit]) -> LengthHistogram {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for edit in edits {
        *counts.entry(edit.phrase_tokens.len()).or_insert(0) += 1;
    }
    let total: u64 = counts.values().sum();
    let frac = |pred: &dyn Fn(usize) -> bool| {
        if total == 0 {
            0.0
        } else {
            counts
                .iter()
                .filter(|(&len, _)| pred(len))
                .map(|(_, &c)| c)
                .sum::<u64>() as f64
                / total as f64
        }
    };
    LengthHistogram {
        fraction_single: frac(&|len| len == 1),
        fraction_under_5: frac(&|len| len < 5),
        counts,
        total,
    }
}

/// Flatten parsed sentences into a background tagged-token stream (UPOS).
pub fn background_from_parses(parses: &[ParsedSentence]) -> Vec<TaggedToken> {
    parses
        .iter()
        .flat_map(|p| {
            p.tokens.iter().zip(&p.pos).map(|(t, pos)| TaggedToken {
                surface: t.clone(),
                pos: pos.clone(),
            })
        })
        .collect()
}

/// Read a background stream from two-column TSV (`surface  pos`);
/// `#`-prefixed lines are comments.
pub fn read_background_tsv(reader: impl BufRead) -> Result<Vec<TaggedToken>, StatsError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(StatsError::BadSidecarLine(i + 1));
        }
        out.push(TaggedToken {
            surface: cols[0].to_string(),
            pos: cols[1].to_string(),
        });
    }
    Ok(out)
}

/// `word  rate_ins  rate_gen  count_ins  count_gen` rows.
pub fn write_rate_ratios_tsv(ratios: &[RateRatio], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "word\trate_ins\trate_gen\tcount_ins\tcount_gen")?;
    for r in ratios {
        writeln!(
            w,
            "{}\t{:.4}\t{:.4}\t{}\t{}{}",
            r.word,
            r.rate_insertion,
            r.rate_general,
            r.count_insertion,
            r.count_general,
            if r.smoothed { "\t(smoothed)" } else { "" }
        )?;
    }
    Ok(())
}

/// `pos  freq_ins  freq_gen` rows over the union of tags.
pub fn write_pos_distribution_tsv(
    insertions: &PosDistribution,
    general: &BTreeMap<String, f64>,
    mut w: impl Write,
) -> io::Result<()> {
    writeln!(w, "pos\tfreq_ins\tfreq_gen")?;
    let mut tags: Vec<&String> = insertions.frequencies.keys().collect();
    for t in general.keys() {
        if !insertions.frequencies.contains_key(t) {
            tags.push(t);
        }
    }
    tags.sort();
    for tag in tags {
        writeln!(
            w,
            "{}\t{:.6}\t{:.6}",
            tag,
            insertions.frequencies.get(tag).copied().unwrap_or(0.0),
            general.get(tag).copied().unwrap_or(0.0)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit_extract::{extract_edits, AlignConfig};
    use crate::ingest::{tokenize, Snapshot};

    fn edit_with_phrase(id: &str, phrase_tokens: &[&str]) -> AtomicEdit {
        let base = Snapshot {
            article_id: "a".into(),
            revision_id: "1".into(),
            sentences: vec![tokenize("The ending stays the same here.", "en")],
        };
        let inserted = phrase_tokens.join(" ");
        let edited = Snapshot {
            article_id: "a".into(),
            revision_id: "2".into(),
            sentences: vec![tokenize(
                &format!("The {inserted} ending stays the same here."),
                "en",
            )],
        };
        let mut e = extract_edits(&base, &edited, &AlignConfig::default(), "en")
            .pop()
            .unwrap();
        e.record_id = id.to_string();
        e
    }

    fn tag(surface: &str, pos: &str) -> TaggedToken {
        TaggedToken {
            surface: surface.into(),
            pos: pos.into(),
        }
    }

    #[test]
    fn pos_distribution_basic() {
        let edits = vec![
            edit_with_phrase("r1", &["former"]),
            edit_with_phrase("r2", &["happy"]),
            edit_with_phrase("r3", &["quickly"]),
        ];
        let mut tags = TagSidecar::default();
        tags.insert("r1", vec![(0, tag("former", "ADJ"))]);
        tags.insert("r2", vec![(0, tag("happy", "ADJ"))]);
        tags.insert("r3", vec![(0, tag("quickly", "ADV"))]);
        let dist = pos_distribution(&edits, &tags, true);
        assert!((dist.frequencies["ADJ"] - 2.0 / 3.0).abs() < 1e-12);
        assert!((dist.frequencies["ADV"] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(dist.untagged, 0);
        let sum: f64 = dist.frequencies.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn untagged_edit_counted_separately() {
        let edits = vec![
            edit_with_phrase("r1", &["former"]),
            edit_with_phrase("r2", &["missing"]),
        ];
        let mut tags = TagSidecar::default();
        tags.insert("r1", vec![(0, tag("former", "ADJ"))]);
        let dist = pos_distribution(&edits, &tags, true);
        assert_eq!(dist.untagged, 1);
        assert!((dist.frequencies["ADJ"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_empty_map() {
        let dist = pos_distribution(&[], &TagSidecar::default(), true);
        assert!(dist.frequencies.is_empty());
        assert_eq!(dist.untagged, 0);
    }

    #[test]
    fn multi_word_skipped_when_single_only() {
        let edits = vec![
            edit_with_phrase("r1", &["former"]),
            edit_with_phrase("r2", &["very", "famous"]),
        ];
        let mut tags = TagSidecar::default();
        tags.insert("r1", vec![(0, tag("former", "ADJ"))]);
        tags.insert(
            "r2",
            vec![(0, tag("very", "ADV")), (1, tag("famous", "ADJ"))],
        );
        let dist = pos_distribution(&edits, &tags, true);
        assert_eq!(dist.frequencies.len(), 1);
    }

    /// Counts constructed so `former` appears 34 times in 1000 tagged ADJ
    /// insertions against 6 in 1000 background ADJ tokens.
    #[test]
    fn former_rate_ratio() {
        let mut edits = Vec::new();
        let mut tags = TagSidecar::default();
        for i in 0..1000u32 {
            let id = format!("r{i}");
            let word = if i < 34 { "former" } else { "filler" };
            edits.push(edit_with_phrase(&id, &[word]));
            tags.insert(&id, vec![(0, tag(word, "JJ"))]);
        }
        let mut background = Vec::new();
        for i in 0..1000u32 {
            background.push(tag(if i < 6 { "former" } else { "other" }, "JJ"));
        }
        let ratios = rate_ratios(&edits, &tags, &background, "JJ", 10, 5).unwrap();
        let former = ratios.iter().find(|r| r.word == "former").unwrap();
        assert_eq!(former.rate_insertion, 34.0);
        assert_eq!(former.rate_general, 6.0);
        assert_eq!(former.count_insertion, 34);
        assert_eq!(former.count_general, 6);
        assert!(!former.smoothed);
    }

    #[test]
    fn single_edit_rate_is_1000() {
        let edits = vec![edit_with_phrase("r1", &["brave"])];
        let mut tags = TagSidecar::default();
        tags.insert("r1", vec![(0, tag("brave", "JJ"))]);
        let background = vec![tag("brave", "JJ")];
        let ratios = rate_ratios(&edits, &tags, &background, "JJ", 10, 1).unwrap();
        assert_eq!(ratios[0].rate_insertion, 1000.0);
    }

    #[test]
    fn background_absent_word_smoothed() {
        let edits: Vec<AtomicEdit> = (0..5)
            .map(|i| edit_with_phrase(&format!("r{i}"), &["newword"]))
            .collect();
        let mut tags = TagSidecar::default();
        for i in 0..5 {
            tags.insert(&format!("r{i}"), vec![(0, tag("newword", "JJ"))]);
        }
        let background = vec![tag("other", "JJ")];
        let ratios = rate_ratios(&edits, &tags, &background, "JJ", 10, 5).unwrap();
        let r = &ratios[0];
        assert!(r.smoothed);
        assert_eq!(r.count_general, 0);
        assert!(r.rate_general > 0.0);
    }

    #[test]
    fn unknown_pos_is_error() {
        let background = vec![tag("a", "NN"), tag("b", "JJ")];
        let err = rate_ratios(&[], &TagSidecar::default(), &background, "XX", 10, 5).unwrap_err();
        match err {
            StatsError::UnknownPos { valid, .. } => {
                assert_eq!(valid, vec!["JJ".to_string(), "NN".to_string()]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn scale_invariance() {
        let mut edits = Vec::new();
        let mut tags = TagSidecar::default();
        for i in 0..20u32 {
            let id = format!("r{i}");
            let word = if i < 8 { "former" } else { "filler" };
            edits.push(edit_with_phrase(&id, &[word]));
            tags.insert(&id, vec![(0, tag(word, "JJ"))]);
        }
        let background: Vec<TaggedToken> = (0..10)
            .map(|i| {
                tag(
                    if i < 3 {
                        "former"
                    } else if i < 6 {
                        "filler"
                    } else {
                        "x"
                    },
                    "JJ",
                )
            })
            .collect();
        let once = rate_ratios(&edits, &tags, &background, "JJ", 10, 1).unwrap();
        // duplicate every record in both streams
        let mut edits2 = edits.clone();
        let mut tags2 = tags.clone();
        for i in 0..20u32 {
            let id = format!("s{i}");
            let word = if i < 8 { "former" } else { "filler" };
            edits2.push(edit_with_phrase(&id, &[word]));
            tags2.insert(&id, vec![(0, tag(word, "JJ"))]);
        }
        let background2: Vec<TaggedToken> =
            background.iter().chain(&background).cloned().collect();
        let twice = rate_ratios(&edits2, &tags2, &background2, "JJ", 10, 1).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert_eq!(a.word, b.word);
            assert!((a.rate_insertion - b.rate_insertion).abs() < 1e-9);
            assert!((a.rate_general - b.rate_general).abs() < 1e-9);
        }
    }

    #[test]
    fn histogram_counts_and_fractions() {
        let edits = vec![
            edit_with_phrase("r1", &["a1"]),
            edit_with_phrase("r2", &["b1"]),
            edit_with_phrase("r3", &["c1", "c2", "c3"]),
        ];
        let h = length_histogram(&edits);
        assert_eq!(h.counts[&1], 2);
        assert_eq!(h.counts[&3], 1);
        assert_eq!(h.total, 3);
        assert!((h.fraction_single - 2.0 / 3.0).abs() < 1e-12);
        assert!((h.fraction_under_5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_histogram() {
        let h = length_histogram(&[]);
        assert!(h.counts.is_empty());
        assert_eq!(h.total, 0);
    }
}
