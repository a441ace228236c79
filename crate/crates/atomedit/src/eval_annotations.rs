//! Annotation analyses (error-rate summary, annotator-editor agreement)
//! and phrase-generation metrics (exact match among top-k, similarity of
//! top-ranked proposals).

use std::collections::HashMap;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit_extract::AtomicEdit;

/// One crowdsourced judgment for one edit: either the chosen insertion
/// token index or an error flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub record_id: String,
    pub annotator_id: String,
    pub judgment: Judgment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgment {
    Index(usize),
    Error,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("annotation line {0}: expected `record_id  annotator_id  judgment`")]
    BadAnnotationLine(usize),
    #[error("annotations reference unknown record ids: {0:?}")]
    MissingRecords(Vec<String>),
    #[error("embedding file line {line}: {message}")]
    BadEmbedding { line: usize, message: String },
}

/// Read annotations from TSV: `record_id  annotator_id  judgment` where
/// judgment is an integer index or the literal `ERROR`.
pub fn read_annotations(reader: impl BufRead) -> Result<Vec<AnnotationRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(EvalError::BadAnnotationLine(i + 1));
        }
        let judgment = if cols[2] == "ERROR" {
            Judgment::Error
        } else {
            Judgment::Index(
                cols[2]
                    .parse()
                    .map_err(|_| EvalError::BadAnnotationLine(i + 1))?,
            )
        };
        out.push(AnnotationRecord {
            record_id: cols[0].to_string(),
            annotator_id: cols[1].to_string(),
            judgment,
        });
    }
    Ok(out)
}

/// Per-record error consensus: unanimously insertable, mixed, or
/// unanimously an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRateSummary {
    pub no_error: f64,
    pub possible_error: f64,
    pub clear_error: f64,
    pub records: usize,
    /// Records that had zero annotations, excluded from the fractions.
    pub unannotated: usize,
}

pub fn error_rate_summary(
    annotations: &[AnnotationRecord],
    record_ids: &[String],
) -> ErrorRateSummary {
    let mut by_record: HashMap<&str, (usize, usize)> = HashMap::new(); // (index, error)
    for a in annotations {
        let entry = by_record.entry(a.record_id.as_str()).or_insert((0, 0));
        match a.judgment {
            Judgment::Index(_) => entry.0 += 1,
            Judgment::Error => entry.1 += 1,
        }
    }
    let mut no_error = 0usize;
    let mut possible = 0usize;
    let mut clear = 0usize;
    let mut unannotated = 0usize;
    for id in record_ids {
        match by_record.get(id.as_str()) {
            None | Some((0, 0)) => unannotated += 1,
            Some((_, 0)) => no_error += 1,
            Some((0, _)) => clear += 1,
            Some((_, _)) => possible += 1,
        }
    }
    let records = no_error + possible + clear;
    let frac = |n: usize| {
        if records == 0 {
            0.0
        } else {
            n as f64 / records as f64
        }
    };
    ErrorRateSummary {
        no_error: frac(no_error),
        possible_error: frac(possible),
        clear_error: frac(clear),
        records,
        unannotated,
    }
}

/// Agreement of annotators with the original editor, both per annotation
/// event and aggregated per record; error judgments count as
/// disagreement. Edits without a token index are excluded and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    /// Fraction of (annotator, record) pairs matching the gold index.
    pub per_annotation: f64,
    /// Mean over records of the per-record agreement fraction.
    pub per_record: f64,
    pub annotation_events: usize,
    /// Annotated edits skipped because they are not token-aligned.
    pub skipped_unaligned: usize,
}

pub fn annotator_agreement(
    annotations: &[AnnotationRecord],
    gold: &[AtomicEdit],
) -> Result<AgreementReport, EvalError> {
    let gold_index: HashMap<&str, Option<usize>> = gold
        .iter()
        .map(|e| (e.record_id.as_str(), e.token_index))
        .collect();
    let missing: Vec<String> = annotations
        .iter()
        .filter(|a| !gold_index.contains_key(a.record_id.as_str()))
        .map(|a| a.record_id.clone())
        .collect();
    if !missing.is_empty() {
        let mut missing = missing;
        missing.sort();
        missing.dedup();
        return Err(EvalError::MissingRecords(missing));
    }
    let mut events = 0usize;
    let mut agree = 0usize;
    let mut skipped_unaligned = 0usize;
    let mut per_record: HashMap<&str, (usize, usize)> = HashMap::new();
    for a in annotations {
        let Some(gold) = gold_index[a.record_id.as_str()] else {
            skipped_unaligned += 1;
            continue;
        };
        events += 1;
        let hit = matches!(a.judgment, Judgment::Index(i) if i == gold);
        if hit {
            agree += 1;
        }
        let entry = per_record.entry(a.record_id.as_str()).or_insert((0, 0));
        entry.1 += 1;
        if hit {
            entry.0 += 1;
        }
    }
    let per_annotation = if events == 0 {
        0.0
    } else {
        agree as f64 / events as f64
    };
    let per_record_mean = if per_record.is_empty() {
        0.0
    } else {
        per_record
            .values()
            .map(|&(a, t)| a as f64 / t as f64)
            .sum::<f64>()
            / per_record.len() as f64
    };
    Ok(AgreementReport {
        per_annotation,
        per_record: per_record_mean,
        annotation_events: events,
        skipped_unaligned,
    })
}

/// Ranked phrase proposals for one record, best first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub record_id: String,
    pub phrases: Vec<String>,
}

fn normalize_phrase(p: &str) -> String {
    p.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Fraction of records whose gold phrase appears (exact string match
/// after whitespace normalization, case-sensitive) in the top k
/// proposals.
pub fn exact_match_at_k(
    proposals: &[ProposalRecord],
    gold: &HashMap<String, String>,
    k: usize,
) -> f64 {
    if proposals.is_empty() {
        return 0.0;
    }
    let hits = proposals
        .iter()
        .filter(|p| {
            gold.get(&p.record_id).is_some_and(|g| {
                let g = normalize_phrase(g);
                p.phrases.iter().take(k).any(|c| normalize_phrase(c) == g)
            })
        })
        .count();
    hits as f64 / proposals.len() as f64
}

/// Word vectors in the standard text format: one word per line, then the
/// vector components; an optional `count dim` header line is detected and
/// skipped. Missing words map to the zero vector.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn read(reader: impl BufRead) -> Result<EmbeddingTable, EvalError> {
        let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
        let mut dimension = 0usize;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap().to_string();
            let values: Result<Vec<f64>, _> = parts.map(str::parse).collect();
            let values = values.map_err(|e| EvalError::BadEmbedding {
                line: i + 1,
                message: e.to_string(),
            })?;
            // a two-integer first line is a count header
            if i == 0 && values.len() == 1 && word.parse::<usize>().is_ok() {
                continue;
            }
            if dimension == 0 {
                dimension = values.len();
            } else if values.len() != dimension {
                return Err(EvalError::BadEmbedding {
                    line: i + 1,
                    message: format!("expected {dimension} components, got {}", values.len()),
                });
            }
            vectors.insert(word, values);
        }
        if dimension == 0 {
            return Err(EvalError::BadEmbedding {
                line: 0,
                message: "no vectors found".to_string(),
            });
        }
        Ok(EmbeddingTable { dimension, vectors })
    }

    pub fn from_vectors(vectors: HashMap<String, Vec<f64>>) -> EmbeddingTable {
        let dimension = vectors.values().next().map_or(0, Vec::len);
        EmbeddingTable { dimension, vectors }
    }

    /// Phrase vector: sum of word vectors, zero for missing words.
    pub fn phrase_vector(&self, phrase: &str) -> Vec<f64> {
        let mut sum = vec![0.0; self.dimension];
        for word in phrase.split_whitespace() {
            if let Some(v) = self.vectors.get(word) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
            }
        }
        sum
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Mean cosine similarity between each record's top-ranked proposal and
/// its gold phrase, under summed word vectors.
pub fn similarity_at_1(
    proposals: &[ProposalRecord],
    gold: &HashMap<String, String>,
    table: &EmbeddingTable,
) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for p in proposals {
        let (Some(top), Some(g)) = (p.phrases.first(), gold.get(&p.record_id)) else {
            continue;
        };
        sum += cosine(&table.phrase_vector(top), &table.phrase_vector(g));
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn ann(record: &str, annotator: &str, judgment: Judgment) -> AnnotationRecord {
        AnnotationRecord {
            record_id: record.to_string(),
            annotator_id: annotator.to_string(),
            judgment,
        }
    }

    #[test]
    fn unanimous_indices_no_error() {
        let anns = vec![
            ann("r1", "a", Judgment::Index(2)),
            ann("r1", "b", Judgment::Index(3)),
        ];
        let s = error_rate_summary(&anns, &["r1".to_string()]);
        assert_eq!(
            (s.no_error, s.possible_error, s.clear_error),
            (1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn mixed_is_possible_error() {
        let anns = vec![
            ann("r1", "a", Judgment::Index(2)),
            ann("r1", "b", Judgment::Error),
        ];
        let s = error_rate_summary(&anns, &["r1".to_string()]);
        assert_eq!(
            (s.no_error, s.possible_error, s.clear_error),
            (0.0, 1.0, 0.0)
        );
    }

    #[test]
    fn fractions_sum_to_one() {
        let mut anns = Vec::new();
        let mut ids = Vec::new();
        for i in 0..30 {
            let id = format!("r{i}");
            ids.push(id.clone());
            let j1 = if i % 3 == 0 {
                Judgment::Index(0)
            } else {
                Judgment::Error
            };
            let j2 = if i % 2 == 0 {
                Judgment::Index(1)
            } else {
                Judgment::Error
            };
            anns.push(ann(&id, "a", j1));
            anns.push(ann(&id, "b", j2));
        }
        let s = error_rate_summary(&anns, &ids);
        assert!((s.no_error + s.possible_error + s.clear_error - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unannotated_excluded() {
        let anns = vec![ann("r1", "a", Judgment::Index(0))];
        let s = error_rate_summary(&anns, &["r1".to_string(), "r2".to_string()]);
        assert_eq!(s.unannotated, 1);
        assert_eq!(s.records, 1);
    }

    fn gold_edit(id: &str, index: usize) -> AtomicEdit {
        use crate::edit_extract::{extract_edits, AlignConfig};
        use crate::ingest::{tokenize, Snapshot};
        let base = Snapshot {
            article_id: "a".into(),
            revision_id: "1".into(),
            sentences: vec![tokenize("She died from an illness.", "en")],
        };
        let edited = Snapshot {
            article_id: "a".into(),
            revision_id: "2".into(),
            sentences: vec![tokenize("She died in 1949 from an illness.", "en")],
        };
        let mut e = extract_edits(&base, &edited, &AlignConfig::default(), "en")
            .pop()
            .unwrap();
        e.record_id = id.to_string();
        assert_eq!(e.token_index, Some(index));
        e
    }

    #[test]
    fn agreement_counts_errors_as_disagreement() {
        let gold = vec![gold_edit("r1", 2)];
        let anns = vec![
            ann("r1", "a", Judgment::Index(2)),
            ann("r1", "b", Judgment::Index(0)),
            ann("r1", "c", Judgment::Error),
        ];
        let report = annotator_agreement(&anns, &gold).unwrap();
        assert!((report.per_annotation - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.annotation_events, 3);
    }

    #[test]
    fn missing_record_is_error() {
        let gold = vec![gold_edit("r1", 2)];
        let anns = vec![ann("r9", "a", Judgment::Index(1))];
        match annotator_agreement(&anns, &gold) {
            Err(EvalError::MissingRecords(ids)) => assert_eq!(ids, vec!["r9".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_match_rank_boundaries() {
        let mut gold = HashMap::new();
        gold.insert("r1".to_string(), "the phrase".to_string());
        let at_rank = |rank: usize| {
            let mut phrases: Vec<String> = (0..11).map(|i| format!("wrong {i}")).collect();
            phrases[rank] = "the  phrase".to_string(); // whitespace normalized
            vec![ProposalRecord {
                record_id: "r1".to_string(),
                phrases,
            }]
        };
        assert_eq!(exact_match_at_k(&at_rank(6), &gold, 10), 1.0);
        assert_eq!(exact_match_at_k(&at_rank(10), &gold, 10), 0.0);
    }

    #[test]
    fn exact_match_monotone_in_k() {
        let mut gold = HashMap::new();
        gold.insert("r1".to_string(), "x".to_string());
        gold.insert("r2".to_string(), "y".to_string());
        let proposals = vec![
            ProposalRecord {
                record_id: "r1".to_string(),
                phrases: vec!["a".into(), "x".into()],
            },
            ProposalRecord {
                record_id: "r2".to_string(),
                phrases: vec!["y".into()],
            },
        ];
        let mut prev = 0.0;
        for k in 1..=3 {
            let m = exact_match_at_k(&proposals, &gold, k);
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn identical_phrases_cosine_one() {
        let mut vecs = HashMap::new();
        vecs.insert("good".to_string(), vec![1.0, 2.0]);
        vecs.insert("word".to_string(), vec![0.5, 0.5]);
        let table = EmbeddingTable::from_vectors(vecs);
        let mut gold = HashMap::new();
        gold.insert("r1".to_string(), "good word".to_string());
        let proposals = vec![ProposalRecord {
            record_id: "r1".to_string(),
            phrases: vec!["good word".to_string()],
        }];
        assert!((similarity_at_1(&proposals, &gold, &table) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_phrases_cosine_zero() {
        let mut vecs = HashMap::new();
        vecs.insert("a".to_string(), vec![1.0, 0.0]);
        vecs.insert("b".to_string(), vec![0.0, 1.0]);
        let table = EmbeddingTable::from_vectors(vecs);
        let mut gold = HashMap::new();
        gold.insert("r1".to_string(), "b".to_string());
        let proposals = vec![ProposalRecord {
            record_id: "r1".to_string(),
            phrases: vec!["a".to_string()],
        }];
        assert_eq!(similarity_at_1(&proposals, &gold, &table), 0.0);
    }

    #[test]
    fn missing_word_zero_vector_cosine_zero() {
        let mut vecs = HashMap::new();
        vecs.insert("known".to_string(), vec![1.0, 1.0]);
        let table = EmbeddingTable::from_vectors(vecs);
        let mut gold = HashMap::new();
        gold.insert("r1".to_string(), "known".to_string());
        let proposals = vec![ProposalRecord {
            record_id: "r1".to_string(),
            phrases: vec!["unknownword".to_string()],
        }];
        assert_eq!(similarity_at_1(&proposals, &gold, &table), 0.0);
    }

    #[test]
    fn embedding_reader_detects_header() {
        let text = "2 3\nfoo 1 0 0\nbar 0 1 0\n";
        let table = EmbeddingTable::read(Cursor::new(text)).unwrap();
        assert_eq!(table.dimension, 3);
        assert_eq!(table.phrase_vector("foo"), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn annotation_tsv_round_trip() {
        let text = "r1\tann1\t3\nr1\tann2\tERROR\n";
        let anns = read_annotations(Cursor::new(text)).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[0].judgment, Judgment::Index(3));
        assert_eq!(anns[1].judgment, Judgment::Error);
    }
}
