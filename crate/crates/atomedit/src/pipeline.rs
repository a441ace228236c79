//! Orchestration: run the full extraction over a dump, write JSONL
//! shards atomically, and validate existing shards.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit_extract::{extract_edits, AlignConfig, AtomicEdit, EditKind};
use crate::ingest::{
    pair_snapshots, process_snapshot, read_dump, AbbrevList, DumpSource, IngestConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub language: String,
    pub input: PathBuf,
    pub window_k: usize,
    pub min_bleu: f64,
    pub bleu_max_order: usize,
    pub output_dir: PathBuf,
    /// Records per shard file.
    pub shard_size: usize,
    pub max_snapshots: usize,
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            language: "en".to_string(),
            input: PathBuf::new(),
            window_k: 5,
            min_bleu: 0.1,
            bleu_max_order: 4,
            output_dir: PathBuf::from("shards"),
            shard_size: 10_000,
            max_snapshots: 100_000,
            seed: 0,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<PipelineConfig, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::BadConfig(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<PipelineConfig, PipelineError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn align_config(&self) -> Result<AlignConfig, PipelineError> {
        if self.window_k == 0 {
            return Err(PipelineError::BadConfig("window_k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_bleu) {
            return Err(PipelineError::BadConfig(
                "min_bleu must be within [0, 1]".into(),
            ));
        }
        if self.bleu_max_order == 0 || self.shard_size == 0 {
            return Err(PipelineError::BadConfig(
                "bleu_max_order and shard_size must be >= 1".into(),
            ));
        }
        Ok(AlignConfig {
            window_k: self.window_k,
            min_bleu: self.min_bleu,
            bleu_max_order: self.bleu_max_order,
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("input error: {0}")]
    Ingest(#[from] crate::ingest::IngestError),
    #[error("bad shard record: {0}")]
    BadRecord(String),
}

/// Counts reported after an extraction run.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExtractSummary {
    pub language: String,
    pub articles: usize,
    pub article_errors: usize,
    pub insertions: u64,
    pub deletions: u64,
    pub total: u64,
    pub shards: Vec<String>,
}

/// Run extraction over the configured dump. Articles fan out across the
/// worker pool; shard files appear atomically via temp + rename. Edits
/// are written in deterministic article order regardless of scheduling.
pub fn run_extract(config: &PipelineConfig) -> Result<ExtractSummary, PipelineError> {
    let align = config.align_config()?;
    fs::create_dir_all(&config.output_dir)?;
    let source = DumpSource::detect(&config.input)?;
    let ingest = IngestConfig {
        max_snapshots: config.max_snapshots,
        language: config.language.clone(),
        abbrev_list_path: None,
    };
    let abbrevs = AbbrevList::for_language(&config.language);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| PipelineError::BadConfig(e.to_string()))?;

    let article_errors = AtomicU64::new(0);
    let articles = AtomicU64::new(0);
    let err_log = Mutex::new(());

    let batches: Vec<_> = read_dump(&source, &ingest)?.collect();
    let mut per_article: Vec<Vec<AtomicEdit>> = Vec::new();
    pool.install(|| {
        per_article = batches
            .into_par_iter()
            .map(|batch| match batch {
                Ok(snapshots) => {
                    articles.fetch_add(1, Ordering::Relaxed);
                    let mut edits = Vec::new();
                    // identical bodies produce no edits; skip them before
                    // the costly sentence pass
                    let mut kept = Vec::new();
                    for raw in &snapshots {
                        if kept
                            .last()
                            .is_none_or(|prev: &&crate::ingest::RawSnapshot| prev.body != raw.body)
                        {
                            kept.push(raw);
                        }
                    }
                    let processed: Vec<_> = kept
                        .iter()
                        .map(|raw| process_snapshot(raw, &abbrevs, &config.language))
                        .collect();
                    for (base, edited) in pair_snapshots(&processed) {
                        edits.extend(extract_edits(base, edited, &align, &config.language));
                    }
                    edits
                }
                Err(e) => {
                    article_errors.fetch_add(1, Ordering::Relaxed);
                    let _guard = err_log.lock().unwrap();
                    eprintln!("article skipped: {e}");
                    Vec::new()
                }
            })
            .collect();
    });

    let mut summary = ExtractSummary {
        language: config.language.clone(),
        articles: articles.load(Ordering::Relaxed) as usize,
        article_errors: article_errors.load(Ordering::Relaxed) as usize,
        ..ExtractSummary::default()
    };

    let all_edits: Vec<AtomicEdit> = per_article.into_iter().flatten().collect();
    for edit in &all_edits {
        match edit.kind {
            EditKind::Insertion => summary.insertions += 1,
            EditKind::Deletion => summary.deletions += 1,
        }
    }
    summary.total = summary.insertions + summary.deletions;

    for (shard_no, chunk) in all_edits.chunks(config.shard_size).enumerate() {
        let name = format!("edits-{shard_no:05}.jsonl");
        write_shard_atomic(&config.output_dir.join(&name), chunk)?;
        summary.shards.push(name);
    }
    Ok(summary)
}

/// Write one JSONL shard crash-safely: fill a dot-temp file, flush, then
/// rename over the final name.
fn write_shard_atomic(path: &Path, edits: &[AtomicEdit]) -> Result<(), PipelineError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        for edit in edits {
            serde_json::to_writer(&mut w, edit)
                .map_err(|e| PipelineError::BadRecord(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Read every record in a JSONL shard file.
pub fn read_shard(path: &Path) -> Result<Vec<AtomicEdit>, PipelineError> {
    let mut out = Vec::new();
    let reader = BufReader::new(fs::File::open(path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let edit: AtomicEdit = serde_json::from_str(&line).map_err(|e| {
            PipelineError::BadRecord(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(edit);
    }
    Ok(out)
}

/// Shard files in a directory, sorted by name.
pub fn shard_paths(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    Ok(paths)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ValidationReport {
    pub records: u64,
    pub violations: Vec<String>,
    /// Violation record ids, capped in the message list but fully counted.
    pub violation_count: u64,
    pub per_kind: BTreeMap<String, u64>,
}

/// Re-check every reconstruction invariant on existing shards.
pub fn validate_corpus(shards: &[PathBuf]) -> Result<ValidationReport, PipelineError> {
    let mut report = ValidationReport::default();
    for path in shards {
        for edit in read_shard(path)? {
            report.records += 1;
            let kind = match edit.kind {
                EditKind::Insertion => "insertion",
                EditKind::Deletion => "deletion",
            };
            *report.per_kind.entry(kind.to_string()).or_insert(0) += 1;
            if let Err(msg) = edit.check_invariants() {
                report.violation_count += 1;
                if report.violations.len() < 1000 {
                    report.violations.push(format!("{}: {msg}", edit.record_id));
                }
            }
        }
    }
    Ok(report)
}
