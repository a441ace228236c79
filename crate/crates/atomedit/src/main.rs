use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use atomedit::corpus_stats::{
    length_histogram, pos_distribution, pos_distribution_background, rate_ratios,
    read_background_tsv, write_pos_distribution_tsv, write_rate_ratios_tsv, TagSidecar,
    RATE_RATIO_MIN_COUNT,
};
use atomedit::edit_extract::AtomicEdit;
use atomedit::eval_annotations::{
    annotator_agreement, error_rate_summary, exact_match_at_k, read_annotations, similarity_at_1,
    EmbeddingTable, ProposalRecord,
};
use atomedit::lm_locate::{
    eval_accuracy, load_model, locate, save_model, train, write_arpa, LocatePrediction,
};
use atomedit::pipeline::{
    run_extract, shard_paths, validate_corpus, PipelineConfig,
};
use atomedit::pseudo_edits::{generate_pseudo_edit, read_conllu};

#[derive(Parser)]
#[command(name = "atomedit", version, about = "Mine and analyze atomic Wikipedia edits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract atomic edits from a revision dump into JSONL shards
    Extract(ExtractArgs),
    /// Re-check reconstruction invariants on existing shards
    Validate(ValidateArgs),
    /// Phrase-length histogram and POS distribution of a corpus
    Stats(StatsArgs),
    /// Per-word insertion-vs-background rate ratios for one POS
    PosRates(PosRatesArgs),
    /// Train a Kneser-Ney n-gram language model
    TrainLm(TrainLmArgs),
    /// Predict insertion points for edits with a trained model
    Locate(LocateArgs),
    /// Score insertion-point predictions against gold indices
    EvalLocate(EvalLocateArgs),
    /// Generate pseudo-edits by deleting subtrees from parsed sentences
    Pseudo(PseudoArgs),
    /// Error-rate summary and annotator agreement from judgment TSV
    EvalAnnotations(EvalAnnotationsArgs),
    /// Exact-match@k and similarity@1 for phrase proposals
    EvalPhrases(EvalPhrasesArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// XML dump file (optionally gzipped) or snapshot directory
    #[arg(long, env = "ATOMEDIT_INPUT")]
    input: PathBuf,
    #[arg(long, default_value = "en")]
    lang: String,
    /// Alignment window half-width
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    min_bleu: f64,
    /// Output shard directory
    #[arg(long, env = "ATOMEDIT_OUT")]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    shard_size: usize,
    #[arg(long, default_value_t = 100_000)]
    max_snapshots: usize,
    /// Worker threads; 0 = all cores
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// TOML config file; flags override its values
    #[arg(long, env = "ATOMEDIT_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Shard directory or individual .jsonl files
    #[arg(required = true)]
    shards: Vec<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Edit corpus: JSONL file(s) or a shard directory
    #[arg(long, env = "ATOMEDIT_EDITS")]
    edits: PathBuf,
    /// Tag sidecar TSV (record_id, token_index, surface, pos)
    #[arg(long)]
    tags: Option<PathBuf>,
    /// Background tagged-token TSV (surface, pos) for the comparison column
    #[arg(long)]
    background: Option<PathBuf>,
    /// Restrict the POS distribution to single-word insertions
    #[arg(long)]
    single_word_only: bool,
    /// Write the POS table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PosRatesArgs {
    #[arg(long, env = "ATOMEDIT_EDITS")]
    edits: PathBuf,
    #[arg(long)]
    tags: PathBuf,
    /// Background tagged-token TSV (surface, pos)
    #[arg(long)]
    background: PathBuf,
    /// POS tag to analyze (must appear in one of the streams)
    #[arg(long)]
    pos: String,
    #[arg(long, default_value_t = 20)]
    top_n: usize,
    #[arg(long, default_value_t = RATE_RATIO_MIN_COUNT)]
    min_count: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainLmArgs {
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Training text, one whitespace-tokenized sentence per line
    #[arg(long = "in", env = "ATOMEDIT_LM_IN")]
    input: PathBuf,
    #[arg(long, env = "ATOMEDIT_LM_OUT")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    discount: f64,
    #[arg(long, default_value_t = 1)]
    unk_threshold: u64,
    /// Also write an ARPA text dump next to the binary model
    #[arg(long)]
    arpa: Option<PathBuf>,
}

#[derive(Args)]
struct LocateArgs {
    #[arg(long, env = "ATOMEDIT_MODEL")]
    model: PathBuf,
    /// AtomicEdit JSONL to locate insertion points for
    #[arg(long, env = "ATOMEDIT_EDITS")]
    edits: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalLocateArgs {
    /// LocatePrediction JSONL from `locate`
    #[arg(long)]
    preds: PathBuf,
}

#[derive(Args)]
struct PseudoArgs {
    /// CoNLL-U dependency corpus
    #[arg(long = "in", env = "ATOMEDIT_CONLLU")]
    input: PathBuf,
    /// Number of pseudo-edits to emit
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalAnnotationsArgs {
    /// Judgment TSV (record_id, annotator_id, index-or-ERROR)
    #[arg(long)]
    annotations: PathBuf,
    /// Gold AtomicEdit JSONL
    #[arg(long, env = "ATOMEDIT_EDITS")]
    edits: PathBuf,
}

#[derive(Args)]
struct EvalPhrasesArgs {
    /// Proposal JSONL: {"record_id": ..., "phrases": [...]} per line
    #[arg(long)]
    proposals: PathBuf,
    /// Gold AtomicEdit JSONL
    #[arg(long, env = "ATOMEDIT_EDITS")]
    edits: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Word-vector text file enabling similarity@1
    #[arg(long, env = "ATOMEDIT_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::PosRates(args) => cmd_pos_rates(args),
        Command::TrainLm(args) => cmd_train_lm(args),
        Command::Locate(args) => cmd_locate(args),
        Command::EvalLocate(args) => cmd_eval_locate(args),
        Command::Pseudo(args) => cmd_pseudo(args),
        Command::EvalAnnotations(args) => cmd_eval_annotations(args),
        Command::EvalPhrases(args) => cmd_eval_phrases(args),
    }
}

/// stdout or a named file.
fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(
        fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

/// Edits from a JSONL file or every shard in a directory.
fn read_edits(path: &Path) -> Result<Vec<AtomicEdit>> {
    let paths = if path.is_dir() {
        shard_paths(path)?
    } else {
        vec![path.to_path_buf()]
    };
    let mut edits = Vec::new();
    for p in paths {
        edits.extend(atomedit::pipeline::read_shard(&p)?);
    }
    Ok(edits)
}

fn cmd_extract(args: ExtractArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_toml_file(path)?,
        None => PipelineConfig::default(),
    };
    config.language = args.lang;
    config.input = args.input;
    config.window_k = args.k;
    config.min_bleu = args.min_bleu;
    config.output_dir = args.out;
    config.shard_size = args.shard_size;
    config.max_snapshots = args.max_snapshots;
    config.jobs = args.jobs;
    let summary = run_extract(&config)?;
    eprintln!(
        "extracted {} edits ({} insertions, {} deletions) from {} articles ({} skipped)",
        summary.total, summary.insertions, summary.deletions, summary.articles,
        summary.article_errors
    );
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let mut paths = Vec::new();
    for p in &args.shards {
        if p.is_dir() {
            paths.extend(shard_paths(p)?);
        } else {
            paths.push(p.clone());
        }
    }
    let report = validate_corpus(&paths)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.violation_count > 0 {
        eprintln!("{} violation(s) found", report.violation_count);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode> {
    let edits = read_edits(&args.edits)?;
    let histogram = length_histogram(&edits);
    eprintln!(
        "{} edits; fraction single-word {:.4}, under 5 tokens {:.4}",
        histogram.total, histogram.fraction_single, histogram.fraction_under_5
    );
    let mut w = output(&args.out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&histogram)?)?;
    if let Some(tags_path) = &args.tags {
        let tags = TagSidecar::read(open(tags_path)?)?;
        let dist = pos_distribution(&edits, &tags, args.single_word_only);
        let general = match &args.background {
            Some(bg) => pos_distribution_background(&read_background_tsv(open(bg)?)?),
            None => Default::default(),
        };
        write_pos_distribution_tsv(&dist, &general, &mut w)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_pos_rates(args: PosRatesArgs) -> Result<ExitCode> {
    let edits = read_edits(&args.edits)?;
    let tags = TagSidecar::read(open(&args.tags)?)?;
    let background = read_background_tsv(open(&args.background)?)?;
    let ratios = rate_ratios(
        &edits,
        &tags,
        &background,
        &args.pos,
        args.top_n,
        args.min_count,
    )?;
    write_rate_ratios_tsv(&ratios, output(&args.out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_lm(args: TrainLmArgs) -> Result<ExitCode> {
    let mut sentences = Vec::new();
    for line in open(&args.input)?.lines() {
        let line = line?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    let model = train(&sentences, args.order, args.discount, args.unk_threshold)?;
    save_model(&model, &args.out)?;
    eprintln!(
        "trained order-{} model on {} sentences, vocabulary {}",
        args.order,
        sentences.len(),
        model.vocabulary.len()
    );
    if let Some(arpa) = &args.arpa {
        write_arpa(&model, BufWriter::new(fs::File::create(arpa)?))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_locate(args: LocateArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let edits = read_edits(&args.edits)?;
    let mut w = output(&args.out)?;
    let mut skipped = 0usize;
    for edit in &edits {
        let (Some(gold), true) = (edit.token_index, edit.token_aligned) else {
            skipped += 1;
            continue;
        };
        let base = &edit.shorter_sentence().tokens;
        if base.is_empty() || edit.phrase_tokens.is_empty() {
            skipped += 1;
            continue;
        }
        let mut pred = locate(&model, base, &edit.phrase_tokens);
        pred.record_id = edit.record_id.clone();
        pred.gold_index = Some(gold);
        pred.category = edit
            .category
            .as_ref()
            .map(|c| serde_json::to_value(c).unwrap().as_str().unwrap().to_string());
        serde_json::to_writer(&mut w, &pred)?;
        w.write_all(b"\n")?;
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} edit(s) without a token-aligned insertion point");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval_locate(args: EvalLocateArgs) -> Result<ExitCode> {
    let mut predictions: Vec<LocatePrediction> = Vec::new();
    for line in open(&args.preds)?.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        predictions.push(serde_json::from_str(&line)?);
    }
    let (accuracy, by_category) = eval_accuracy(&predictions);
    let per_category: HashMap<&String, f64> = by_category
        .iter()
        .map(|(cat, (c, t))| (cat, *c as f64 / (*t).max(1) as f64))
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "records": predictions.len(),
            "accuracy": accuracy,
            "per_category": per_category,
        }))?
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_pseudo(args: PseudoArgs) -> Result<ExitCode> {
    let mut parses = Vec::new();
    for parse in read_conllu(open(&args.input)?) {
        match parse {
            Ok(p) => parses.push(p),
            Err(e) => eprintln!("sentence skipped: {e}"),
        }
    }
    if parses.is_empty() {
        bail!("no usable sentences in {}", args.input.display());
    }
    let mut w = output(&args.out)?;
    let mut emitted = 0u64;
    let mut attempt = 0u64;
    // derive a distinct seed per attempt so the stream is reproducible
    // but each edit samples independently
    while emitted < args.n {
        let parse = &parses[(attempt % parses.len() as u64) as usize];
        let seed = args.seed.wrapping_add(attempt);
        attempt += 1;
        if let Some(edit) = generate_pseudo_edit(parse, seed) {
            serde_json::to_writer(&mut w, &edit)?;
            w.write_all(b"\n")?;
            emitted += 1;
        }
        if attempt > args.n.saturating_mul(2).max(parses.len() as u64 * 2) && emitted == 0 {
            bail!("no sentence yields an eligible span");
        }
    }
    eprintln!("emitted {emitted} pseudo-edits");
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval_annotations(args: EvalAnnotationsArgs) -> Result<ExitCode> {
    let annotations = read_annotations(open(&args.annotations)?)?;
    let edits = read_edits(&args.edits)?;
    let ids: Vec<String> = edits.iter().map(|e| e.record_id.clone()).collect();
    let summary = error_rate_summary(&annotations, &ids);
    let agreement = annotator_agreement(&annotations, &edits)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "no_error": summary.no_error,
            "possible_error": summary.possible_error,
            "clear_error": summary.clear_error,
            "records": summary.records,
            "unannotated": summary.unannotated,
            "agreement_per_annotation": agreement.per_annotation,
            "agreement_per_record": agreement.per_record,
            "annotation_events": agreement.annotation_events,
            "skipped_unaligned": agreement.skipped_unaligned,
        }))?
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval_phrases(args: EvalPhrasesArgs) -> Result<ExitCode> {
    let mut proposals: Vec<ProposalRecord> = Vec::new();
    for line in open(&args.proposals)?.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        proposals.push(serde_json::from_str(&line)?);
    }
    let edits = read_edits(&args.edits)?;
    let gold: HashMap<String, String> = edits
        .iter()
        .map(|e| (e.record_id.clone(), e.phrase.trim().to_string()))
        .collect();
    let exact = exact_match_at_k(&proposals, &gold, args.k);
    let similarity = match &args.embeddings {
        Some(path) => {
            let table = EmbeddingTable::read(open(path)?)?;
            Some(similarity_at_1(&proposals, &gold, &table))
        }
        None => None,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "records": proposals.len(),
            "k": args.k,
            "exact_match_at_k": exact,
            "similarity_at_1": similarity,
        }))?
    );
    Ok(ExitCode::SUCCESS)
}
