//! Command-line interface: mine, stats, split, train-vocab, train, generate,
//! suggest, evaluate, and the two ablation harnesses.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (bad or missing
//! inputs), 3 runtime error. Every subcommand takes `--seed` and `--config`
//! (a JSON file whose sections override built-in defaults; explicit flags
//! win over the file).

use std::ffi::OsString;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::corpus::{self, CorpusEntry, SplitSpec};
use crate::decode::{generate_candidates, DecodeConfig};
use crate::diff::{modifications_from_diff, SkipReason};
use crate::error::{Error, Result};
use crate::eval::{self, AblationInputs};
use crate::miner::{self, MinerConfig};
use crate::model::{
    encode_corpus, load_checkpoint, load_checkpoint_expecting, save_checkpoint, train, InputMode,
    ModelConfig, ModelParameters, TrainConfig,
};
use crate::tokenizer::{train_bpe, Vocabulary};

#[derive(Parser)]
#[command(
    name = "commitgen",
    version,
    about = "Mine commit corpora, train a message generator, suggest commit messages",
    disable_help_subcommand = true
)]
struct Cli {
    /// Seed for every random choice (mining order is already deterministic).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// JSON config file; sections model/train/decode/miner/split override
    /// defaults, explicit flags override the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine repositories into a corpus of (modification, message) pairs
    Mine(MineArgs),
    /// Corpus statistics: per-language counts, verbs, length percentiles
    Stats(StatsArgs),
    /// Deterministic train/validation/test split
    Split(SplitArgs),
    /// Train the byte-level BPE vocabulary
    TrainVocab(TrainVocabArgs),
    /// Train the encoder-decoder on a corpus split
    Train(TrainArgs),
    /// Generate messages for every entry of a corpus file
    Generate(GenerateArgs),
    /// Suggest a commit message for a staged diff
    Suggest(SuggestArgs),
    /// BLEU-4 and perplexity of a checkpoint on a split
    Evaluate(EvaluateArgs),
    /// Train and evaluate both input encodings side by side
    AblateInput(AblateInputArgs),
    /// Train and evaluate one run per initial-weight choice
    AblateInit(AblateInitArgs),
}

// -------------------------------------------------------------------------
// Config file
// -------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    train: TrainSection,
    #[serde(default)]
    decode: DecodeSection,
    #[serde(default)]
    miner: MinerSection,
    #[serde(default)]
    split: SplitSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    encoder_layers: Option<usize>,
    decoder_layers: Option<usize>,
    hidden_dim: Option<usize>,
    heads: Option<usize>,
    ffn_dim: Option<usize>,
    max_source_len: Option<usize>,
    max_target_len: Option<usize>,
    dropout: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    grad_clip: Option<f64>,
    weight_decay: Option<f64>,
    warmup_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecodeSection {
    beam_size: Option<usize>,
    max_target_len: Option<usize>,
    length_penalty: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinerSection {
    max_commits_per_repo: Option<usize>,
    max_files_changed: Option<usize>,
    max_code_tokens: Option<usize>,
    clone_workers: Option<usize>,
    allowed_extensions: Option<Vec<String>>,
    verb_whitelist: Option<Vec<String>>,
    exclude_merges: Option<bool>,
    keep_context: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitSection {
    train_frac: Option<f64>,
    valid_frac: Option<f64>,
    test_frac: Option<f64>,
    by_repo: Option<bool>,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::data(format!("config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::data(format!("config {}: {e}", path.display())))
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

// -------------------------------------------------------------------------
// Shared flag groups
// -------------------------------------------------------------------------

#[derive(Args, Debug, Clone)]
struct ModelFlags {
    #[arg(long)]
    encoder_layers: Option<usize>,
    #[arg(long)]
    decoder_layers: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    ffn_dim: Option<usize>,
    #[arg(long)]
    max_source_len: Option<usize>,
    #[arg(long)]
    max_target_len: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
}

impl ModelFlags {
    fn resolve(&self, section: &ModelSection, vocab_size: usize) -> Result<ModelConfig> {
        let d = ModelConfig::desk(vocab_size);
        let config = ModelConfig {
            encoder_layers: pick(self.encoder_layers, section.encoder_layers, d.encoder_layers),
            decoder_layers: pick(self.decoder_layers, section.decoder_layers, d.decoder_layers),
            hidden_dim: pick(self.hidden_dim, section.hidden_dim, d.hidden_dim),
            heads: pick(self.heads, section.heads, d.heads),
            ffn_dim: pick(self.ffn_dim, section.ffn_dim, d.ffn_dim),
            max_source_len: pick(self.max_source_len, section.max_source_len, d.max_source_len),
            max_target_len: pick(self.max_target_len, section.max_target_len, d.max_target_len),
            vocab_size,
            dropout: pick(self.dropout, section.dropout, d.dropout),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug, Clone)]
struct TrainFlags {
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    warmup_steps: Option<usize>,
}

impl TrainFlags {
    fn resolve(&self, section: &TrainSection, seed: u64) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let config = TrainConfig {
            learning_rate: pick(self.learning_rate, section.learning_rate, d.learning_rate),
            batch_size: pick(self.batch_size, section.batch_size, d.batch_size),
            epochs: pick(self.epochs, section.epochs, d.epochs),
            grad_clip: self.grad_clip.or(section.grad_clip),
            weight_decay: pick(self.weight_decay, section.weight_decay, d.weight_decay),
            warmup_steps: pick(self.warmup_steps, section.warmup_steps, d.warmup_steps),
            seed,
            ..d
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug, Clone)]
struct DecodeFlags {
    /// Beam size K
    #[arg(long)]
    beams: Option<usize>,
    #[arg(long)]
    length_penalty: Option<f64>,
}

impl DecodeFlags {
    fn resolve(&self, section: &DecodeSection, max_target_len: usize) -> Result<DecodeConfig> {
        let d = DecodeConfig::default();
        let config = DecodeConfig {
            beam_size: pick(self.beams, section.beam_size, d.beam_size),
            max_target_len: section.max_target_len.unwrap_or(max_target_len),
            length_penalty: pick(self.length_penalty, section.length_penalty, d.length_penalty),
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_mode(s: &str) -> Result<InputMode> {
    InputMode::parse(s)
        .ok_or_else(|| Error::data(format!("unknown input mode {s:?} (changed_lines or all_modification)")))
}

// -------------------------------------------------------------------------
// Subcommand argument structs
// -------------------------------------------------------------------------

#[derive(Args, Debug)]
struct MineArgs {
    /// Newline-delimited repo list: owner/name, URL, or local path
    #[arg(long)]
    repos: PathBuf,
    /// Output corpus file (line-delimited JSON)
    #[arg(long)]
    out: PathBuf,
    /// Mining report JSON path
    #[arg(long)]
    report: Option<PathBuf>,
    /// Clone destination for remote repositories
    #[arg(long, default_value = "mined-repos")]
    workdir: PathBuf,
    #[arg(long)]
    max_commits_per_repo: Option<usize>,
    #[arg(long)]
    max_files_changed: Option<usize>,
    #[arg(long)]
    max_code_tokens: Option<usize>,
    /// Worker threads for cloning/mining
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated extensions, e.g. ".py,.go"
    #[arg(long)]
    extensions: Option<String>,
    /// Comma-separated first-word verb whitelist
    #[arg(long)]
    verbs: Option<String>,
    /// Keep merge commits in the walk
    #[arg(long)]
    include_merges: bool,
    /// Do not store context lines in corpus entries
    #[arg(long)]
    drop_context: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Write the report as JSON here as well
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for train.jsonl / valid.jsonl / test.jsonl
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    valid_frac: Option<f64>,
    #[arg(long)]
    test_frac: Option<f64>,
    /// Keep each repository's entries in one part
    #[arg(long)]
    by_repo: bool,
}

#[derive(Args, Debug)]
struct TrainVocabArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Total vocabulary size (specials + bytes + merges)
    #[arg(long, default_value_t = 8192)]
    vocab_size: usize,
    /// Output directory for merges.txt and vocab.txt
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training split corpus file
    #[arg(long)]
    train: PathBuf,
    /// Validation split corpus file
    #[arg(long)]
    valid: PathBuf,
    /// Vocabulary directory (from train-vocab)
    #[arg(long)]
    vocab: PathBuf,
    /// Output checkpoint path (best dev-PPL parameters)
    #[arg(long)]
    out: PathBuf,
    /// Also save the final-epoch parameters here
    #[arg(long)]
    final_out: Option<PathBuf>,
    /// Per-epoch metrics as line-delimited JSON
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Warm-start checkpoint (the initialization ablation mechanism)
    #[arg(long)]
    init: Option<PathBuf>,
    /// Input encoding: changed_lines or all_modification
    #[arg(long, default_value = "changed_lines")]
    mode: String,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train_flags: TrainFlags,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Output file: one JSON record {id, reference, hypothesis, score} per line
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "changed_lines")]
    mode: String,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Args, Debug)]
struct SuggestArgs {
    /// Repository whose staged diff to describe (otherwise read a diff from
    /// stdin or --diff-file)
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Unified diff file to describe
    #[arg(long)]
    diff_file: Option<PathBuf>,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Beam size; when given without --candidates it also sets how many
    /// ranked candidates are printed
    #[arg(long)]
    beams: Option<usize>,
    /// Print the top N candidates with scores
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long, default_value = "changed_lines")]
    mode: String,
    #[arg(long)]
    length_penalty: Option<f64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Corpus split to evaluate (typically the test split)
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Write the report as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "changed_lines")]
    mode: String,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Args, Debug)]
struct AblateInputArgs {
    /// Corpus with context retained (mine without --drop-context)
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Write runs as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train_flags: TrainFlags,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Args, Debug)]
struct AblateInitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Initialization rows: "random" or "label=checkpoint.ckpt" (repeat)
    #[arg(long = "init")]
    inits: Vec<String>,
    #[arg(long, default_value = "changed_lines")]
    mode: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train_flags: TrainFlags,
    #[command(flatten)]
    decode: DecodeFlags,
}

// -------------------------------------------------------------------------
// Entry point
// -------------------------------------------------------------------------

/// Parses argv and runs the selected subcommand, returning the process exit
/// code (0 ok, 1 usage, 2 data error, 3 runtime error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Data(_) | Error::Shape(_) | Error::Json(_) => 2,
        Error::Io(_) | Error::Repo { .. } | Error::Train(_) => 3,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let config = load_config(&cli.config)?;
    match cli.command {
        Command::Mine(args) => cmd_mine(args, &config, cli.seed),
        Command::Stats(args) => cmd_stats(args),
        Command::Split(args) => cmd_split(args, &config, cli.seed),
        Command::TrainVocab(args) => cmd_train_vocab(args),
        Command::Train(args) => cmd_train(args, &config, cli.seed),
        Command::Generate(args) => cmd_generate(args, &config),
        Command::Suggest(args) => cmd_suggest(args, &config),
        Command::Evaluate(args) => cmd_evaluate(args, &config),
        Command::AblateInput(args) => cmd_ablate_input(args, &config, cli.seed),
        Command::AblateInit(args) => cmd_ablate_init(args, &config, cli.seed),
    }
}

// -------------------------------------------------------------------------
// Helpers
// -------------------------------------------------------------------------

fn read_corpus_checked(path: &Path) -> Result<Vec<CorpusEntry>> {
    if !path.exists() {
        return Err(Error::data(format!("corpus file {} not found", path.display())));
    }
    corpus::read_corpus(path)
}

fn load_vocab_checked(dir: &Path) -> Result<Vocabulary> {
    if !dir.exists() {
        return Err(Error::data(format!("vocab directory {} not found", dir.display())));
    }
    Vocabulary::load(dir)
}

/// Loads a checkpoint and the vocabulary together, enforcing that they
/// belong to each other.
fn load_model(ckpt: &Path, vocab_dir: &Path) -> Result<(ModelConfig, ModelParameters, Vocabulary)> {
    if !ckpt.exists() {
        return Err(Error::data(format!("checkpoint {} not found", ckpt.display())));
    }
    let vocab = load_vocab_checked(vocab_dir)?;
    let stored = load_checkpoint(ckpt)?;
    if stored.config.vocab_size != vocab.size() {
        return Err(Error::Shape(format!(
            "checkpoint vocab size {} does not match vocabulary size {}",
            stored.config.vocab_size,
            vocab.size()
        )));
    }
    if stored.vocab_hash != vocab.hash() {
        return Err(Error::data(
            "checkpoint was trained with a different vocabulary (hash mismatch)",
        ));
    }
    Ok((stored.config, stored.params, vocab))
}

fn corpus_texts(entries: &[CorpusEntry]) -> Vec<String> {
    let mut texts = Vec::with_capacity(entries.len() * 3);
    for e in entries {
        if !e.added.is_empty() {
            texts.push(e.added.join("\n"));
        }
        if !e.deleted.is_empty() {
            texts.push(e.deleted.join("\n"));
        }
        if let Some(all) = &e.all_lines {
            texts.push(all.join("\n"));
        }
        texts.push(e.message.clone());
    }
    texts
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// -------------------------------------------------------------------------
// Subcommands
// -------------------------------------------------------------------------

fn cmd_mine(args: MineArgs, file: &ConfigFile, _seed: u64) -> Result<()> {
    let repo_text = fs::read_to_string(&args.repos)
        .map_err(|e| Error::data(format!("repo list {}: {e}", args.repos.display())))?;
    let repo_list: Vec<String> = repo_text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();

    let section = &file.miner;
    let defaults = MinerConfig::default();
    let config = MinerConfig {
        repo_list,
        max_commits_per_repo: pick(
            args.max_commits_per_repo,
            section.max_commits_per_repo,
            defaults.max_commits_per_repo,
        ),
        allowed_extensions: match &args.extensions {
            Some(csv) => csv.split(',').map(|s| s.trim().to_string()).collect(),
            None => section
                .allowed_extensions
                .clone()
                .unwrap_or(defaults.allowed_extensions),
        },
        branch_policy: defaults.branch_policy,
        exclude_merges: if args.include_merges {
            false
        } else {
            section.exclude_merges.unwrap_or(true)
        },
        max_files_changed: pick(
            args.max_files_changed,
            section.max_files_changed,
            defaults.max_files_changed,
        ),
        max_code_tokens: pick(
            args.max_code_tokens,
            section.max_code_tokens,
            defaults.max_code_tokens,
        ),
        verb_whitelist: match &args.verbs {
            Some(csv) => csv.split(',').map(|s| s.trim().to_lowercase()).collect(),
            None => section
                .verb_whitelist
                .clone()
                .unwrap_or(defaults.verb_whitelist),
        },
        clone_workers: pick(args.workers, section.clone_workers, defaults.clone_workers),
        workdir: args.workdir.clone(),
        keep_context: if args.drop_context {
            false
        } else {
            section.keep_context.unwrap_or(true)
        },
    };

    let outcome = miner::mine(&config, &crate::tokenizer::LexicalTokenizer)?;
    let mut entries = Vec::new();
    for record in &outcome.records {
        entries.extend(corpus::entries_from_record(record, config.keep_context));
    }
    let written = corpus::write_corpus(&entries, &args.out)?;
    print!("{}", outcome.report.to_table());
    println!("wrote {} entries to {}", written, args.out.display());
    if let Some(report_path) = &args.report {
        write_json(report_path, &outcome.report)?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let entries = read_corpus_checked(&args.corpus)?;
    let report = corpus::stats(&entries);
    print!("{}", report.to_table());
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn cmd_split(args: SplitArgs, file: &ConfigFile, seed: u64) -> Result<()> {
    let entries = read_corpus_checked(&args.corpus)?;
    let section = &file.split;
    let d = SplitSpec::default();
    let spec = SplitSpec {
        train_frac: pick(args.train_frac, section.train_frac, d.train_frac),
        valid_frac: pick(args.valid_frac, section.valid_frac, d.valid_frac),
        test_frac: pick(args.test_frac, section.test_frac, d.test_frac),
        seed,
        by_repo: args.by_repo || section.by_repo.unwrap_or(false),
    };
    let splits = corpus::split(&entries, &spec)?;
    fs::create_dir_all(&args.out_dir)?;
    for (name, part) in [
        ("train.jsonl", &splits.train),
        ("valid.jsonl", &splits.valid),
        ("test.jsonl", &splits.test),
    ] {
        let path = args.out_dir.join(name);
        let n = corpus::write_corpus(part, &path)?;
        println!("{}: {n} entries", path.display());
    }
    Ok(())
}

fn cmd_train_vocab(args: TrainVocabArgs) -> Result<()> {
    let entries = read_corpus_checked(&args.corpus)?;
    if entries.is_empty() {
        return Err(Error::data("cannot train a vocabulary on an empty corpus"));
    }
    let texts = corpus_texts(&entries);
    let vocab = train_bpe(&texts, args.vocab_size)?;
    vocab.save(&args.out)?;
    println!(
        "vocabulary: {} tokens ({} merges) -> {}",
        vocab.size(),
        vocab.merges().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, file: &ConfigFile, seed: u64) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let vocab = load_vocab_checked(&args.vocab)?;
    let train_entries = read_corpus_checked(&args.train)?;
    let valid_entries = read_corpus_checked(&args.valid)?;
    let model_config = args.model.resolve(&file.model, vocab.size())?;
    let train_config = args.train_flags.resolve(&file.train, seed)?;

    let params = match &args.init {
        Some(path) => {
            let stored = load_checkpoint_expecting(path, &model_config)?;
            if stored.vocab_hash != vocab.hash() {
                return Err(Error::data(format!(
                    "warm-start checkpoint {} was trained with a different vocabulary",
                    path.display()
                )));
            }
            stored.params
        }
        None => ModelParameters::init(&model_config, seed),
    };

    let train_set = encode_corpus(&train_entries, &vocab, mode, &model_config);
    let valid_set = encode_corpus(&valid_entries, &vocab, mode, &model_config);
    let outcome = train(params, &train_set, &valid_set, &model_config, &train_config)?;

    for m in &outcome.metrics {
        println!(
            "epoch {:>3}  train_loss {:>9.4}  dev_ppl {:>12.4}",
            m.epoch, m.train_loss, m.dev_ppl
        );
    }
    println!(
        "best dev ppl {:.4} at epoch {}",
        outcome.best_dev_ppl, outcome.best_epoch
    );
    save_checkpoint(&outcome.best_params, &model_config, vocab.hash(), &args.out)?;
    println!("checkpoint -> {}", args.out.display());
    if let Some(final_out) = &args.final_out {
        save_checkpoint(&outcome.final_params, &model_config, vocab.hash(), final_out)?;
    }
    if let Some(metrics_path) = &args.metrics {
        let mut text = String::new();
        for m in &outcome.metrics {
            text.push_str(&serde_json::to_string(m)?);
            text.push('\n');
        }
        fs::write(metrics_path, text)?;
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs, file: &ConfigFile) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let (model_config, params, vocab) = load_model(&args.checkpoint, &args.vocab)?;
    let decode_config = args.decode.resolve(&file.decode, model_config.max_target_len)?;
    let entries = read_corpus_checked(&args.corpus)?;

    #[derive(serde::Serialize)]
    struct Row<'a> {
        id: &'a str,
        reference: &'a str,
        hypothesis: String,
        score: f64,
    }
    let mut out = String::new();
    for entry in &entries {
        let candidates = generate_candidates(
            &params,
            &model_config,
            entry,
            &vocab,
            mode,
            &decode_config,
            1,
        )?;
        let top = candidates
            .first()
            .ok_or_else(|| Error::data("no hypothesis generated"))?;
        let row = Row {
            id: &entry.id,
            reference: &entry.message,
            hypothesis: top.message.clone(),
            score: top.score,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    fs::write(&args.out, out)?;
    println!("wrote {} generations to {}", entries.len(), args.out.display());
    Ok(())
}

fn staged_diff_text(repo_path: &Path) -> Result<String> {
    let repo = git2::Repository::open(repo_path).map_err(|e| Error::Repo {
        repo: repo_path.display().to_string(),
        msg: e.to_string(),
    })?;
    let head_tree = match repo.head() {
        Ok(head) => Some(head.peel_to_tree().map_err(|e| Error::Repo {
            repo: repo_path.display().to_string(),
            msg: e.to_string(),
        })?),
        Err(_) => None, // unborn branch: diff the index against nothing
    };
    let mut opts = git2::DiffOptions::new();
    opts.context_lines(3);
    let diff = repo
        .diff_tree_to_index(head_tree.as_ref(), None, Some(&mut opts))
        .map_err(|e| Error::Repo {
            repo: repo_path.display().to_string(),
            msg: e.to_string(),
        })?;
    let mut text = Vec::new();
    diff.print(git2::DiffFormat::Patch, |_, _, line| {
        match line.origin() {
            '+' | '-' | ' ' => text.push(line.origin() as u8),
            _ => {}
        }
        text.extend_from_slice(line.content());
        true
    })
    .map_err(|e| Error::Repo {
        repo: repo_path.display().to_string(),
        msg: e.to_string(),
    })?;
    Ok(String::from_utf8_lossy(&text).into_owned())
}

fn cmd_suggest(args: SuggestArgs, file: &ConfigFile) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let diff_text = if let Some(repo) = &args.repo {
        staged_diff_text(repo)?
    } else if let Some(path) = &args.diff_file {
        fs::read_to_string(path)
            .map_err(|e| Error::data(format!("diff file {}: {e}", path.display())))?
    } else {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::data(format!("reading stdin: {e}")))?;
        buf
    };
    if diff_text.trim().is_empty() {
        return Err(Error::data("empty diff: nothing to describe"));
    }
    let mods = modifications_from_diff(&diff_text)?;
    for skipped in &mods.skipped {
        let reason = match skipped.reason {
            SkipReason::Binary => "binary file",
            SkipReason::NoContent => "no content change",
            SkipReason::UnsupportedExtension => "unsupported file type",
        };
        eprintln!("skipping {}: {}", skipped.path, reason);
    }
    if mods.modifications.is_empty() {
        return Err(Error::data(
            "no supported code modifications in the diff (binary or unsupported files only)",
        ));
    }

    let (model_config, params, vocab) = load_model(&args.checkpoint, &args.vocab)?;
    let decode_flags = DecodeFlags {
        beams: args.beams,
        length_penalty: args.length_penalty,
    };
    let decode_config = decode_flags.resolve(&file.decode, model_config.max_target_len)?;
    // --beams alone also widens the printed list; --candidates overrides.
    let count = args
        .candidates
        .or(args.beams)
        .unwrap_or(1)
        .min(decode_config.beam_size);

    let entry = corpus::entry_from_modifications(&mods)
        .expect("checked non-empty modifications above");
    let candidates = generate_candidates(
        &params,
        &model_config,
        &entry,
        &vocab,
        mode,
        &decode_config,
        count,
    )?;
    if candidates.is_empty() {
        return Err(Error::data("beam search returned no candidates"));
    }
    if candidates[0].degenerate_input {
        eprintln!("warning: diff had no extractable changed lines");
    }
    if count == 1 {
        println!("{}", candidates[0].message);
    } else {
        for c in &candidates {
            println!("{:>10.4}\t{}", c.score, c.message);
        }
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, file: &ConfigFile) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let (model_config, params, vocab) = load_model(&args.checkpoint, &args.vocab)?;
    let decode_config = args.decode.resolve(&file.decode, model_config.max_target_len)?;
    let entries = read_corpus_checked(&args.corpus)?;
    let report = eval::evaluate(&params, &model_config, &entries, &vocab, mode, &decode_config)?;
    println!(
        "BLEU-4 {:.2}   PPL {:.2}   ({} examples)",
        report.bleu4, report.ppl, report.n_examples
    );
    for (lang, cell) in &report.per_language {
        println!(
            "  {:<12} BLEU-4 {:>6.2}  PPL {:>10.2}  ({} examples)",
            lang.to_string(),
            cell.bleu4,
            cell.ppl,
            cell.n_examples
        );
    }
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn split_for_ablation(entries: &[CorpusEntry], seed: u64) -> Result<corpus::Splits> {
    if entries.len() < 10 {
        return Err(Error::data(format!(
            "ablation needs at least 10 corpus entries for an 80-10-10 split, got {}",
            entries.len()
        )));
    }
    corpus::split(entries, &SplitSpec { seed, ..SplitSpec::default() })
}

fn cmd_ablate_input(args: AblateInputArgs, file: &ConfigFile, seed: u64) -> Result<()> {
    let entries = read_corpus_checked(&args.corpus)?;
    let vocab = load_vocab_checked(&args.vocab)?;
    let splits = split_for_ablation(&entries, seed)?;
    let model_config = args.model.resolve(&file.model, vocab.size())?;
    let train_config = args.train_flags.resolve(&file.train, seed)?;
    let decode_config = args.decode.resolve(&file.decode, model_config.max_target_len)?;
    let inputs = AblationInputs {
        train_entries: &splits.train,
        valid_entries: &splits.valid,
        test_entries: &splits.test,
        vocab: &vocab,
        model_config: &model_config,
        train_config: &train_config,
        decode_config: &decode_config,
    };
    let runs = eval::ablate_input_mode(&inputs)?;
    print!("{}", eval::format_input_ablation(&runs));
    if let Some(out) = &args.out {
        write_json(out, &runs)?;
    }
    Ok(())
}

fn parse_init_spec(spec: &str) -> Result<(String, Option<PathBuf>)> {
    if spec == "random" {
        return Ok(("random".to_string(), None));
    }
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => {
            Ok((label.to_string(), Some(PathBuf::from(path))))
        }
        _ => Err(Error::data(format!(
            "bad --init {spec:?}: expected \"random\" or \"label=checkpoint\""
        ))),
    }
}

fn cmd_ablate_init(args: AblateInitArgs, file: &ConfigFile, seed: u64) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let entries = read_corpus_checked(&args.corpus)?;
    let vocab = load_vocab_checked(&args.vocab)?;
    let splits = split_for_ablation(&entries, seed)?;
    let model_config = args.model.resolve(&file.model, vocab.size())?;
    let train_config = args.train_flags.resolve(&file.train, seed)?;
    let decode_config = args.decode.resolve(&file.decode, model_config.max_target_len)?;

    let specs: Vec<(String, Option<PathBuf>)> = if args.inits.is_empty() {
        vec![("random".to_string(), None)]
    } else {
        args.inits
            .iter()
            .map(|s| parse_init_spec(s))
            .collect::<Result<Vec<_>>>()?
    };

    let inputs = AblationInputs {
        train_entries: &splits.train,
        valid_entries: &splits.valid,
        test_entries: &splits.test,
        vocab: &vocab,
        model_config: &model_config,
        train_config: &train_config,
        decode_config: &decode_config,
    };
    let runs = eval::ablate_init_weight(&inputs, &specs, mode)?;
    print!("{}", eval::format_init_ablation(&runs));
    if let Some(out) = &args.out {
        write_json(out, &runs)?;
    }
    Ok(())
}
