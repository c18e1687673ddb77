//! Command-line front end. `main.rs` only parses arguments and maps errors
//! to exit codes; everything else lives here so tests can drive it.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, MaskedCorpus};
use crate::corpus_io::{self, CaptionRecord, Format, MaskedWriter};
use crate::freq::{self, FrequencyTable, Threshold};
use crate::maskers::{MaskedOutput, Masker, MaskingConfig, Strategy};
use crate::parallel::{WorkerPool, DEFAULT_CHUNK};
use crate::postag::{self, PosLexicon, PosTag};
use crate::tokenizer;

/// Invalid flag combination; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "textmask", version, about = "Caption masking strategies and corpus analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count word frequencies of a corpus into a table file.
    Freq(FreqArgs),
    /// Mask every caption of a corpus with one strategy.
    Mask(MaskArgs),
    /// Show every strategy on one caption plus per-word masking probabilities.
    Demo(DemoArgs),
    /// Corpus reports (CSV + text table).
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Top-N word counts before and after each strategy.
    Dist(DistArgs),
    /// NN/JJ/VB/OTHER shares before and after each strategy.
    Pos(PosArgs),
    /// Image + text tokens processed per sample.
    Budget(BudgetArgs),
    /// Caption count and length mean/std.
    Stats(StatsArgs),
    /// Fraction of available keep-slots each strategy fills.
    Slots(SlotsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Corpus file (`.gz` is decompressed transparently).
    #[arg(short, long)]
    pub input: PathBuf,

    /// Corpus layout; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,

    /// Captions are `word/TAG word/TAG ...` lines from an external tagger.
    #[arg(long)]
    pub pretagged: bool,

    /// `<word>\t<TAG>` lexicon for the built-in tagger (default: small built-in list).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,

    /// Worker threads; output does not depend on this.
    #[arg(long, env = "TEXTMASK_THREADS")]
    pub threads: Option<usize>,
}

impl InputArgs {
    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| Format::infer(&self.input))
    }

    fn threads(&self) -> usize {
        resolve_threads(self.threads)
    }
}

fn resolve_threads(threads: Option<usize>) -> usize {
    threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Args)]
pub struct MaskParams {
    /// Words kept per caption.
    #[arg(short, long = "k", env = "TEXTMASK_K", default_value_t = 8)]
    pub k: usize,

    /// Frequency threshold t in P(w) = 1 - sqrt(t / f(w)).
    #[arg(short, long = "t", env = "TEXTMASK_T", default_value_t = freq::DEFAULT_THRESHOLD)]
    pub t: f64,

    #[arg(long, env = "TEXTMASK_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Mixed into per-record seeds so stochastic strategies resample each epoch.
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,

    /// Frequency table written by `textmask freq`.
    #[arg(long = "freq-table")]
    pub freq_table: Option<PathBuf>,
}

impl MaskParams {
    fn threshold(&self) -> Result<Threshold<f64>> {
        Threshold::new(self.t).map_err(|e| usage(e.to_string()))
    }

    fn config(&self, strategy: Strategy) -> Result<MaskingConfig<f64>> {
        Ok(MaskingConfig::new(strategy, self.k)
            .map_err(|e| usage(e.to_string()))?
            .with_threshold(self.threshold()?)
            .with_seed(self.seed)
            .with_epoch(self.epoch))
    }
}

#[derive(Debug, Clone, Args)]
pub struct FreqArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: MaskParams,

    #[arg(short, long, env = "TEXTMASK_STRATEGY")]
    pub strategy: Strategy,

    #[arg(short, long)]
    pub output: PathBuf,

    /// Output layout; defaults to the input layout.
    #[arg(long)]
    pub output_format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Caption text (or `word/TAG` pairs with --pretagged).
    pub caption: String,

    #[command(flatten)]
    pub params: MaskParams,

    #[arg(long)]
    pub pretagged: bool,

    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyList {
    /// Comma-separated strategies (default: all six).
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<Strategy>,
}

impl StrategyList {
    fn resolve(&self) -> Vec<Strategy> {
        if self.strategies.is_empty() {
            return Strategy::ALL.to_vec();
        }
        let mut seen = HashSet::new();
        self.strategies
            .iter()
            .copied()
            .filter(|s| seen.insert(*s))
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: MaskParams,
    #[command(flatten)]
    pub strategies: StrategyList,
    #[arg(long, default_value_t = analysis::DEFAULT_TOP_N)]
    pub top: usize,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PosArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: MaskParams,
    #[command(flatten)]
    pub strategies: StrategyList,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SlotsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: MaskParams,
    #[command(flatten)]
    pub strategies: StrategyList,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Fraction of image patches dropped.
    #[arg(long, env = "TEXTMASK_IMAGE_RATIO", default_value_t = analysis::DEFAULT_IMAGE_MASK_RATIO)]
    pub image_ratio: f64,

    /// Text keep-lengths, one budget row each.
    #[arg(short, long = "k", value_delimiter = ',', default_values_t = [32usize, 16, 8, 6, 4])]
    pub k: Vec<usize>,

    #[arg(long, default_value_t = analysis::DEFAULT_IMAGE_PATCHES)]
    pub patches: usize,

    #[arg(long, default_value_t = analysis::DEFAULT_TEXT_CONTEXT)]
    pub context: usize,

    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    match cli.command {
        Command::Freq(args) => cmd_freq(&args, out),
        Command::Mask(args) => cmd_mask(&args, out),
        Command::Demo(args) => cmd_demo(&args, out),
        Command::Analyze(report) => match report {
            AnalyzeCommand::Dist(args) => cmd_dist(&args, out),
            AnalyzeCommand::Pos(args) => cmd_pos(&args, out),
            AnalyzeCommand::Budget(args) => cmd_budget(&args, out),
            AnalyzeCommand::Stats(args) => cmd_stats(&args, out),
            AnalyzeCommand::Slots(args) => cmd_slots(&args, out),
        },
    }
}

/// Tokens and (when available or required) tags of one caption.
struct Prepared {
    tokens: Vec<String>,
    tags: Option<Vec<PosTag>>,
}

struct Preparer {
    pretagged: bool,
    lexicon: Option<PosLexicon>,
}

impl Preparer {
    /// `want_tags` loads a lexicon unless tags come with the corpus.
    fn new(pretagged: bool, lexicon: Option<&Path>, want_tags: bool) -> Result<Self> {
        let lexicon = if pretagged || !want_tags {
            None
        } else {
            Some(match lexicon {
                Some(path) => PosLexicon::load(path)?,
                None => PosLexicon::builtin(),
            })
        };
        Ok(Self { pretagged, lexicon })
    }

    fn prepare(&self, text: &str) -> crate::Result<Prepared> {
        if self.pretagged {
            let (tokens, tags) = postag::load_pretagged(text)?;
            return Ok(Prepared {
                tokens,
                tags: Some(tags),
            });
        }
        let tokens = tokenizer::tokenize_words(text);
        let tags = self.lexicon.as_ref().map(|lex| postag::tag(&tokens, lex));
        Ok(Prepared { tokens, tags })
    }
}

fn validate_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(())
}

fn record_context(rec: &CaptionRecord) -> String {
    format!("record {} (id {})", rec.index + 1, rec.display_id())
}

fn count_corpus(input: &InputArgs) -> Result<FrequencyTable> {
    let pool = WorkerPool::new(input.threads())?;
    let preparer = Preparer::new(input.pretagged, None, false)?;
    let reader = corpus_io::read_corpus(&input.input, input.format())?;
    let mut table = FrequencyTable::new();
    pool.stream(
        reader,
        DEFAULT_CHUNK,
        |rec| preparer.prepare(&rec.text),
        |_, prepared| {
            table.add_tokens(&prepared.tokens);
            Ok(())
        },
    )
    .with_context(|| format!("reading {}", input.input.display()))?;
    if table.total() == 0 {
        return Err(crate::Error::EmptyCorpus).with_context(|| input.input.display().to_string());
    }
    Ok(table)
}

fn cmd_freq<W: Write>(args: &FreqArgs, out: &mut W) -> Result<()> {
    validate_threads(args.input.threads())?;
    let table = count_corpus(&args.input)?;
    table.save(&args.output)?;
    writeln!(
        out,
        "wrote {} words ({} tokens) to {}",
        table.len(),
        table.total(),
        args.output.display()
    )?;
    Ok(())
}

fn needs_table_error(strategy: Strategy) -> anyhow::Error {
    usage(format!(
        "--strategy {strategy} requires --freq-table (build one with `textmask freq`)"
    ))
}

fn cmd_mask<W: Write>(args: &MaskArgs, out: &mut W) -> Result<()> {
    let strategy = args.strategy;
    let config = args.params.config(strategy)?;
    let threads = args.input.threads();
    validate_threads(threads)?;
    if strategy.needs_frequency_table() && args.params.freq_table.is_none() {
        return Err(needs_table_error(strategy));
    }

    let table = match &args.params.freq_table {
        Some(path) if strategy.needs_frequency_table() => Some(FrequencyTable::load(path)?),
        _ => None,
    };
    let masker = Masker::new(config, table.as_ref())?;
    let preparer = Preparer::new(
        args.input.pretagged,
        args.input.lexicon.as_deref(),
        strategy.needs_tags(),
    )?;
    let pool = WorkerPool::new(threads)?;
    let in_format = args.input.format();
    let out_format = args.output_format.unwrap_or(in_format);

    let reader = corpus_io::read_corpus(&args.input.input, in_format)?.map(|r| r.map_err(anyhow::Error::from));
    let mut writer = MaskedWriter::new(corpus_io::create_output(&args.output)?, out_format);
    let mut records = 0usize;
    let mut kept = 0usize;
    pool.stream(
        reader,
        DEFAULT_CHUNK,
        |rec: &CaptionRecord| -> Result<MaskedOutput> {
            let prepared = preparer
                .prepare(&rec.text)
                .with_context(|| record_context(rec))?;
            masker
                .mask(rec.index as u64, &prepared.tokens, prepared.tags.as_deref())
                .with_context(|| record_context(rec))
        },
        |rec, masked| {
            records += 1;
            kept += masked.len();
            writer
                .write_record(&rec, &masked.text())
                .with_context(|| args.output.display().to_string())
        },
    )?;
    writer.into_inner().finish()?;
    writeln!(
        out,
        "masked {records} records with {strategy} (k={}), kept {kept} tokens -> {}",
        args.params.k,
        args.output.display()
    )?;
    Ok(())
}

fn cmd_demo<W: Write>(args: &DemoArgs, out: &mut W) -> Result<()> {
    let threshold = args.params.threshold()?;
    // validates k before anything is printed
    args.params.config(Strategy::Truncation)?;
    let preparer = Preparer::new(args.pretagged, args.lexicon.as_deref(), true)?;
    let prepared = preparer.prepare(&args.caption)?;
    let tags = prepared.tags.expect("demo always tags");
    let tokens = prepared.tokens;

    let table = match &args.params.freq_table {
        Some(path) => FrequencyTable::load(path)?,
        None => {
            eprintln!("note: no --freq-table given; word frequencies are taken from the caption itself");
            freq::build_frequency_table(std::slice::from_ref(&tokens)).unwrap_or_default()
        }
    };

    let mut rows = vec![vec!["original".to_string(), args.caption.clone()]];
    for strategy in Strategy::ALL {
        let masker = Masker::new(args.params.config(strategy)?, Some(&table))?;
        let masked = masker.mask(0, &tokens, Some(&tags))?;
        rows.push(vec![strategy.to_string(), masked.text()]);
    }
    let header = vec!["strategy".to_string(), "text".to_string()];
    write!(out, "{}", analysis::render_table(&header, &rows))?;
    writeln!(out)?;

    let mut seen = HashSet::new();
    let mut prob_rows = Vec::new();
    for tok in tokens.iter().filter(|t| seen.insert(t.as_str())) {
        let p = freq::word_probability(tok, &table, threshold);
        prob_rows.push(vec![
            tok.clone(),
            format!("{:.6}", p.probability),
            if p.unknown_word { "unknown-word".into() } else { String::new() },
        ]);
    }
    let header = vec!["word".to_string(), "probability".to_string(), "note".to_string()];
    write!(out, "{}", analysis::render_table(&header, &prob_rows))?;
    Ok(())
}

/// Whole corpus in memory, for the analysis reports.
struct LoadedCorpus {
    tokens: Vec<Vec<String>>,
    tags: Vec<Option<Vec<PosTag>>>,
}

fn load_corpus(input: &InputArgs, want_tags: bool) -> Result<LoadedCorpus> {
    let pool = WorkerPool::new(input.threads())?;
    let preparer = Preparer::new(input.pretagged, input.lexicon.as_deref(), want_tags)?;
    let reader = corpus_io::read_corpus(&input.input, input.format())?.map(|r| r.map_err(anyhow::Error::from));
    let mut corpus = LoadedCorpus {
        tokens: Vec::new(),
        tags: Vec::new(),
    };
    pool.stream(
        reader,
        DEFAULT_CHUNK,
        |rec: &CaptionRecord| {
            preparer
                .prepare(&rec.text)
                .with_context(|| record_context(rec))
        },
        |_, prepared| {
            corpus.tokens.push(prepared.tokens);
            corpus.tags.push(prepared.tags);
            Ok(())
        },
    )
    .with_context(|| format!("reading {}", input.input.display()))?;
    Ok(corpus)
}

fn analysis_table(params: &MaskParams, corpus: &LoadedCorpus, strategies: &[Strategy]) -> Result<Option<FrequencyTable>> {
    if !strategies.iter().any(|s| s.needs_frequency_table()) {
        return Ok(None);
    }
    Ok(Some(match &params.freq_table {
        Some(path) => FrequencyTable::load(path)?,
        None => freq::build_frequency_table_parallel(&corpus.tokens)?,
    }))
}

fn mask_all(
    pool: &WorkerPool,
    params: &MaskParams,
    corpus: &LoadedCorpus,
    strategies: &[Strategy],
    table: Option<&FrequencyTable>,
) -> Result<Vec<MaskedCorpus>> {
    let indexed: Vec<usize> = (0..corpus.tokens.len()).collect();
    strategies
        .iter()
        .map(|&strategy| {
            let masker = Masker::new(params.config(strategy)?, table)?;
            let outputs = pool
                .map(&indexed, |&i| {
                    masker.mask(i as u64, &corpus.tokens[i], corpus.tags[i].as_deref())
                })
                .into_iter()
                .collect::<crate::Result<Vec<_>>>()?;
            Ok(MaskedCorpus { strategy, outputs })
        })
        .collect()
}

fn write_csv_file(path: &Path, write: impl FnOnce(&mut corpus_io::OutputFile) -> crate::Result<()>) -> Result<()> {
    let mut file = corpus_io::create_output(path)?;
    write(&mut file)?;
    file.finish()?;
    Ok(())
}

fn prepare_analysis(
    input: &InputArgs,
    params: &MaskParams,
    strategies: &StrategyList,
    need_tags: bool,
) -> Result<(WorkerPool, LoadedCorpus, Vec<MaskedCorpus>)> {
    let strategies = strategies.resolve();
    params.config(Strategy::Truncation)?;
    validate_threads(input.threads())?;
    let want_tags = need_tags || strategies.contains(&Strategy::Syntax);
    let corpus = load_corpus(input, want_tags)?;
    let table = analysis_table(params, &corpus, &strategies)?;
    let pool = WorkerPool::new(input.threads())?;
    let masked = mask_all(&pool, params, &corpus, &strategies, table.as_ref())?;
    Ok((pool, corpus, masked))
}

fn cmd_dist<W: Write>(args: &DistArgs, out: &mut W) -> Result<()> {
    if args.top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    let (_, corpus, masked) = prepare_analysis(&args.input, &args.params, &args.strategies, false)?;
    let report = analysis::distribution_report(&corpus.tokens, &masked, args.top)?;
    write!(out, "{}", report.render())?;
    if let Some(path) = &args.csv {
        write_csv_file(path, |f| report.write_csv(f))?;
    }
    Ok(())
}

fn cmd_pos<W: Write>(args: &PosArgs, out: &mut W) -> Result<()> {
    let (_, corpus, masked) = prepare_analysis(&args.input, &args.params, &args.strategies, true)?;
    let tags: Vec<Vec<PosTag>> = corpus
        .tags
        .into_iter()
        .map(|t| t.expect("tags requested"))
        .collect();
    let report = analysis::pos_share_report(&tags, &masked)?;
    write!(out, "{}", report.render())?;
    if let Some(path) = &args.csv {
        write_csv_file(path, |f| report.write_csv(f))?;
    }
    Ok(())
}

fn cmd_slots<W: Write>(args: &SlotsArgs, out: &mut W) -> Result<()> {
    let (_, corpus, masked) = prepare_analysis(&args.input, &args.params, &args.strategies, false)?;
    let lengths: Vec<usize> = corpus.tokens.iter().map(Vec::len).collect();
    let header = vec!["strategy".to_string(), "slot_utilization".to_string()];
    let mut rows = Vec::new();
    for m in &masked {
        let u: f64 = analysis::slot_utilization(&lengths, &m.outputs, args.params.k)?;
        rows.push(vec![m.strategy.to_string(), format!("{u:.6}")]);
    }
    write!(out, "{}", analysis::render_table(&header, &rows))?;
    if let Some(path) = &args.csv {
        write_csv_file(path, |f| analysis::write_csv(f, &header, &rows))?;
    }
    Ok(())
}

fn cmd_stats<W: Write>(args: &StatsArgs, out: &mut W) -> Result<()> {
    validate_threads(args.input.threads())?;
    let pool = WorkerPool::new(args.input.threads())?;
    let preparer = Preparer::new(args.input.pretagged, None, false)?;
    let reader = corpus_io::read_corpus(&args.input.input, args.input.format())?;
    let mut moments = analysis::LengthMoments::<f64>::new();
    pool.stream(
        reader,
        DEFAULT_CHUNK,
        |rec| preparer.prepare(&rec.text).map(|p| p.tokens.len()),
        |_, len| {
            moments.push(len);
            Ok(())
        },
    )
    .with_context(|| format!("reading {}", args.input.input.display()))?;
    let stats = moments
        .finish()
        .with_context(|| args.input.input.display().to_string())?;
    write!(out, "{}", stats.render())?;
    if let Some(path) = &args.csv {
        write_csv_file(path, |f| stats.write_csv(f))?;
    }
    Ok(())
}

fn cmd_budget<W: Write>(args: &BudgetArgs, out: &mut W) -> Result<()> {
    let budgets = args
        .k
        .iter()
        .map(|&k| analysis::token_budget(args.image_ratio, k, args.patches, args.context))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| usage(e.to_string()))?;
    write!(out, "{}", analysis::render_budgets(&budgets))?;
    if let Some(path) = &args.csv {
        write_csv_file(path, |f| analysis::write_budgets(f, &budgets))?;
    }
    Ok(())
}
