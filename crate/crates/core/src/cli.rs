//! The `convaug` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Data goes to stdout or
//! the named output files, diagnostics to stderr. With `--config`, phone set,
//! rules, questions, normalization and LM settings default to the pipeline
//! config's values (flags win), and relative output paths land under the
//! configured output root.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cluster::{parse_alignments, AlignedUtterance, TreeConfig};
use crate::eval::errors::{count_errors, ErrorReport};
use crate::eval::ratings::{group_by_system, read_ratings, summarize_ratings, DmosField};
use crate::eval::significance::{paired, welch};
use crate::fsutil::write_atomic;
use crate::lm::{LmConfig, LogBase, NgramModel};
use crate::models::{load_json, save_json, AcousticModel, DurationModel, DEFAULT_FRAME_PERIOD_MS};
use crate::phone::{expand_contexts, g2p, g2p_words, parse_label_file, parse_question_file, write_label_file, G2PRules, PhoneSet, QuestionSet};
use crate::pipeline::{self, validate_manifest_file, PipelineConfig};
use crate::splitter::{plan_synthesis, split, sweep, DEFAULT_THRESHOLD};
use crate::textnorm::{
    corpus_stats, normalize_corpus, read_document_file, read_document_lines, NormalizationConfig, NormalizedSentence, RawDocument,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "convaug", version, about = "HMM-based data augmentation frontend for conversational TTS")]
pub struct Cli {
    /// Pipeline config whose settings act as defaults for every subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's output root.
    #[arg(long, global = true, requires = "config")]
    output_root: Option<PathBuf>,
    /// Worker threads for per-sentence work (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean, transliterate and sentence-split raw text.
    Normalize(NormalizeArgs),
    /// Kneser-Ney language models.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Split sentences at improbable bigrams: one segment per line, a blank
    /// line after each sentence (or JSON lines with `--format jsonl`).
    Split(SplitArgs),
    /// Convert words to phones.
    G2p(G2pArgs),
    /// Pentaphone labels for words or sentence files.
    Labels(LabelsArgs),
    /// Grow duration and acoustic trees from alignments and fit the models.
    Cluster(ClusterArgs),
    /// Predict phone durations for a label file.
    Duration(DurationArgs),
    /// Generate a feature trajectory for a label file.
    Synthesize(SynthesizeArgs),
    /// Run or check the augmentation pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Error counts and listening-test statistics.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    /// Raw text files.
    inputs: Vec<PathBuf>,
    /// Treat each input line as a document (`text[<TAB>source]`).
    #[arg(long)]
    lines: bool,
    /// Normalization TOML (strip, delimiters, lowercase, transliteration).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Source tag for documents without one.
    #[arg(long, default_value = "default")]
    source: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print corpus statistics as JSON to stderr.
    #[arg(long)]
    stats: bool,
}

#[derive(Subcommand, Debug)]
enum LmCommand {
    /// Train from sentence files (`[id<TAB>]tokens` per line).
    Train {
        #[arg(long = "text", required = true, num_args = 1..)]
        text: Vec<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        frequency_floor: Option<u64>,
        #[arg(long, value_enum)]
        log_base: Option<BaseArg>,
        /// `.arpa` for ARPA text, anything else for the native JSON model.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Normalized log-likelihood per sentence, or per bigram with `--bigrams`.
    Score {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        bigrams: bool,
        #[arg(long, value_enum)]
        log_base: Option<BaseArg>,
    },
    /// Write a model as ARPA.
    Export {
        #[arg(long)]
        lm: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Read an ARPA file into the native JSON model.
    Import {
        #[arg(long)]
        arpa: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BaseArg {
    Log10,
    Ln,
}

impl From<BaseArg> for LogBase {
    fn from(b: BaseArg) -> Self {
        match b {
            BaseArg::Log10 => LogBase::Log10,
            BaseArg::Ln => LogBase::Ln,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq)]
enum OutFormat {
    Text,
    Jsonl,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    lm: PathBuf,
    #[arg(long)]
    text: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutFormat,
    /// Report split statistics for these thresholds instead of splitting.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sweep: Option<Vec<f64>>,
    /// Pause frames recorded in the synthesis plan.
    #[arg(long, default_value_t = 0)]
    pause_frames: usize,
}

#[derive(Args, Debug)]
struct PhoneArgs {
    #[arg(long)]
    phoneset: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct G2pArgs {
    #[command(flatten)]
    phones: PhoneArgs,
    words: Vec<String>,
}

#[derive(Args, Debug)]
struct LabelsArgs {
    #[command(flatten)]
    phones: PhoneArgs,
    /// Sentence file; one label file per sentence is written to `--output-dir`.
    #[arg(long, requires = "output_dir")]
    text: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Words of a single utterance; labels go to stdout.
    words: Vec<String>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    alignments: Option<PathBuf>,
    #[arg(long)]
    phoneset: Option<PathBuf>,
    #[arg(long)]
    questions: Option<PathBuf>,
    #[arg(long)]
    min_occupancy: Option<f64>,
    #[arg(long)]
    min_gain: Option<f64>,
    #[arg(long)]
    frame_period_ms: Option<f64>,
    #[arg(short, long)]
    output_dir: PathBuf,
}

#[derive(Args, Debug)]
struct DurationArgs {
    /// Duration model JSON (from `cluster`).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    /// Directory holding duration.json and acoustic.json.
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long)]
    smoothing_window: Option<usize>,
    /// Output stem; writes `<stem>.f32` and `<stem>.shape`.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write a tab-separated dump to `<stem>.tsv`.
    #[arg(long)]
    dump: bool,
}

#[derive(Subcommand, Debug)]
enum PipelineCommand {
    /// Build the staged manifest end to end.
    Run,
    /// Validate a manifest file.
    Validate { manifest: PathBuf },
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// Skips, repetitions and mispronunciations per utterance (TSV).
    Errors {
        /// `id<TAB>tokens` per line.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        hypothesis: PathBuf,
        /// Print alignment traces as JSON lines to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Listening-test summaries per system.
    Mos {
        #[arg(long)]
        ratings: PathBuf,
        /// System id of the ground-truth recordings, enabling DMOS.
        #[arg(long)]
        ground_truth: Option<String>,
        #[arg(long, value_enum, default_value = "intelligibility")]
        dmos_field: DmosArg,
    },
    /// Two-sample t-test between two score files (whitespace-separated reals).
    Significance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        paired: bool,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DmosArg {
    Quality,
    Intelligibility,
}

struct Ctx {
    config: Option<PipelineConfig>,
    workers: Option<usize>,
}

impl Ctx {
    /// Resolves an output path; with a config, relative paths go under the
    /// output root and absolute paths must already lie inside it.
    fn output(&self, p: &Path) -> CliResult<PathBuf> {
        let Some(cfg) = &self.config else {
            return Ok(p.to_path_buf());
        };
        if p.is_relative() {
            return Ok(cfg.output_root.join(p));
        }
        if p.starts_with(&cfg.output_root) {
            Ok(p.to_path_buf())
        } else {
            Err(CliError::Usage(format!(
                "{} lies outside the configured output root {}",
                p.display(),
                cfg.output_root.display()
            )))
        }
    }

    fn pick(&self, flag: &Option<PathBuf>, from_cfg: impl Fn(&PipelineConfig) -> Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
        flag.clone()
            .or_else(|| self.config.as_ref().and_then(from_cfg))
            .ok_or_else(|| CliError::Usage(format!("--{name} is required (or give --config)")))
    }

    fn phoneset(&self, flag: &Option<PathBuf>) -> CliResult<PhoneSet> {
        let p = self.pick(flag, |c| Some(c.phoneset.clone()), "phoneset")?;
        PhoneSet::from_toml_str(&read_text(&p)?).map_err(|e| data(format!("{}: {e}", p.display())))
    }

    fn rules(&self, flag: &Option<PathBuf>) -> CliResult<G2PRules> {
        let p = self.pick(flag, |c| Some(c.g2p.clone()), "rules")?;
        G2PRules::from_toml_str(&read_text(&p)?).map_err(|e| data(format!("{}: {e}", p.display())))
    }

    fn questions(&self, flag: &Option<PathBuf>, phones: &PhoneSet) -> CliResult<QuestionSet> {
        let path = flag.clone().or_else(|| self.config.as_ref().and_then(|c| c.questions.clone()));
        let q = match path {
            Some(p) => parse_question_file(&read_text(&p)?).map_err(|e| data(format!("{}: {e}", p.display())))?,
            None => QuestionSet::from_categories(phones),
        };
        q.validate(phones).map_err(data)?;
        Ok(q)
    }

    fn normalization(&self) -> NormalizationConfig {
        self.config.as_ref().map(|c| c.normalization.clone()).unwrap_or_default()
    }
}

fn read_text(p: &Path) -> CliResult<String> {
    std::fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))
}

fn write_out(p: &Path, bytes: &[u8]) -> CliResult {
    write_atomic(p, bytes).map_err(|e| data(format!("{}: {e}", p.display())))
}

fn emit(ctx: &Ctx, output: &Option<PathBuf>, text: &str) -> CliResult {
    match output {
        Some(p) => write_out(&ctx.output(p)?, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(data),
    }
}

/// Sentence files hold `[id<TAB>]tokens` per line; ids default to
/// `<file stem>-<line number>`.
pub fn read_sentence_file(p: &Path) -> Result<Vec<NormalizedSentence>, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let (id, body) = match line.split_once('\t') {
                Some((id, body)) => (id.to_string(), body),
                None => (format!("{stem}-{}", i + 1), line),
            };
            let tokens: Vec<&str> = body.split_whitespace().collect();
            NormalizedSentence::from_tokens(&id, &tokens)
        })
        .collect())
}

fn sentences(p: &Path) -> CliResult<Vec<NormalizedSentence>> {
    read_sentence_file(p).map_err(CliError::Data)
}

fn load_lm(p: &Path) -> CliResult<NgramModel> {
    NgramModel::load(p).map_err(|e| data(format!("{}: {e}", p.display())))
}

fn normalize(ctx: &Ctx, a: NormalizeArgs) -> CliResult {
    let cfg = match &a.rules {
        Some(p) => NormalizationConfig::from_toml_str(&read_text(p)?).map_err(|e| data(format!("{}: {e}", p.display())))?,
        None => ctx.normalization(),
    };
    if a.inputs.is_empty() {
        return Err(CliError::Usage("normalize needs at least one input file".into()));
    }
    let mut docs: Vec<RawDocument> = Vec::new();
    for p in &a.inputs {
        if a.lines {
            let bytes = std::fs::read(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let (d, errors) = read_document_lines(&bytes, &stem, &a.source);
            for e in errors {
                eprintln!("document {}: {}", e.id, e.reason);
            }
            docs.extend(d);
        } else {
            match read_document_file(p, &a.source).map_err(|e| data(format!("{}: {e}", p.display())))? {
                Ok(d) => docs.push(d),
                Err(e) => eprintln!("document {}: {}", e.id, e.reason),
            }
        }
    }
    let corpus = normalize_corpus(&docs, &cfg);
    for e in &corpus.errors {
        eprintln!("document {:?}: {}", e.id, e.reason);
    }
    for d in &corpus.dropped {
        eprintln!("dropped {}: {}", d.id, d.reason);
    }
    if a.stats {
        eprintln!("{}", serde_json::to_string(&corpus_stats(&corpus.sentences)).map_err(data)?);
    }
    let mut out = String::new();
    for s in &corpus.sentences {
        out.push_str(&format!("{}\t{}\n", s.id, s.text()));
    }
    emit(ctx, &a.output, &out)
}

fn lm(ctx: &Ctx, cmd: LmCommand) -> CliResult {
    match cmd {
        LmCommand::Train {
            text,
            order,
            frequency_floor,
            log_base,
            output,
        } => {
            let base = ctx.config.as_ref().map(|c| c.lm.lm_config()).unwrap_or_default();
            let cfg = LmConfig {
                order: order.unwrap_or(base.order),
                frequency_floor: frequency_floor.unwrap_or(base.frequency_floor),
                log_base: log_base.map_or(base.log_base, Into::into),
            };
            let mut all = Vec::new();
            for p in &text {
                all.extend(sentences(p)?);
            }
            let model = NgramModel::train(&all, &cfg).map_err(data)?;
            let out = ctx.output(&output)?;
            let body = if out.extension().is_some_and(|e| e == "arpa") {
                model.to_arpa()
            } else {
                model.to_json()
            };
            write_out(&out, body.as_bytes())?;
            let d: Vec<String> = model.discounts().iter().map(|d| d.to_string()).collect();
            eprintln!("trained order-{} model, {} words, discounts {}", model.order(), model.vocab().len(), d.join(" "));
            Ok(())
        }
        LmCommand::Score {
            lm,
            text,
            bigrams,
            log_base,
        } => {
            let mut model = load_lm(&lm)?;
            if let Some(b) = log_base {
                model.set_log_base(b.into());
            }
            let mut out = String::new();
            for s in sentences(&text)? {
                if bigrams {
                    for b in model.score_bigrams(&s).map_err(data)? {
                        out.push_str(&format!("{}\t{}\t{}\t{}\n", s.id, b.left, b.right, b.log_likelihood));
                    }
                } else {
                    match model.normalized_log_likelihood(&s) {
                        Ok(v) => out.push_str(&format!("{}\t{v}\n", s.id)),
                        Err(e) => eprintln!("{}: {e}", s.id),
                    }
                }
            }
            emit(ctx, &None, &out)
        }
        LmCommand::Export { lm, output } => {
            let model = load_lm(&lm)?;
            write_out(&ctx.output(&output)?, model.to_arpa().as_bytes())
        }
        LmCommand::Import { arpa, output } => {
            let model = NgramModel::from_arpa(&read_text(&arpa)?).map_err(|e| data(format!("{}: {e}", arpa.display())))?;
            write_out(&ctx.output(&output)?, model.to_json().as_bytes())
        }
    }
}

fn split_cmd(ctx: &Ctx, a: SplitArgs) -> CliResult {
    let model = load_lm(&a.lm)?;
    let sents = sentences(&a.text)?;
    if let Some(thresholds) = &a.sweep {
        let rows = sweep(&model, &sents, thresholds).map_err(data)?;
        let mut out = String::new();
        for row in rows {
            if a.format == OutFormat::Jsonl {
                out.push_str(&serde_json::to_string(&row).map_err(data)?);
                out.push('\n');
            } else {
                let lengths: Vec<String> = row.segment_lengths.iter().map(|(l, n)| format!("{l}:{n}")).collect();
                out.push_str(&format!("{}\t{}\t{}\n", row.threshold, row.split_points, lengths.join(",")));
            }
        }
        return emit(ctx, &None, &out);
    }
    let threshold = a
        .threshold
        .or_else(|| ctx.config.as_ref().map(|c| c.lm.threshold))
        .unwrap_or(DEFAULT_THRESHOLD);
    let mut out = String::new();
    for s in &sents {
        let r = match split(&model, s, threshold) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}: {e}", s.id);
                continue;
            }
        };
        if a.format == OutFormat::Jsonl {
            let plan = plan_synthesis(&r, a.pause_frames);
            let v = serde_json::json!({"id": s.id, "split": r, "plan": plan});
            out.push_str(&v.to_string());
            out.push('\n');
        } else {
            for seg in &r.segments {
                out.push_str(&seg.join(" "));
                out.push('\n');
            }
            out.push('\n');
        }
    }
    emit(ctx, &None, &out)
}

fn g2p_cmd(ctx: &Ctx, a: G2pArgs) -> CliResult {
    let rules = ctx.rules(&a.phones.rules)?;
    if a.phones.phoneset.is_some() || ctx.config.is_some() {
        rules.validate(&ctx.phoneset(&a.phones.phoneset)?).map_err(data)?;
    }
    if a.words.is_empty() {
        return Err(CliError::Usage("g2p needs at least one word".into()));
    }
    let mut out = String::new();
    let mut failed = None;
    for w in &a.words {
        match g2p(w, &rules) {
            Ok(p) => out.push_str(&format!("{w}\t{}\n", p.join(" "))),
            Err(e) => {
                eprintln!("{e}");
                failed = Some(e);
            }
        }
    }
    emit(ctx, &None, &out)?;
    failed.map_or(Ok(()), |e| Err(data(e)))
}

fn labels_cmd(ctx: &Ctx, a: LabelsArgs) -> CliResult {
    let phones = ctx.phoneset(&a.phones.phoneset)?;
    let rules = ctx.rules(&a.phones.rules)?;
    rules.validate(&phones).map_err(data)?;
    let make = |tokens: &[String]| -> Result<String, String> {
        let p = g2p_words(tokens, &rules).map_err(|e| e.to_string())?;
        let labels = expand_contexts(&p, &phones).map_err(|e| e.to_string())?;
        Ok(write_label_file(&labels))
    };
    if let (Some(text), Some(dir)) = (&a.text, &a.output_dir) {
        let dir = ctx.output(dir)?;
        let mut failures = 0;
        for s in sentences(text)? {
            match make(&s.tokens) {
                Ok(body) => write_out(&dir.join(format!("{}.lab", s.id)), body.as_bytes())?,
                Err(e) => {
                    failures += 1;
                    eprintln!("{}: {e}", s.id);
                }
            }
        }
        return if failures > 0 {
            Err(CliError::Data(format!("{failures} sentences could not be labelled")))
        } else {
            Ok(())
        };
    }
    if a.words.is_empty() {
        return Err(CliError::Usage("labels needs words or --text with --output-dir".into()));
    }
    emit(ctx, &None, &make(&a.words).map_err(CliError::Data)?)
}

fn load_alignments(p: &Path) -> CliResult<Vec<AlignedUtterance>> {
    Ok(parse_alignments(&read_text(p)?)
        .map_err(|e| data(format!("{}: {e}", p.display())))?
        .into_iter()
        .map(|(_, u)| u)
        .collect())
}

fn cluster_cmd(ctx: &Ctx, a: ClusterArgs) -> CliResult {
    let phones = ctx.phoneset(&a.phoneset)?;
    let questions = ctx.questions(&a.questions, &phones)?;
    let align = ctx.pick(&a.alignments, |c| Some(c.alignments.clone()), "alignments")?;
    let utts = load_alignments(&align)?;
    let m = ctx.config.as_ref().map(|c| c.models).unwrap_or_default();
    let adjust = |t: TreeConfig| TreeConfig {
        min_occupancy: a.min_occupancy.unwrap_or(t.min_occupancy),
        min_gain: a.min_gain.unwrap_or(t.min_gain),
    };
    let period = a.frame_period_ms.unwrap_or(if ctx.config.is_some() { m.frame_period_ms } else { DEFAULT_FRAME_PERIOD_MS });
    let models = pipeline::train_models(
        &utts,
        &questions,
        &adjust(m.duration_tree),
        &adjust(m.acoustic_tree),
        m.rho,
        period,
    )
    .map_err(data)?;
    let dir = ctx.output(&a.output_dir)?;
    save_json(&models.duration, &dir.join("duration.json")).map_err(data)?;
    save_json(&models.acoustic, &dir.join("acoustic.json")).map_err(data)?;
    write_out(&dir.join("duration.tree"), models.duration.tree.to_text().as_bytes())?;
    write_out(&dir.join("acoustic.tree"), models.acoustic.tree.to_text().as_bytes())?;
    eprintln!(
        "duration tree: {} leaves; acoustic tree: {} leaves",
        models.duration.tree.leaf_count(),
        models.acoustic.tree.leaf_count()
    );
    Ok(())
}

fn read_labels(p: &Path) -> CliResult<Vec<crate::phone::FullContextLabel>> {
    parse_label_file(&read_text(p)?).map_err(|e| data(format!("{}: {e}", p.display())))
}

fn duration_cmd(ctx: &Ctx, a: DurationArgs) -> CliResult {
    let mut model: DurationModel = load_json(&a.model).map_err(data)?;
    if let Some(r) = a.rho {
        model.rho = r;
    }
    let labels = read_labels(&a.labels)?;
    let out: String = model
        .predict_durations(&labels)
        .iter()
        .zip(&labels)
        .map(|(d, l)| format!("{l}\t{d}\n"))
        .collect();
    emit(ctx, &None, &out)
}

fn synthesize_cmd(ctx: &Ctx, a: SynthesizeArgs) -> CliResult {
    let mut duration: DurationModel = load_json(&a.models.join("duration.json")).map_err(data)?;
    let acoustic: AcousticModel = load_json(&a.models.join("acoustic.json")).map_err(data)?;
    if let Some(r) = a.rho {
        duration.rho = r;
    }
    let window = a
        .smoothing_window
        .or_else(|| ctx.config.as_ref().map(|c| c.models.smoothing_window))
        .unwrap_or(0);
    let labels = read_labels(&a.labels)?;
    let durations = duration.predict_durations(&labels);
    let traj = acoustic.generate_trajectory(&labels, &durations, window).map_err(data)?;
    let stem = ctx.output(&a.output)?;
    let feat = traj.write(&stem).map_err(data)?;
    if a.dump {
        write_out(&stem.with_extension("tsv"), traj.debug_dump().as_bytes())?;
    }
    eprintln!("{}: {} frames", feat.display(), traj.len());
    Ok(())
}

fn pipeline_cmd(ctx: &Ctx, cmd: PipelineCommand) -> CliResult {
    match cmd {
        PipelineCommand::Run => {
            let cfg = ctx
                .config
                .as_ref()
                .ok_or_else(|| CliError::Usage("pipeline run needs --config".into()))?;
            let summary = pipeline::run(cfg, ctx.workers).map_err(data)?;
            for s in &summary.skipped {
                eprintln!("skipped {}: {}", s.id, s.reason);
            }
            for s in &summary.clean_errors {
                eprintln!("clean record {}: {}", s.id, s.reason);
            }
            eprintln!(
                "{} sentences: {} records, {} skipped; {} clean records; manifest {}",
                summary.sentences,
                summary.synthetic_records,
                summary.skipped.len(),
                summary.clean_records,
                cfg.output_root.join(&summary.manifest).display()
            );
            if summary.validation.is_clean() {
                Ok(())
            } else {
                for f in &summary.validation.findings {
                    eprintln!("finding: {f}");
                }
                Err(CliError::Data("manifest failed validation".into()))
            }
        }
        PipelineCommand::Validate { manifest } => {
            let report = validate_manifest_file(&manifest).map_err(data)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(data)?);
            if report.is_clean() {
                Ok(())
            } else {
                Err(CliError::Data(format!("{} findings", report.findings.len())))
            }
        }
    }
}

fn read_numbers(p: &Path) -> CliResult<Vec<f64>> {
    read_text(p)?
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| data(format!("{}: not a number: {t:?}", p.display()))))
        .collect()
}

fn eval_cmd(ctx: &Ctx, cmd: EvalCommand) -> CliResult {
    match cmd {
        EvalCommand::Errors {
            reference,
            hypothesis,
            trace,
        } => {
            let refs = sentences(&reference)?;
            let hyps = sentences(&hypothesis)?;
            let by_id: std::collections::HashMap<&str, &NormalizedSentence> = hyps.iter().map(|h| (h.id.as_str(), h)).collect();
            let mut report = ErrorReport::default();
            for (i, r) in refs.iter().enumerate() {
                let h = by_id.get(r.id.as_str()).copied().or_else(|| hyps.get(i));
                let Some(h) = h else {
                    return Err(CliError::Data(format!("no hypothesis for {}", r.id)));
                };
                let u = count_errors(&r.id, &r.tokens, &h.tokens);
                if trace {
                    eprintln!("{}", serde_json::json!({"id": u.id, "trace": u.trace}));
                }
                report.push(u);
            }
            emit(ctx, &None, &report.to_tsv())
        }
        EvalCommand::Mos {
            ratings,
            ground_truth,
            dmos_field,
        } => {
            let file = std::fs::File::open(&ratings).map_err(|e| data(format!("{}: {e}", ratings.display())))?;
            let sets = group_by_system(read_ratings(file).map_err(data)?);
            let gt = match &ground_truth {
                Some(name) => Some(
                    sets.iter()
                        .find(|s| &s.system == name)
                        .ok_or_else(|| CliError::Data(format!("no ratings for ground-truth system {name:?}")))?,
                ),
                None => None,
            };
            let field = match dmos_field {
                DmosArg::Quality => DmosField::Quality,
                DmosArg::Intelligibility => DmosField::Intelligibility,
            };
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            let mut out = String::from("system\tratings\tmos\tintelligibility\tcomprehension\tdmos\trow\n");
            for set in &sets {
                let s = summarize_ratings(set, gt, field).map_err(data)?;
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    s.system,
                    s.ratings,
                    fmt(s.mos),
                    fmt(s.intelligibility),
                    s.comprehension.map_or("-".to_string(), |x| format!("{x:.2}")),
                    fmt(s.dmos),
                    s.table_row()
                ));
            }
            emit(ctx, &None, &out)
        }
        EvalCommand::Significance { a, b, paired: is_paired } => {
            let (xa, xb) = (read_numbers(&a)?, read_numbers(&b)?);
            let r = if is_paired { paired(&xa, &xb) } else { welch(&xa, &xb) }.map_err(data)?;
            emit(ctx, &None, &format!("t\t{}\ndf\t{}\np\t{}\n", r.t, r.df, r.p_value))
        }
    }
}

fn execute(cli: Cli) -> CliResult {
    let mut config = match &cli.config {
        Some(p) => Some(PipelineConfig::load(p).map_err(|e| CliError::Usage(e.to_string()))?),
        None => None,
    };
    if let (Some(cfg), Some(root)) = (config.as_mut(), &cli.output_root) {
        cfg.output_root = root.clone();
    }
    if cli.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let ctx = Ctx {
        config,
        workers: cli.workers,
    };
    match cli.command {
        Command::Normalize(a) => normalize(&ctx, a),
        Command::Lm(c) => lm(&ctx, c),
        Command::Split(a) => split_cmd(&ctx, a),
        Command::G2p(a) => g2p_cmd(&ctx, a),
        Command::Labels(a) => labels_cmd(&ctx, a),
        Command::Cluster(a) => cluster_cmd(&ctx, a),
        Command::Duration(a) => duration_cmd(&ctx, a),
        Command::Synthesize(a) => synthesize_cmd(&ctx, a),
        Command::Pipeline(c) => pipeline_cmd(&ctx, c),
        Command::Eval(c) => eval_cmd(&ctx, c),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let (CliError::Usage(m) | CliError::Data(m)) = &e;
            eprintln!("error: {m}");
            e.code()
        }
    }
}
