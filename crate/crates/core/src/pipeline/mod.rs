//! The augmentation recipe at the data level.
//!
//! Stage A pairs every normalized sentence of a multi-domain text corpus with
//! a synthesized feature trajectory (split with the LM, converted to phones,
//! expanded to pentaphones, timed by the duration model and rendered by the
//! acoustic model). Stage B lists the clean studio recordings used for
//! fine-tuning. Both end up in one manifest that an external trainer filters
//! by stage tag. Per-sentence failures are skipped and reported; only
//! configuration and model errors abort a run.

pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cluster::{accumulate_stats, duration_stats, parse_alignments, AlignedUtterance, ClusterError, ClusterTree, TreeConfig};
use crate::fsutil::write_atomic;
use crate::lm::{LmError, NgramModel};
use crate::models::{
    save_json, train_acoustic_model, train_duration_model, AcousticModel, DurationModel, FeatureTrajectory, ModelError,
};
use crate::phone::{
    expand_contexts, g2p_words, parse_question_file, write_label_file, FullContextLabel, G2PRules, Pentaphone,
    PhoneSet, QuestionSet,
};
use crate::splitter::{split, SplitResult};
use crate::textnorm::{normalize_corpus, read_document_lines, NormalizationConfig, NormalizedSentence};

pub use config::PipelineConfig;
pub use manifest::{validate_manifest, validate_manifest_file, CorpusManifest, Finding, ManifestRecord, Stage, ValidationReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Manifest(#[from] manifest::ManifestError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Everything needed to turn a sentence into a trajectory.
#[derive(Debug, Clone)]
pub struct Voice {
    pub phoneset: PhoneSet,
    pub g2p: G2PRules,
    pub lm: NgramModel,
    pub duration: DurationModel,
    pub acoustic: AcousticModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisSettings {
    pub threshold: f64,
    pub pause_frames: usize,
    pub smoothing_window: usize,
}

/// One synthesized sentence. Segments of a split sentence are separated by a
/// pause, which appears in `labels` as an all-silence context so that labels
/// and trajectory spans correspond one to one.
#[derive(Debug, Clone)]
pub struct SynthesizedSentence {
    pub split: SplitResult,
    pub labels: Vec<FullContextLabel>,
    pub durations: Vec<usize>,
    pub trajectory: FeatureTrajectory,
}

pub fn synthesize_sentence(
    voice: &Voice,
    settings: &SynthesisSettings,
    sentence: &NormalizedSentence,
) -> Result<SynthesizedSentence, String> {
    let result = split(&voice.lm, sentence, settings.threshold).map_err(|e| e.to_string())?;
    let sil = voice.phoneset.silence.as_str();
    let dim = voice.acoustic.dim;
    let period = voice.acoustic.frame_period_ms;
    let mut labels = Vec::new();
    let mut durations = Vec::new();
    let mut parts = Vec::new();
    for (k, segment) in result.segments.iter().enumerate() {
        if k > 0 && settings.pause_frames > 0 {
            labels.push(FullContextLabel {
                position: 0,
                context: Pentaphone::new(sil, sil, sil, sil, sil),
            });
            durations.push(settings.pause_frames);
            parts.push(voice.acoustic.pause(sil, settings.pause_frames));
        }
        let phones = g2p_words(segment, &voice.g2p).map_err(|e| e.to_string())?;
        let seg_labels = expand_contexts(&phones, &voice.phoneset).map_err(|e| e.to_string())?;
        let seg_durations = voice.duration.predict_durations(&seg_labels);
        parts.push(
            voice
                .acoustic
                .generate_trajectory(&seg_labels, &seg_durations, settings.smoothing_window)
                .map_err(|e| e.to_string())?,
        );
        labels.extend(seg_labels);
        durations.extend(seg_durations);
    }
    for (i, l) in labels.iter_mut().enumerate() {
        l.position = i;
    }
    Ok(SynthesizedSentence {
        split: result,
        labels,
        durations,
        trajectory: FeatureTrajectory::concat(parts, dim, period),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub manifest: CorpusManifest,
    pub skips: Vec<SkipRecord>,
    pub split_sentences: usize,
    pub frames: usize,
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

fn manifest_safe(s: &str) -> bool {
    !s.contains(['|', '\n', '\r'])
}

/// Stage A. Writes `labels/<id>.lab` and `features/<id>.f32` (with sidecar)
/// under `out_dir`; manifest paths are relative to `out_dir`. Sentences are
/// processed in parallel and collected in input order.
pub fn build_synthetic_corpus(
    sentences: &[NormalizedSentence],
    voice: &Voice,
    settings: &SynthesisSettings,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<SyntheticCorpus, PipelineError> {
    enum Outcome {
        Record(ManifestRecord, bool, usize),
        Skip(SkipRecord),
    }
    let work = |s: &NormalizedSentence| -> Result<Outcome, PipelineError> {
        if !manifest_safe(&s.id) || !manifest_safe(&s.source_tag) || !manifest_safe(&s.text()) {
            return Ok(Outcome::Skip(SkipRecord {
                id: s.id.clone(),
                reason: "id, source tag or text contains the manifest separator".into(),
            }));
        }
        let synth = match synthesize_sentence(voice, settings, s) {
            Ok(x) => x,
            Err(reason) => {
                log::warn!("skipping {}: {reason}", s.id);
                return Ok(Outcome::Skip(SkipRecord { id: s.id.clone(), reason }));
            }
        };
        let label_rel = PathBuf::from("labels").join(format!("{}.lab", s.id));
        let label_abs = out_dir.join(&label_rel);
        write_atomic(&label_abs, write_label_file(&synth.labels).as_bytes()).map_err(io_err(&label_abs))?;
        let stem_rel = PathBuf::from("features").join(&s.id);
        synth.trajectory.write(&out_dir.join(&stem_rel))?;
        Ok(Outcome::Record(
            ManifestRecord {
                id: s.id.clone(),
                stage: Stage::SyntheticPretrain,
                source: s.source_tag.clone(),
                text: s.text(),
                label_path: label_rel,
                feature_path: stem_rel.with_extension("f32"),
            },
            synth.split.segments.len() > 1,
            synth.trajectory.len(),
        ))
    };
    let outcomes: Vec<Result<Outcome, PipelineError>> = pool(workers)?.install(|| sentences.par_iter().map(work).collect());
    let mut out = SyntheticCorpus {
        manifest: CorpusManifest::new(Vec::new()),
        skips: Vec::new(),
        split_sentences: 0,
        frames: 0,
    };
    for o in outcomes {
        match o? {
            Outcome::Record(r, was_split, frames) => {
                out.split_sentences += usize::from(was_split);
                out.frames += frames;
                out.manifest.records.push(r);
            }
            Outcome::Skip(s) => out.skips.push(s),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanPair {
    pub id: String,
    pub text: String,
    pub audio: PathBuf,
}

/// `text<TAB>audio path` per line; audio paths are relative to `base`. Ids
/// are `clean-<line number>`.
pub fn parse_clean_pairs(text: &str, base: &Path) -> Result<Vec<CleanPair>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let (t, audio) = line
                .rsplit_once('\t')
                .ok_or_else(|| format!("line {}: expected text<TAB>audio path", i + 1))?;
            Ok(CleanPair {
                id: format!("clean-{}", i + 1),
                text: t.to_string(),
                audio: base.join(audio.trim()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanCorpus {
    pub manifest: CorpusManifest,
    pub errors: Vec<SkipRecord>,
}

/// Stage B. Texts are normalized with `norm`; their labels are written to
/// `labels/<id>.lab` under `out_dir`. The audio paths are recorded as absolute
/// paths. Missing audio and unconvertible text become per-record errors.
pub fn stage_clean_corpus(
    pairs: &[CleanPair],
    phoneset: &PhoneSet,
    g2p: &G2PRules,
    norm: &NormalizationConfig,
    out_dir: &Path,
) -> Result<CleanCorpus, PipelineError> {
    let mut out = CleanCorpus {
        manifest: CorpusManifest::new(Vec::new()),
        errors: Vec::new(),
    };
    for pair in pairs {
        let fail = |reason: String| SkipRecord {
            id: pair.id.clone(),
            reason,
        };
        let audio = match pair.audio.canonicalize() {
            Ok(p) if p.is_file() => p,
            _ => {
                out.errors.push(fail(format!("missing audio file {}", pair.audio.display())));
                continue;
            }
        };
        let tokens: Vec<String> = norm.sentences_of(&pair.text).concat();
        if tokens.is_empty() {
            out.errors.push(fail("no tokens left after normalization".into()));
            continue;
        }
        let labels = match g2p_words(&tokens, g2p).and_then(|p| expand_contexts(&p, phoneset)) {
            Ok(l) => l,
            Err(e) => {
                out.errors.push(fail(e.to_string()));
                continue;
            }
        };
        if !manifest_safe(&audio.to_string_lossy()) {
            out.errors.push(fail("audio path contains the manifest separator".into()));
            continue;
        }
        let label_rel = PathBuf::from("labels").join(format!("{}.lab", pair.id));
        let label_abs = out_dir.join(&label_rel);
        write_atomic(&label_abs, write_label_file(&labels).as_bytes()).map_err(io_err(&label_abs))?;
        out.manifest.records.push(ManifestRecord {
            id: pair.id.clone(),
            stage: Stage::CleanFinetune,
            source: "clean".into(),
            text: tokens.join(" "),
            label_path: label_rel,
            feature_path: audio,
        });
    }
    Ok(out)
}

/// Loads the phone inventory, rules and question set named by the config.
pub fn load_phonetics(cfg: &PipelineConfig) -> Result<(PhoneSet, G2PRules, QuestionSet), PipelineError> {
    let phoneset = PhoneSet::from_toml_str(&read(&cfg.phoneset)?).map_err(|e| input_err(&cfg.phoneset, e))?;
    let g2p = G2PRules::from_toml_str(&read(&cfg.g2p)?).map_err(|e| input_err(&cfg.g2p, e))?;
    g2p.validate(&phoneset).map_err(|e| input_err(&cfg.g2p, e))?;
    let questions = match &cfg.questions {
        Some(p) => {
            let q = parse_question_file(&read(p)?).map_err(|e| input_err(p, e))?;
            q.validate(&phoneset).map_err(|e| input_err(p, e))?;
            q
        }
        None => QuestionSet::from_categories(&phoneset),
    };
    Ok((phoneset, g2p, questions))
}

pub struct TrainedModels {
    pub duration: DurationModel,
    pub acoustic: AcousticModel,
}

/// Grows separate duration and acoustic trees from aligned data and fits the
/// leaf parameters.
pub fn train_models(
    utts: &[AlignedUtterance],
    questions: &QuestionSet,
    duration_tree: &TreeConfig,
    acoustic_tree: &TreeConfig,
    rho: f64,
    frame_period_ms: f64,
) -> Result<TrainedModels, PipelineError> {
    let dstats = duration_stats(utts)?;
    let astats = accumulate_stats(utts)?;
    if dstats.is_empty() {
        return Err(ModelError::Format("alignments contain no frames".into()).into());
    }
    let mut duration = train_duration_model(&dstats, ClusterTree::grow(&dstats, questions, duration_tree))?;
    duration.rho = rho;
    let acoustic = train_acoustic_model(&astats, ClusterTree::grow(&astats, questions, acoustic_tree), frame_period_ms)?;
    Ok(TrainedModels { duration, acoustic })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub documents: usize,
    pub document_errors: Vec<SkipRecord>,
    pub dropped_documents: Vec<SkipRecord>,
    pub sentences: usize,
    pub synthetic_records: usize,
    pub skipped: Vec<SkipRecord>,
    pub split_sentences: usize,
    pub synthetic_frames: usize,
    pub clean_pairs: usize,
    pub clean_records: usize,
    pub clean_errors: Vec<SkipRecord>,
    pub duration_leaves: usize,
    pub acoustic_leaves: usize,
    pub manifest: String,
    pub validation: ValidationReport,
}

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUMMARY_FILE: &str = "summary.json";

fn read_documents(path: &Path, prefix: &str) -> Result<(Vec<crate::textnorm::RawDocument>, Vec<SkipRecord>), PipelineError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let (docs, errors) = read_document_lines(&bytes, prefix, "default");
    Ok((
        docs,
        errors
            .into_iter()
            .map(|e| SkipRecord {
                id: e.id,
                reason: e.reason,
            })
            .collect(),
    ))
}

/// Runs the whole recipe and writes everything under the output root:
/// `models/`, `lm.arpa`, `labels/`, `features/`, the manifest and a JSON
/// summary. Output is byte-identical for any worker count.
pub fn run(cfg: &PipelineConfig, workers: Option<usize>) -> Result<RunSummary, PipelineError> {
    let out = &cfg.output_root;
    let (phoneset, g2p, questions) = load_phonetics(cfg)?;
    let utts: Vec<AlignedUtterance> = parse_alignments(&read(&cfg.alignments)?)?.into_iter().map(|(_, u)| u).collect();
    let m = &cfg.models;
    let models = train_models(&utts, &questions, &m.duration_tree, &m.acoustic_tree, m.rho, m.frame_period_ms)?;
    save_json(&models.duration, &out.join("models/duration.json"))?;
    save_json(&models.acoustic, &out.join("models/acoustic.json"))?;
    for (name, tree) in [("duration", &models.duration.tree), ("acoustic", &models.acoustic.tree)] {
        let p = out.join(format!("models/{name}.tree"));
        write_atomic(&p, tree.to_text().as_bytes()).map_err(io_err(&p))?;
    }

    let mut summary = RunSummary {
        documents: 0,
        document_errors: Vec::new(),
        dropped_documents: Vec::new(),
        sentences: 0,
        synthetic_records: 0,
        skipped: Vec::new(),
        split_sentences: 0,
        synthetic_frames: 0,
        clean_pairs: 0,
        clean_records: 0,
        clean_errors: Vec::new(),
        duration_leaves: models.duration.tree.leaf_count(),
        acoustic_leaves: models.acoustic.tree.leaf_count(),
        manifest: MANIFEST_FILE.into(),
        validation: ValidationReport::default(),
    };

    let mut sentences = Vec::new();
    if let Some(text) = &cfg.text {
        let (docs, errors) = read_documents(text, "text")?;
        summary.documents = docs.len() + errors.len();
        summary.document_errors = errors;
        let corpus = normalize_corpus(&docs, &cfg.normalization);
        summary.document_errors.extend(corpus.errors.into_iter().map(|e| SkipRecord {
            id: e.id,
            reason: e.reason,
        }));
        summary.dropped_documents = corpus
            .dropped
            .into_iter()
            .map(|d| SkipRecord {
                id: d.id,
                reason: d.reason,
            })
            .collect();
        sentences = corpus.sentences;
    }
    summary.sentences = sentences.len();

    let mut lm_sentences = sentences.clone();
    for (k, p) in cfg.lm_text.iter().enumerate() {
        let (docs, _) = read_documents(p, &format!("lm{k}"))?;
        lm_sentences.extend(normalize_corpus(&docs, &cfg.normalization).sentences);
    }
    let mut manifest = CorpusManifest::new(Vec::new());
    manifest
        .metadata
        .insert("finetune_epochs".into(), cfg.stages.finetune_epochs.to_string());
    manifest
        .metadata
        .insert("frame_period_ms".into(), m.frame_period_ms.to_string());

    let lm = if lm_sentences.iter().any(|s| !s.tokens.is_empty()) {
        let lm = NgramModel::train(&lm_sentences, &cfg.lm.lm_config())?;
        let p = out.join("lm.arpa");
        write_atomic(&p, lm.to_arpa().as_bytes()).map_err(io_err(&p))?;
        Some(lm)
    } else {
        None
    };

    let settings = SynthesisSettings {
        threshold: cfg.lm.threshold,
        pause_frames: m.pause_frames,
        smoothing_window: m.smoothing_window,
    };

    if cfg.stages.synthetic {
        if let Some(lm) = lm {
            let voice = Voice {
                phoneset: phoneset.clone(),
                g2p: g2p.clone(),
                lm,
                duration: models.duration.clone(),
                acoustic: models.acoustic.clone(),
            };
            let synthetic = build_synthetic_corpus(&sentences, &voice, &settings, out, workers)?;
            summary.synthetic_records = synthetic.manifest.records.len();
            summary.skipped = synthetic.skips;
            summary.split_sentences = synthetic.split_sentences;
            summary.synthetic_frames = synthetic.frames;
            manifest = manifest.concat(synthetic.manifest);
        }
    }
    if cfg.stages.clean {
        if let Some(clean_path) = &cfg.clean {
            let base = clean_path.parent().unwrap_or(Path::new("."));
            let pairs = parse_clean_pairs(&read(clean_path)?, base).map_err(|e| input_err(clean_path, e))?;
            summary.clean_pairs = pairs.len();
            let clean = stage_clean_corpus(&pairs, &phoneset, &g2p, &cfg.normalization, out)?;
            summary.clean_records = clean.manifest.records.len();
            summary.clean_errors = clean.errors;
            manifest = manifest.concat(clean.manifest);
        }
    }

    let manifest_path = out.join(MANIFEST_FILE);
    write_atomic(&manifest_path, manifest.to_text()?.as_bytes()).map_err(io_err(&manifest_path))?;
    summary.validation = validate_manifest_file(&manifest_path)?;
    let summary_path = out.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_atomic(&summary_path, json.as_bytes()).map_err(io_err(&summary_path))?;
    Ok(summary)
}
