//! Pipeline configuration (TOML).
//!
//! ```toml
//! [paths]
//! text = "corpus.txt"          # one document per line, optional <TAB>source tag
//! clean = "clean.tsv"          # text<TAB>audio path, audio relative to this file
//! output = "out"
//! phoneset = "phones.toml"
//! g2p = "g2p.toml"
//! questions = "questions.hed"  # optional; derived from phone categories otherwise
//! alignments = "align.txt"     # training data for the duration and acoustic models
//! lm_text = ["extra.txt"]      # optional extra LM training text
//!
//! [normalization]              # see NormalizationSpec
//! [lm]
//! order = 2
//! threshold = -5.12
//! [models]
//! rho = 0.0
//! pause_frames = 0
//! [stages]
//! synthetic = true
//! clean = true
//! ```
//!
//! Relative paths resolve against the config file's directory. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::cluster::TreeConfig;
use crate::lm::{LmConfig, LogBase};
use crate::models::DEFAULT_FRAME_PERIOD_MS;
use crate::splitter::DEFAULT_THRESHOLD;
use crate::textnorm::{NormalizationConfig, NormalizationSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathsSpec {
    text: Option<PathBuf>,
    clean: Option<PathBuf>,
    output: PathBuf,
    phoneset: PathBuf,
    g2p: PathBuf,
    questions: Option<PathBuf>,
    alignments: PathBuf,
    #[serde(default)]
    lm_text: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmSection {
    pub order: usize,
    pub frequency_floor: u64,
    pub log_base: LogBase,
    pub threshold: f64,
}

impl Default for LmSection {
    fn default() -> Self {
        let d = LmConfig::default();
        LmSection {
            order: d.order,
            frequency_floor: d.frequency_floor,
            log_base: d.log_base,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl LmSection {
    pub fn lm_config(&self) -> LmConfig {
        LmConfig {
            order: self.order,
            frequency_floor: self.frequency_floor,
            log_base: self.log_base,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub duration_tree: TreeConfig,
    pub acoustic_tree: TreeConfig,
    pub rho: f64,
    pub smoothing_window: usize,
    pub frame_period_ms: f64,
    /// Silence frames inserted between the segments of a split sentence.
    pub pause_frames: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            duration_tree: TreeConfig {
                min_occupancy: 3.0,
                min_gain: 0.0,
            },
            acoustic_tree: TreeConfig::default(),
            rho: 0.0,
            smoothing_window: 0,
            frame_period_ms: DEFAULT_FRAME_PERIOD_MS,
            pause_frames: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageSection {
    pub synthetic: bool,
    pub clean: bool,
    /// Recorded in the manifest header for the external trainer; not executed.
    pub finetune_epochs: u32,
}

impl Default for StageSection {
    fn default() -> Self {
        StageSection {
            synthetic: true,
            clean: true,
            finetune_epochs: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    paths: PathsSpec,
    #[serde(default)]
    normalization: NormalizationSpec,
    #[serde(default)]
    lm: LmSection,
    #[serde(default)]
    models: ModelSection,
    #[serde(default)]
    stages: StageSection,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub text: Option<PathBuf>,
    pub clean: Option<PathBuf>,
    pub output_root: PathBuf,
    pub phoneset: PathBuf,
    pub g2p: PathBuf,
    pub questions: Option<PathBuf>,
    pub alignments: PathBuf,
    pub lm_text: Vec<PathBuf>,
    pub normalization: NormalizationConfig,
    pub lm: LmSection,
    pub models: ModelSection,
    pub stages: StageSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|message| ConfigError::Invalid {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Parses and validates; relative paths are joined onto `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, String> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let normalization = file.normalization.into_config().map_err(|e| format!("[normalization] {e}"))?;
        if !normalization.strip_set.contains(&'|') {
            return Err("[normalization] strip set must contain '|', the manifest field separator".into());
        }
        if file.lm.order == 0 {
            return Err("[lm] order must be at least 1".into());
        }
        if !file.lm.threshold.is_finite() && file.lm.threshold != f64::NEG_INFINITY {
            return Err("[lm] threshold must be a number".into());
        }
        let m = &file.models;
        if m.frame_period_ms.is_nan() || m.frame_period_ms <= 0.0 {
            return Err("[models] frame_period_ms must be positive".into());
        }
        if !m.rho.is_finite() {
            return Err("[models] rho must be finite".into());
        }
        if !file.stages.synthetic && !file.stages.clean {
            return Err("[stages] at least one stage must be enabled".into());
        }
        let p = file.paths;
        if file.stages.synthetic && p.text.is_none() {
            return Err("[paths] text is required when the synthetic stage is enabled".into());
        }
        if file.stages.clean && p.clean.is_none() {
            return Err("[paths] clean is required when the clean stage is enabled".into());
        }
        let at = |q: PathBuf| if q.is_absolute() { q } else { base.join(q) };
        Ok(PipelineConfig {
            text: p.text.map(at),
            clean: p.clean.map(at),
            output_root: at(p.output),
            phoneset: at(p.phoneset),
            g2p: at(p.g2p),
            questions: p.questions.map(at),
            alignments: at(p.alignments),
            lm_text: p.lm_text.into_iter().map(at).collect(),
            normalization,
            lm: file.lm,
            models: file.models,
            stages: file.stages,
        })
    }
}
