//! Duration and acoustic models over tied states, and feature trajectories.
//!
//! Durations come from per-leaf Gaussians over frame counts:
//! `frames = max(1, round(mean + rho * std))`, so every phone occupies at least
//! one frame. Acoustic generation repeats the leaf mean for the predicted number
//! of frames, with an optional linear cross-fade around phone boundaries. There
//! is no dynamic-feature parameter generation, so output is as flat as the
//! averaged leaf parameters.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterTree, ContextStats, Pool};
use crate::fsutil::write_atomic;
use crate::phone::{FullContextLabel, Pentaphone};

pub const DEFAULT_FRAME_PERIOD_MS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("leaf {0} received no training data")]
    EmptyLeaf(usize),
    #[error("{labels} labels but {durations} durations")]
    LengthMismatch { labels: usize, durations: usize },
    #[error("phone {0} has a zero duration")]
    ZeroDuration(usize),
    #[error("statistics have dimension {found}, tree expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("sidecar {path}: {message}")]
    Sidecar { path: PathBuf, message: String },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationParams {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub tree: ClusterTree,
    /// Indexed by leaf id.
    pub params: Vec<DurationParams>,
    /// Rate control: shifts every prediction by `rho` standard deviations.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticModel {
    pub tree: ClusterTree,
    pub params: Vec<Gaussian>,
    pub dim: usize,
    pub frame_period_ms: f64,
}

/// Pools the training statistics reaching each leaf of `tree`.
fn pool_by_leaf(stats: &BTreeMap<Pentaphone, ContextStats>, tree: &ClusterTree) -> Result<Vec<Pool>, ModelError> {
    let dim = tree.dim();
    let mut pools = vec![Pool::new(dim); tree.leaf_count()];
    for s in stats.values().filter(|s| s.occupancy > 0.0) {
        if s.dim() != dim {
            return Err(ModelError::Dimension {
                expected: dim,
                found: s.dim(),
            });
        }
        pools[tree.route(&s.context)].merge(&Pool {
            occupancy: s.occupancy,
            sum: s.sum.clone(),
            sum_sq: s.sum_sq.clone(),
        });
    }
    if let Some(empty) = pools.iter().position(|p| p.occupancy <= 0.0) {
        return Err(ModelError::EmptyLeaf(empty));
    }
    Ok(pools)
}

/// `stats` must be duration statistics (one sample per phone occurrence).
pub fn train_duration_model(stats: &BTreeMap<Pentaphone, ContextStats>, tree: ClusterTree) -> Result<DurationModel, ModelError> {
    let pools = pool_by_leaf(stats, &tree)?;
    let params = pools
        .iter()
        .map(|p| DurationParams {
            mean: p.mean()[0],
            std: p.raw_variance()[0].sqrt(),
        })
        .collect();
    Ok(DurationModel { tree, params, rho: 0.0 })
}

pub fn train_acoustic_model(
    stats: &BTreeMap<Pentaphone, ContextStats>,
    tree: ClusterTree,
    frame_period_ms: f64,
) -> Result<AcousticModel, ModelError> {
    let pools = pool_by_leaf(stats, &tree)?;
    let params = pools
        .iter()
        .map(|p| Gaussian {
            mean: p.mean(),
            variance: p.variance(),
        })
        .collect();
    Ok(AcousticModel {
        dim: tree.dim(),
        tree,
        params,
        frame_period_ms,
    })
}

pub fn duration_frames(params: DurationParams, rho: f64) -> usize {
    let f = (params.mean + rho * params.std).round();
    if f >= 1.0 {
        f as usize
    } else {
        1
    }
}

impl DurationModel {
    pub fn params_for(&self, context: &Pentaphone) -> DurationParams {
        self.params[self.tree.route(context)]
    }

    pub fn predict_durations(&self, labels: &[FullContextLabel]) -> Vec<usize> {
        labels
            .iter()
            .map(|l| duration_frames(self.params_for(&l.context), self.rho))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrajectory {
    pub frames: Vec<Vec<f64>>,
    pub dim: usize,
    pub frame_period_ms: f64,
    /// Frame range of each phone (or pause), contiguous and covering all frames.
    pub spans: Vec<Range<usize>>,
}

impl FeatureTrajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Concatenates trajectories in order, shifting their spans.
    pub fn concat(parts: Vec<FeatureTrajectory>, dim: usize, frame_period_ms: f64) -> Self {
        let mut out = FeatureTrajectory {
            frames: Vec::new(),
            dim,
            frame_period_ms,
            spans: Vec::new(),
        };
        for p in parts {
            let offset = out.frames.len();
            out.spans.extend(p.spans.iter().map(|s| s.start + offset..s.end + offset));
            out.frames.extend(p.frames);
        }
        out
    }

    pub fn sidecar_line(&self) -> String {
        format!("frames={} dim={} frame_period_ms={}\n", self.frames.len(), self.dim, self.frame_period_ms)
    }

    /// float32 little-endian, frame-major.
    pub fn to_f32_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.frames.len() * self.dim * 4);
        for f in &self.frames {
            for x in f {
                out.extend_from_slice(&(*x as f32).to_le_bytes());
            }
        }
        out
    }

    /// Tab-separated debug dump: phone index, then feature values.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (p, span) in self.spans.iter().enumerate() {
            for f in &self.frames[span.clone()] {
                out.push_str(&p.to_string());
                for x in f {
                    out.push('\t');
                    out.push_str(&x.to_string());
                }
                out.push('\n');
            }
        }
        out
    }

    /// Writes `<stem>.f32` and its `<stem>.shape` sidecar; returns the feature path.
    pub fn write(&self, stem: &Path) -> Result<PathBuf, ModelError> {
        let feat = stem.with_extension("f32");
        write_atomic(&feat, &self.to_f32_bytes())?;
        write_atomic(&sidecar_path(&feat), self.sidecar_line().as_bytes())?;
        Ok(feat)
    }
}

pub fn sidecar_path(feature_path: &Path) -> PathBuf {
    feature_path.with_extension("shape")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sidecar {
    pub frames: usize,
    pub dim: usize,
    pub frame_period_ms: f64,
}

pub fn parse_sidecar(text: &str) -> Option<Sidecar> {
    let mut frames = None;
    let mut dim = None;
    let mut period = None;
    for field in text.split_whitespace() {
        match field.split_once('=')? {
            ("frames", v) => frames = v.parse().ok(),
            ("dim", v) => dim = v.parse().ok(),
            ("frame_period_ms", v) => period = v.parse().ok(),
            _ => return None,
        }
    }
    Some(Sidecar {
        frames: frames?,
        dim: dim?,
        frame_period_ms: period?,
    })
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, ModelError> {
    let text = std::fs::read_to_string(path)?;
    parse_sidecar(&text).ok_or_else(|| ModelError::Sidecar {
        path: path.to_path_buf(),
        message: format!("malformed sidecar {:?}", text.trim()),
    })
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

impl AcousticModel {
    pub fn mean_for(&self, context: &Pentaphone) -> &[f64] {
        &self.params[self.tree.route(context)].mean
    }

    /// Leaf means repeated per duration. With `smoothing_window > 0`, the
    /// frames within `w` of each phone boundary are cross-faded linearly
    /// between the two means, where `w` is the window clamped to half of
    /// each neighbouring phone.
    pub fn generate_trajectory(
        &self,
        labels: &[FullContextLabel],
        durations: &[usize],
        smoothing_window: usize,
    ) -> Result<FeatureTrajectory, ModelError> {
        if labels.len() != durations.len() {
            return Err(ModelError::LengthMismatch {
                labels: labels.len(),
                durations: durations.len(),
            });
        }
        if let Some(i) = durations.iter().position(|d| *d == 0) {
            return Err(ModelError::ZeroDuration(i));
        }
        let means: Vec<&[f64]> = labels.iter().map(|l| self.mean_for(&l.context)).collect();
        let mut frames = Vec::with_capacity(durations.iter().sum());
        let mut spans = Vec::with_capacity(labels.len());
        for (m, d) in means.iter().zip(durations) {
            let start = frames.len();
            frames.extend(std::iter::repeat_n(m.to_vec(), *d));
            spans.push(start..frames.len());
        }
        if smoothing_window > 0 {
            for i in 1..spans.len() {
                let w = smoothing_window.min(durations[i - 1] / 2).min(durations[i] / 2);
                if w == 0 {
                    continue;
                }
                let boundary = spans[i].start;
                for k in 0..2 * w {
                    let t = (k as f64 + 0.5) / (2 * w) as f64;
                    frames[boundary - w + k] = lerp(means[i - 1], means[i], t);
                }
            }
        }
        Ok(FeatureTrajectory {
            frames,
            dim: self.dim,
            frame_period_ms: self.frame_period_ms,
            spans,
        })
    }

    /// `frames` frames of the all-silence context, used between split segments.
    pub fn pause(&self, silence: &str, frames: usize) -> FeatureTrajectory {
        let sil = Pentaphone::new(silence, silence, silence, silence, silence);
        let mean = self.mean_for(&sil).to_vec();
        FeatureTrajectory {
            frames: vec![mean; frames],
            dim: self.dim,
            frame_period_ms: self.frame_period_ms,
            spans: if frames > 0 { vec![0..frames] } else { vec![] },
        }
    }
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ModelError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ModelError::Format(e.to_string()))?;
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ModelError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| ModelError::Format(format!("{}: {e}", path.display())))
}
