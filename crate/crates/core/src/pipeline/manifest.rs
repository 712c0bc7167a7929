//! Staged corpus manifests.
//!
//! A manifest is a text file with a schema header and one pipe-separated
//! record per line:
//!
//! ```text
//! # convaug-manifest v1
//! # id|stage|source|text|label_path|feature_path
//! doc-1-0|synthetic-pretrain|news|ka ma|labels/doc-1-0.lab|features/doc-1-0.f32
//! ```
//!
//! Additional `# key=value` header lines carry metadata for the external
//! trainer. Relative paths are relative to the manifest's directory.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::models::{parse_sidecar, sidecar_path};

pub const SCHEMA_VERSION: u32 = 1;
pub const COLUMNS: &str = "id|stage|source|text|label_path|feature_path";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    SyntheticPretrain,
    CleanFinetune,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::SyntheticPretrain => "synthetic-pretrain",
            Stage::CleanFinetune => "clean-finetune",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synthetic-pretrain" => Ok(Stage::SyntheticPretrain),
            "clean-finetune" => Ok(Stage::CleanFinetune),
            other => Err(format!("unknown stage tag {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestRecord {
    pub id: String,
    pub stage: Stage,
    pub source: String,
    pub text: String,
    pub label_path: PathBuf,
    pub feature_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub metadata: BTreeMap<String, String>,
    pub records: Vec<ManifestRecord>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifestError {
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {id:?}: field {field} contains a separator or line break")]
    Unencodable { id: String, field: &'static str },
}

fn encodable(s: &str) -> bool {
    !s.contains(['|', '\n', '\r'])
}

impl CorpusManifest {
    pub fn new(records: Vec<ManifestRecord>) -> Self {
        CorpusManifest {
            schema_version: SCHEMA_VERSION,
            metadata: BTreeMap::new(),
            records,
        }
    }

    /// Records of `self` followed by those of `other`; metadata is merged.
    pub fn concat(mut self, other: CorpusManifest) -> Self {
        self.metadata.extend(other.metadata);
        self.records.extend(other.records);
        self
    }

    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }

    pub fn to_text(&self) -> Result<String, ManifestError> {
        let mut out = format!("# convaug-manifest v{}\n# {COLUMNS}\n", self.schema_version);
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        for r in &self.records {
            let label = r.label_path.to_string_lossy();
            let feature = r.feature_path.to_string_lossy();
            for (field, value) in [
                ("id", r.id.as_str()),
                ("source", r.source.as_str()),
                ("text", r.text.as_str()),
                ("label_path", label.as_ref()),
                ("feature_path", feature.as_ref()),
            ] {
                if !encodable(value) {
                    return Err(ManifestError::Unencodable { id: r.id.clone(), field });
                }
            }
            out.push_str(&format!("{}|{}|{}|{}|{}|{}\n", r.id, r.stage, r.source, r.text, label, feature));
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let (manifest, bad) = parse_lenient(text)?;
        match bad.into_iter().next() {
            Some((line, message)) => Err(ManifestError::Parse { line, message }),
            None => Ok(manifest),
        }
    }
}

/// Parses everything except stage tags strictly; rows with unknown stage
/// tags are returned separately as `(line, message)`.
fn parse_lenient(text: &str) -> Result<(CorpusManifest, Vec<(usize, String)>), ManifestError> {
    let err = |line: usize, message: String| ManifestError::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| err(1, "empty manifest".into()))?;
    let version = first
        .strip_prefix("# convaug-manifest v")
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| err(1, format!("expected '# convaug-manifest v<N>', found {first:?}")))?;
    if version != SCHEMA_VERSION {
        return Err(err(1, format!("unsupported schema version {version}")));
    }
    let mut manifest = CorpusManifest::new(Vec::new());
    let mut bad = Vec::new();
    for (n, line) in lines {
        if let Some(h) = line.strip_prefix("# ") {
            if h == COLUMNS {
                continue;
            }
            let (k, v) = h.split_once('=').ok_or_else(|| err(n, format!("malformed header line {line:?}")))?;
            manifest.metadata.insert(k.to_string(), v.to_string());
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 6 {
            return Err(err(n, format!("expected 6 fields, found {}", fields.len())));
        }
        let stage = match fields[1].parse::<Stage>() {
            Ok(s) => s,
            Err(m) => {
                bad.push((n, format!("record {:?}: {m}", fields[0])));
                continue;
            }
        };
        manifest.records.push(ManifestRecord {
            id: fields[0].to_string(),
            stage,
            source: fields[2].to_string(),
            text: fields[3].to_string(),
            label_path: PathBuf::from(fields[4]),
            feature_path: PathBuf::from(fields[5]),
        });
    }
    Ok((manifest, bad))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateId { id: String, first_row: usize, second_row: usize },
    MissingPath { id: String, row: usize, path: PathBuf },
    FrameCountMismatch { id: String, row: usize, sidecar_frames: usize, binary_frames: f64 },
    BadSidecar { id: String, row: usize, path: PathBuf, message: String },
    BadStage { line: usize, message: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateId { id, first_row, second_row } => {
                write!(f, "id {id:?} appears in rows {first_row} and {second_row}")
            }
            Finding::MissingPath { id, row, path } => write!(f, "row {row} ({id}): missing {}", path.display()),
            Finding::FrameCountMismatch {
                id,
                row,
                sidecar_frames,
                binary_frames,
            } => write!(f, "row {row} ({id}): sidecar says {sidecar_frames} frames, binary holds {binary_frames}"),
            Finding::BadSidecar { id, row, path, message } => {
                write!(f, "row {row} ({id}): sidecar {}: {message}", path.display())
            }
            Finding::BadStage { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Checks id uniqueness, path existence and, for `.f32` feature files, that the
/// sidecar frame count matches the binary length. Rows are numbered from 1 in
/// record order.
pub fn validate_manifest(manifest: &CorpusManifest, base: &Path) -> ValidationReport {
    let mut findings = Vec::new();
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (i, r) in manifest.records.iter().enumerate() {
        let row = i + 1;
        if let Some(first) = first_seen.get(r.id.as_str()) {
            findings.push(Finding::DuplicateId {
                id: r.id.clone(),
                first_row: *first,
                second_row: row,
            });
        } else {
            first_seen.insert(&r.id, row);
        }
        for p in [&r.label_path, &r.feature_path] {
            if !resolve(base, p).exists() {
                findings.push(Finding::MissingPath {
                    id: r.id.clone(),
                    row,
                    path: p.clone(),
                });
            }
        }
        let feature = resolve(base, &r.feature_path);
        if feature.extension().is_some_and(|e| e == "f32") && feature.exists() {
            let shape = sidecar_path(&feature);
            let bad = |message: String| Finding::BadSidecar {
                id: r.id.clone(),
                row,
                path: shape.clone(),
                message,
            };
            let sidecar = match std::fs::read_to_string(&shape) {
                Ok(text) => parse_sidecar(&text).ok_or_else(|| bad(format!("malformed {:?}", text.trim()))),
                Err(e) => Err(bad(e.to_string())),
            };
            match sidecar {
                Err(f) => findings.push(f),
                Ok(sc) => {
                    let bytes = std::fs::metadata(&feature).map(|m| m.len()).unwrap_or(0);
                    let binary_frames = if sc.dim == 0 { 0.0 } else { bytes as f64 / (4 * sc.dim) as f64 };
                    if binary_frames != sc.frames as f64 {
                        findings.push(Finding::FrameCountMismatch {
                            id: r.id.clone(),
                            row,
                            sidecar_frames: sc.frames,
                            binary_frames,
                        });
                    }
                }
            }
        }
    }
    ValidationReport {
        records: manifest.records.len(),
        findings,
    }
}

/// Validates a manifest file, reporting unknown stage tags as findings rather
/// than parse errors.
pub fn validate_manifest_file(path: &Path) -> Result<ValidationReport, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    let (manifest, bad) = parse_lenient(&text)?;
    let mut report = validate_manifest(&manifest, path.parent().unwrap_or(Path::new(".")));
    report.records += bad.len();
    report
        .findings
        .extend(bad.into_iter().map(|(line, message)| Finding::BadStage { line, message }));
    Ok(report)
}
