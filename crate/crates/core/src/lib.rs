//! Data-augmentation frontend for conversational speech synthesis.
//!
//! The crate covers the text and statistical-parametric side of an augmentation
//! recipe where a small HMM-style synthesizer generates `<text, features>` pairs for
//! a large multi-domain text corpus, which an external end-to-end model is then
//! pretrained on before fine-tuning on clean studio data.
//!
//! * [`textnorm`]: cleaning, transliteration hooks and sentence splitting.
//! * [`lm`]: interpolated Kneser-Ney n-gram models, ARPA import/export.
//! * [`splitter`]: log-likelihood threshold splitting of ill-formed sentences.
//! * [`phone`]: rule-based G2P, pentaphone labels, question sets.
//! * [`cluster`]: decision-tree state tying.
//! * [`models`]: duration and acoustic models, feature trajectories.
//! * [`pipeline`]: staged corpus manifests.
//! * [`eval`]: synthesis error counting and listening-test statistics.
//! * [`cli`]: the `convaug` command line.

pub mod cli;
pub mod cluster;
pub mod eval;
pub mod fsutil;
pub mod lm;
pub mod models;
pub mod phone;
pub mod pipeline;
pub mod splitter;
pub mod textnorm;

pub use cluster::{ClusterTree, ContextStats};
pub use lm::{NgramModel, ScoredBigram};
pub use phone::{FullContextLabel, G2PRules, PhoneSet, Pentaphone, QuestionSet};
pub use pipeline::manifest::CorpusManifest;
pub use splitter::SplitResult;
pub use textnorm::{NormalizationConfig, NormalizedSentence, RawDocument};
