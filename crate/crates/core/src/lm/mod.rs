//! Interpolated Kneser-Ney n-gram language models.
//!
//! Training follows the classic interpolated formulation with one absolute
//! discount per order, estimated from count-of-counts as `n1 / (n1 + 2 n2)`.
//! The highest order uses raw counts; lower orders use continuation counts
//! (number of distinct left extensions), except for n-grams that begin with the
//! sentence-start marker, which cannot be extended and keep their raw counts.
//! The unigram level is interpolated with a uniform distribution over the
//! predictable vocabulary so unseen words keep non-zero mass.
//!
//! A trained model is stored in backoff form: every observed n-gram carries its
//! interpolated log10 probability, every observed history its interpolation
//! weight. Backoff evaluation over those tables reproduces the interpolated
//! probabilities exactly and is also how imported ARPA files are scored.

pub mod arpa;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textnorm::NormalizedSentence;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// log10 used for the never-predicted start marker and for unknown words when
/// a model has no `<unk>` entry.
pub const LOG10_FLOOR: f64 = -99.0;

/// Discount used when count-of-counts cannot produce an estimate in (0, 1).
pub const FALLBACK_DISCOUNT: f64 = 0.5;

pub type WordId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmError {
    #[error("training corpus has no non-empty sentence")]
    EmptyCorpus,
    #[error("order must be at least 1")]
    InvalidOrder,
    #[error("order {order} exceeds the longest padded sentence ({max} symbols)")]
    OrderTooLarge { order: usize, max: usize },
    #[error("operation needs a model of order >= 2, got {0}")]
    OrderTooLow(usize),
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("ARPA line {line}: {message}")]
    Arpa { line: usize, message: String },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for LmError {
    fn from(e: std::io::Error) -> Self {
        LmError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Log10,
    Ln,
}

impl LogBase {
    fn scale(self, log10: f64) -> f64 {
        match self {
            LogBase::Log10 => log10,
            LogBase::Ln => log10 * std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmConfig {
    pub order: usize,
    /// Words seen fewer times than this are mapped to `<unk>`.
    pub frequency_floor: u64,
    pub log_base: LogBase,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: 2,
            frequency_floor: 1,
            log_base: LogBase::Log10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub log10_prob: f64,
    /// log10 interpolation weight when this n-gram is an observed history.
    pub log10_backoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredBigram {
    pub left: String,
    pub right: String,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    log_base: LogBase,
    vocab: Vec<String>,
    index: HashMap<String, WordId>,
    /// Raw counts per order (index 0 = unigrams); empty for imported models.
    counts: Vec<BTreeMap<Vec<WordId>, u64>>,
    discounts: Vec<f64>,
    /// Distinct left contexts per word.
    continuation_counts: BTreeMap<WordId, u64>,
    entries: Vec<BTreeMap<Vec<WordId>, Entry>>,
}

fn count_of_counts_discount(values: impl Iterator<Item = u64>, order: usize) -> f64 {
    let (mut n1, mut n2) = (0u64, 0u64);
    for v in values {
        match v {
            1 => n1 += 1,
            2 => n2 += 1,
            _ => {}
        }
    }
    if n1 > 0 && n2 > 0 {
        n1 as f64 / (n1 as f64 + 2.0 * n2 as f64)
    } else {
        log::warn!("order {order}: count-of-counts n1={n1}, n2={n2}; using discount {FALLBACK_DISCOUNT}");
        FALLBACK_DISCOUNT
    }
}

impl NgramModel {
    pub fn train(sentences: &[NormalizedSentence], cfg: &LmConfig) -> Result<Self, LmError> {
        let order = cfg.order;
        if order == 0 {
            return Err(LmError::InvalidOrder);
        }
        let longest = sentences.iter().map(|s| s.tokens.len()).max().unwrap_or(0);
        if longest == 0 {
            return Err(LmError::EmptyCorpus);
        }
        if order > longest + 2 {
            return Err(LmError::OrderTooLarge { order, max: longest + 2 });
        }

        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in sentences {
            for t in &s.tokens {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut words: Vec<String> = freq
            .iter()
            .filter(|(w, c)| **c >= cfg.frequency_floor && ![BOS, EOS, UNK].contains(*w))
            .map(|(w, _)| w.to_string())
            .collect();
        words.extend([BOS, EOS, UNK].map(String::from));
        words.sort();
        let index: HashMap<String, WordId> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as WordId)).collect();
        let (bos, eos, unk) = (index[BOS], index[EOS], index[UNK]);

        let mut counts: Vec<BTreeMap<Vec<WordId>, u64>> = vec![BTreeMap::new(); order];
        for s in sentences.iter().filter(|s| !s.tokens.is_empty()) {
            let mut padded = Vec::with_capacity(s.tokens.len() + 2);
            padded.push(bos);
            padded.extend(s.tokens.iter().map(|t| index.get(t).copied().unwrap_or(unk)));
            padded.push(eos);
            for k in 1..=order {
                for gram in padded.windows(k) {
                    *counts[k - 1].entry(gram.to_vec()).or_default() += 1;
                }
            }
        }

        // Adjusted counts: raw at the top order and for <s>-initial grams,
        // distinct left extensions otherwise.
        let mut adjusted: Vec<BTreeMap<Vec<WordId>, u64>> = vec![BTreeMap::new(); order];
        adjusted[order - 1] = counts[order - 1].clone();
        for k in (1..order).rev() {
            let mut adj: BTreeMap<Vec<WordId>, u64> = BTreeMap::new();
            for gram in counts[k].keys() {
                *adj.entry(gram[1..].to_vec()).or_default() += 1;
            }
            for (gram, c) in &counts[k - 1] {
                if gram[0] == bos {
                    adj.insert(gram.clone(), *c);
                }
            }
            adjusted[k - 1] = adj;
        }

        let mut continuation_counts = BTreeMap::new();
        if order >= 2 {
            for gram in counts[1].keys() {
                *continuation_counts.entry(gram[1]).or_default() += 1;
            }
        }

        let discounts: Vec<f64> = (0..order)
            .map(|k| {
                count_of_counts_discount(
                    adjusted[k].iter().filter(|(g, _)| !(k == 0 && g[0] == bos)).map(|(_, c)| *c),
                    k + 1,
                )
            })
            .collect();

        // Unigram level, interpolated with a uniform distribution over every
        // predictable symbol (all but <s>).
        let predictable = (words.len() - 1) as f64;
        let d1 = discounts[0];
        let (mut total1, mut types1) = (0u64, 0u64);
        for (g, c) in &adjusted[0] {
            if g[0] != bos && *c > 0 {
                total1 += c;
                types1 += 1;
            }
        }
        let total1 = total1 as f64;
        let uniform_mass = d1 * types1 as f64 / total1;
        let mut prob: Vec<HashMap<Vec<WordId>, f64>> = vec![HashMap::new(); order];
        for id in 0..words.len() as WordId {
            if id == bos {
                continue;
            }
            let a = adjusted[0].get(&vec![id]).copied().unwrap_or(0) as f64;
            let p = (a - d1).max(0.0) / total1 + uniform_mass / predictable;
            prob[0].insert(vec![id], p);
        }

        let mut backoff: Vec<HashMap<Vec<WordId>, f64>> = vec![HashMap::new(); order];
        for k in 2..=order {
            let d = discounts[k - 1];
            let mut hist: BTreeMap<&[WordId], (u64, u64)> = BTreeMap::new();
            for (g, c) in &adjusted[k - 1] {
                let e = hist.entry(&g[..k - 1]).or_default();
                e.0 += c;
                e.1 += 1;
            }
            for (h, (total, types)) in &hist {
                backoff[k - 2].insert(h.to_vec(), d * *types as f64 / *total as f64);
            }
            for (g, c) in &adjusted[k - 1] {
                let h = &g[..k - 1];
                let (total, _) = hist[h];
                let lower = Self::interp_prob(&prob, &backoff, &g[1..]);
                let p = (*c as f64 - d).max(0.0) / total as f64 + backoff[k - 2][h] * lower;
                prob[k - 1].insert(g.clone(), p);
            }
        }

        let mut entries: Vec<BTreeMap<Vec<WordId>, Entry>> = vec![BTreeMap::new(); order];
        for k in 0..order {
            for (g, p) in &prob[k] {
                entries[k].insert(
                    g.clone(),
                    Entry {
                        log10_prob: p.log10(),
                        log10_backoff: backoff[k].get(g).map(|b| b.log10()),
                    },
                );
            }
        }
        // <s> is never predicted but carries the backoff of its histories.
        entries[0].insert(
            vec![bos],
            Entry {
                log10_prob: LOG10_FLOOR,
                log10_backoff: backoff[0].get(&vec![bos]).map(|b| b.log10()),
            },
        );

        Ok(NgramModel {
            order,
            log_base: cfg.log_base,
            vocab: words,
            index,
            counts,
            discounts,
            continuation_counts,
            entries,
        })
    }

    /// Interpolated probability during training, with plain (not log) tables.
    fn interp_prob(prob: &[HashMap<Vec<WordId>, f64>], backoff: &[HashMap<Vec<WordId>, f64>], gram: &[WordId]) -> f64 {
        let k = gram.len();
        if let Some(p) = prob[k - 1].get(gram) {
            return *p;
        }
        let h = &gram[..k - 1];
        let w = backoff[k - 2].get(h).copied().unwrap_or(1.0);
        w * Self::interp_prob(prob, backoff, &gram[1..])
    }

    pub(crate) fn from_parts(order: usize, vocab: Vec<String>, entries: Vec<BTreeMap<Vec<WordId>, Entry>>) -> Self {
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as WordId)).collect();
        NgramModel {
            order,
            log_base: LogBase::Log10,
            vocab,
            index,
            counts: Vec::new(),
            discounts: Vec::new(),
            continuation_counts: BTreeMap::new(),
            entries,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn log_base(&self) -> LogBase {
        self.log_base
    }

    pub fn set_log_base(&mut self, base: LogBase) {
        self.log_base = base;
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    /// Raw count of an n-gram given as words (0 for imported models).
    pub fn count(&self, gram: &[&str]) -> u64 {
        let Some(ids) = gram.iter().map(|w| self.index.get(*w).copied()).collect::<Option<Vec<_>>>() else {
            return 0;
        };
        self.counts
            .get(ids.len().wrapping_sub(1))
            .and_then(|m| m.get(&ids))
            .copied()
            .unwrap_or(0)
    }

    pub fn continuation_count(&self, word: &str) -> u64 {
        self.index
            .get(word)
            .and_then(|id| self.continuation_counts.get(id))
            .copied()
            .unwrap_or(0)
    }

    pub fn entries(&self) -> &[BTreeMap<Vec<WordId>, Entry>] {
        &self.entries
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.vocab[id as usize]
    }

    fn id_of(&self, word: &str) -> Option<WordId> {
        self.index.get(word).or_else(|| self.index.get(UNK)).copied()
    }

    /// Words that can be predicted: the vocabulary minus `<s>`.
    pub fn predictable_words(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str).filter(|w| *w != BOS)
    }

    fn log10_prob_ids(&self, context: &[Option<WordId>], word: Option<WordId>) -> f64 {
        let Some(word) = word else {
            return LOG10_FLOOR;
        };
        let max_ctx = context.len().min(self.order - 1);
        let mut acc = 0.0;
        for len in (0..=max_ctx).rev() {
            let hist = &context[context.len() - len..];
            let Some(hist) = hist.iter().copied().collect::<Option<Vec<WordId>>>() else {
                continue;
            };
            let mut gram = hist.clone();
            gram.push(word);
            if let Some(e) = self.entries[len].get(&gram) {
                return acc + e.log10_prob;
            }
            if len > 0 {
                if let Some(b) = self.entries[len - 1].get(&hist).and_then(|e| e.log10_backoff) {
                    acc += b;
                }
            }
        }
        acc + LOG10_FLOOR
    }

    /// log10 P(word | context); only the last `order - 1` context words matter.
    /// Unknown words are scored as `<unk>`.
    pub fn log10_prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<Option<WordId>> = context.iter().map(|w| self.id_of(w)).collect();
        self.log10_prob_ids(&ctx, self.id_of(word))
    }

    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        10f64.powf(self.log10_prob(context, word))
    }

    /// Per-position scores of `<s> w1 .. wN </s>` in the configured base, as
    /// `(left word, right word, score)` for every adjacent pair.
    fn scored_positions(&self, tokens: &[String]) -> Vec<ScoredBigram> {
        let mut padded: Vec<&str> = Vec::with_capacity(tokens.len() + 2);
        padded.push(BOS);
        padded.extend(tokens.iter().map(String::as_str));
        padded.push(EOS);
        let ids: Vec<Option<WordId>> = padded.iter().map(|w| self.id_of(w)).collect();
        (1..padded.len())
            .map(|i| {
                let start = i.saturating_sub(self.order - 1);
                let lp = self.log10_prob_ids(&ids[start..i], ids[i]);
                ScoredBigram {
                    left: padded[i - 1].to_string(),
                    right: padded[i].to_string(),
                    log_likelihood: self.log_base.scale(lp),
                }
            })
            .collect()
    }

    pub fn score_bigrams(&self, sentence: &NormalizedSentence) -> Result<Vec<ScoredBigram>, LmError> {
        if self.order < 2 {
            return Err(LmError::OrderTooLow(self.order));
        }
        if sentence.tokens.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.scored_positions(&sentence.tokens))
    }

    /// Sum of the per-pair scores, including the end marker.
    pub fn sentence_log_likelihood(&self, sentence: &NormalizedSentence) -> f64 {
        self.scored_positions(&sentence.tokens).iter().map(|s| s.log_likelihood).sum()
    }

    /// Sentence score divided by the number of tokens (markers excluded).
    pub fn normalized_log_likelihood(&self, sentence: &NormalizedSentence) -> Result<f64, LmError> {
        if sentence.tokens.is_empty() {
            return Err(LmError::EmptySentence);
        }
        Ok(self.sentence_log_likelihood(sentence) / sentence.tokens.len() as f64)
    }

    pub fn to_arpa(&self) -> String {
        arpa::write(self)
    }

    pub fn from_arpa(text: &str) -> Result<Self, LmError> {
        arpa::parse(text)
    }

    /// Loads either an ARPA file or the native JSON model file.
    pub fn load(path: &Path) -> Result<Self, LmError> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_arpa(&text)
        }
    }

    /// Native JSON form, which also keeps raw counts and discounts.
    pub fn to_json(&self) -> String {
        let gram_str = |g: &Vec<WordId>| g.iter().map(|id| self.word(*id)).collect::<Vec<_>>().join(" ");
        let file = ModelFile {
            order: self.order,
            log_base: self.log_base,
            vocab: self.vocab.clone(),
            discounts: self.discounts.clone(),
            counts: self
                .counts
                .iter()
                .map(|m| m.iter().map(|(g, c)| (gram_str(g), *c)).collect())
                .collect(),
            entries: self
                .entries
                .iter()
                .map(|m| m.iter().map(|(g, e)| (gram_str(g), *e)).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LmError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| LmError::ModelFile(e.to_string()))?;
        let mut model = NgramModel::from_parts(file.order, file.vocab, Vec::new());
        let ids = |s: &str| -> Result<Vec<WordId>, LmError> {
            s.split(' ')
                .map(|w| model.index.get(w).copied().ok_or_else(|| LmError::ModelFile(format!("unknown word {w:?}"))))
                .collect()
        };
        let counts = file
            .counts
            .iter()
            .map(|m| m.iter().map(|(g, c)| Ok((ids(g)?, *c))).collect::<Result<BTreeMap<_, _>, LmError>>())
            .collect::<Result<Vec<_>, _>>()?;
        let entries = file
            .entries
            .iter()
            .map(|m| m.iter().map(|(g, e)| Ok((ids(g)?, *e))).collect::<Result<BTreeMap<_, _>, LmError>>())
            .collect::<Result<Vec<_>, _>>()?;
        if entries.len() != file.order {
            return Err(LmError::ModelFile("entry tables do not match order".into()));
        }
        model.counts = counts;
        model.entries = entries;
        model.discounts = file.discounts;
        model.log_base = file.log_base;
        if model.order >= 2 && !model.counts.is_empty() {
            for gram in model.counts[1].keys() {
                *model.continuation_counts.entry(gram[1]).or_default() += 1;
            }
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    log_base: LogBase,
    vocab: Vec<String>,
    discounts: Vec<f64>,
    counts: Vec<Vec<(String, u64)>>,
    entries: Vec<Vec<(String, Entry)>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(corpus: &[&[&str]]) -> Vec<NormalizedSentence> {
        corpus
            .iter()
            .enumerate()
            .map(|(i, t)| NormalizedSentence::from_tokens(&i.to_string(), t))
            .collect()
    }

    fn bigram(corpus: &[&[&str]]) -> NgramModel {
        NgramModel::train(&sents(corpus), &LmConfig::default()).unwrap()
    }

    #[test]
    fn hand_computed_bigram_probability() {
        // Bigrams: (<s>,a)x2 (a,b) (a,c) (b,</s>) (c,</s>) -> n1=4, n2=1, D2=2/3.
        // Unigram continuation counts: a=1, b=1, c=1, </s>=2; T=5, all n1 except
        // </s> -> n1=3, n2=1, D1=3/5. Predictable vocab {a,b,c,</s>,<unk>} = 5.
        let m = bigram(&[&["a", "b"], &["a", "c"]]);
        let d2 = 2.0 / 3.0;
        let d1 = 3.0 / 5.0;
        assert!((m.discounts()[1] - d2).abs() < 1e-15);
        assert!((m.discounts()[0] - d1).abs() < 1e-15);
        let p_uni_b = (1.0 - d1) / 5.0 + d1 * 4.0 / 5.0 / 5.0;
        let expected = (1.0 - d2) / 2.0 + d2 * 2.0 / 2.0 * p_uni_b;
        assert!((m.prob(&["a"], "b") - expected).abs() < 1e-12);
        assert_eq!(m.count(&["a", "b"]), 1);
        assert_eq!(m.count(&["a"]), 2);
        assert_eq!(m.continuation_count("</s>"), 2);
    }

    #[test]
    fn unigram_model_normalizes() {
        let m = NgramModel::train(&sents(&[&["a"]]), &LmConfig { order: 1, ..Default::default() }).unwrap();
        let total: f64 = m.predictable_words().map(|w| m.prob(&[], w)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observed_histories_normalize() {
        let m = bigram(&[&["a", "b", "a"], &["b", "c"], &["a", "a", "c", "d"]]);
        for h in ["<s>", "a", "b", "c", "d", "zzz"] {
            let total: f64 = m.predictable_words().map(|w| m.prob(&[h], w)).sum();
            assert!((total - 1.0).abs() < 1e-9, "history {h}: {total}");
        }
    }

    #[test]
    fn training_errors() {
        assert_eq!(NgramModel::train(&[], &LmConfig::default()), Err(LmError::EmptyCorpus));
        assert_eq!(
            NgramModel::train(&sents(&[&[]]), &LmConfig::default()),
            Err(LmError::EmptyCorpus)
        );
        assert_eq!(
            NgramModel::train(&sents(&[&["a"]]), &LmConfig { order: 4, ..Default::default() }),
            Err(LmError::OrderTooLarge { order: 4, max: 3 })
        );
        assert_eq!(
            NgramModel::train(&sents(&[&["a"]]), &LmConfig { order: 0, ..Default::default() }),
            Err(LmError::InvalidOrder)
        );
    }

    #[test]
    fn scoring_contracts() {
        let m = bigram(&[&["a", "b"], &["a", "c"]]);
        let s = NormalizedSentence::from_tokens("x", &["a", "b"]);
        let scored = m.score_bigrams(&s).unwrap();
        assert_eq!(scored.len(), 3);
        assert_eq!((scored[0].left.as_str(), scored[2].right.as_str()), (BOS, EOS));
        let sum: f64 = scored.iter().map(|b| b.log_likelihood).sum();
        assert_eq!(sum, m.sentence_log_likelihood(&s));

        let oov = m.score_bigrams(&NormalizedSentence::from_tokens("x", &["a", "qq"])).unwrap();
        let unk = m.score_bigrams(&NormalizedSentence::from_tokens("x", &["a", UNK])).unwrap();
        for (x, y) in oov.iter().zip(&unk) {
            assert_eq!(x.log_likelihood, y.log_likelihood);
            assert!(x.log_likelihood.is_finite());
        }

        assert!(m.score_bigrams(&NormalizedSentence::from_tokens::<&str>("x", &[])).unwrap().is_empty());
        let one = NormalizedSentence::from_tokens("x", &["a"]);
        assert_eq!(m.normalized_log_likelihood(&one).unwrap(), m.sentence_log_likelihood(&one));
        assert_eq!(
            m.normalized_log_likelihood(&NormalizedSentence::from_tokens::<&str>("x", &[])),
            Err(LmError::EmptySentence)
        );

        let uni = NgramModel::train(&sents(&[&["a"]]), &LmConfig { order: 1, ..Default::default() }).unwrap();
        assert_eq!(uni.score_bigrams(&one), Err(LmError::OrderTooLow(1)));
    }

    #[test]
    fn natural_log_scores() {
        let mut m = bigram(&[&["a", "b"], &["a", "c"]]);
        let s = NormalizedSentence::from_tokens("x", &["a", "b"]);
        let l10 = m.sentence_log_likelihood(&s);
        m.set_log_base(LogBase::Ln);
        assert!((m.sentence_log_likelihood(&s) - l10 * std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn frequency_floor_maps_rare_words_to_unk() {
        let cfg = LmConfig {
            frequency_floor: 2,
            ..Default::default()
        };
        let m = NgramModel::train(&sents(&[&["a", "b"], &["a", "c"]]), &cfg).unwrap();
        assert!(!m.vocab().iter().any(|w| w == "b"));
        assert_eq!(m.count(&["a", UNK]), 2);
        assert_eq!(m.log10_prob(&["a"], "b"), m.log10_prob(&["a"], "c"));
    }

    #[test]
    fn json_round_trip() {
        let m = bigram(&[&["a", "b"], &["a", "c", "b"]]);
        let back = NgramModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn trigram_histories_normalize() {
        let m = NgramModel::train(
            &sents(&[&["a", "b", "c"], &["a", "b", "d"], &["b", "c", "a", "b"]]),
            &LmConfig { order: 3, ..Default::default() },
        )
        .unwrap();
        for h in [["<s>", "a"], ["a", "b"], ["b", "c"], ["c", "a"], ["x", "b"]] {
            let total: f64 = m.predictable_words().map(|w| m.prob(&h, w)).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
