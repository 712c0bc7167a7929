//! Text cleaning and normalization for multi-domain corpora.
//!
//! Documents are processed in a fixed order: strip-set characters are removed,
//! the text is cut at sentence delimiters, each whitespace-separated word is
//! passed through the transliteration table (first matching rule wins), the
//! result is optionally lowercased, and whatever remains is split on whitespace
//! into tokens.
//!
//! The default delimiter set (`.`, `?`, `!`, `।`, `॥`) is a choice made for this
//! toolkit; crawled corpora rarely document their sentence boundaries.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("sentence delimiter set is empty")]
    NoDelimiters,
    #[error("character {0:?} is both stripped and a sentence delimiter")]
    StripDelimiterOverlap(char),
    #[error("transliteration rules {first} and {second} overlap ambiguously ({detail})")]
    AmbiguousRules {
        first: usize,
        second: usize,
        detail: String,
    },
    #[error("transliteration rule {rule}: invalid replacement {word:?} ({reason})")]
    BadReplacement {
        rule: usize,
        word: String,
        reason: &'static str,
    },
    #[error("cannot parse normalization config: {0}")]
    Parse(String),
}

/// A per-document failure; the rest of the batch continues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentError {
    pub id: String,
    pub reason: String,
}

/// A document that produced no sentences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub source_tag: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source_tag: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            text: text.into(),
            source_tag: source_tag.into(),
        }
    }

    /// Decodes UTF-8 bytes, producing an error record for invalid input.
    pub fn from_bytes(id: &str, bytes: &[u8], source_tag: &str) -> Result<Self, DocumentError> {
        match std::str::from_utf8(bytes) {
            Ok(text) => Ok(RawDocument::new(id, text, source_tag)),
            Err(e) => Err(DocumentError {
                id: id.to_string(),
                reason: format!("invalid UTF-8 at byte {}", e.valid_up_to()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedSentence {
    /// `<document id>-<sentence index>`.
    pub id: String,
    pub tokens: Vec<String>,
    pub doc_id: String,
    pub index: usize,
    pub source_tag: String,
}

impl NormalizedSentence {
    /// Builds a sentence directly from tokens, e.g. for LM queries.
    pub fn from_tokens<S: AsRef<str>>(id: &str, tokens: &[S]) -> Self {
        NormalizedSentence {
            id: id.to_string(),
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            doc_id: id.to_string(),
            index: 0,
            source_tag: String::new(),
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    /// A run of ASCII digits.
    Digits,
    /// Two or more ASCII uppercase letters.
    Acronym,
}

impl TokenClass {
    fn matches(self, word: &str) -> bool {
        match self {
            TokenClass::Digits => !word.is_empty() && word.chars().all(|c| c.is_ascii_digit()),
            TokenClass::Acronym => word.chars().count() >= 2 && word.chars().all(|c| c.is_ascii_uppercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TranslitRule {
    /// Replaces one exact word with a word sequence.
    Exact { token: String, replacement: Vec<String> },
    /// Spells every character of a matching word through a per-character table.
    Spell {
        class: TokenClass,
        table: BTreeMap<char, Vec<String>>,
    },
}

impl TranslitRule {
    fn apply(&self, word: &str) -> Option<Vec<String>> {
        match self {
            TranslitRule::Exact { token, replacement } => (token == word).then(|| replacement.clone()),
            TranslitRule::Spell { class, table } => {
                if !class.matches(word) {
                    return None;
                }
                let mut out = Vec::new();
                for c in word.chars() {
                    out.extend(table.get(&c)?.iter().cloned());
                }
                Some(out)
            }
        }
    }

    fn replacement_words(&self) -> Vec<&String> {
        match self {
            TranslitRule::Exact { replacement, .. } => replacement.iter().collect(),
            TranslitRule::Spell { table, .. } => table.values().flatten().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationConfig {
    pub strip_set: BTreeSet<char>,
    pub sentence_delimiters: BTreeSet<char>,
    pub transliteration: Vec<TranslitRule>,
    pub lowercase_fold: bool,
}

pub const DEFAULT_STRIP: &str = "@#$%^&*|~`<>[]{}()\"'_=+\\/;:,";
pub const DEFAULT_DELIMITERS: &str = ".?!।॥";

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            strip_set: DEFAULT_STRIP.chars().collect(),
            sentence_delimiters: DEFAULT_DELIMITERS.chars().collect(),
            transliteration: Vec::new(),
            lowercase_fold: true,
        }
    }
}

/// Declarative form of [`NormalizationConfig`] (TOML).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationSpec {
    #[serde(default)]
    pub strip: Option<String>,
    #[serde(default)]
    pub delimiters: Option<String>,
    #[serde(default)]
    pub lowercase: Option<bool>,
    #[serde(default)]
    pub transliteration: Vec<RuleSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "match", rename_all = "lowercase")]
pub enum RuleSpec {
    Exact { token: String, replacement: String },
    Digits { spell: BTreeMap<String, String> },
    Acronym { spell: BTreeMap<String, String> },
}

impl NormalizationSpec {
    pub fn into_config(self) -> Result<NormalizationConfig, ConfigError> {
        let mut cfg = NormalizationConfig::default();
        if let Some(s) = self.strip {
            cfg.strip_set = s.chars().collect();
        }
        if let Some(d) = self.delimiters {
            cfg.sentence_delimiters = d.chars().collect();
        }
        if let Some(l) = self.lowercase {
            cfg.lowercase_fold = l;
        }
        for rule in self.transliteration {
            let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
            let spell_table = |spell: BTreeMap<String, String>| -> Result<BTreeMap<char, Vec<String>>, ConfigError> {
                let mut table = BTreeMap::new();
                for (k, v) in spell {
                    let mut chars = k.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => {
                            table.insert(c, words(&v));
                        }
                        _ => return Err(ConfigError::Parse(format!("spell key {k:?} must be a single character"))),
                    }
                }
                Ok(table)
            };
            cfg.transliteration.push(match rule {
                RuleSpec::Exact { token, replacement } => TranslitRule::Exact {
                    token,
                    replacement: words(&replacement),
                },
                RuleSpec::Digits { spell } => TranslitRule::Spell {
                    class: TokenClass::Digits,
                    table: spell_table(spell)?,
                },
                RuleSpec::Acronym { spell } => TranslitRule::Spell {
                    class: TokenClass::Acronym,
                    table: spell_table(spell)?,
                },
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl NormalizationConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let spec: NormalizationSpec = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        spec.into_config()
    }

    /// Toy table shipped for tests and the bundled corpus: digits and a few
    /// acronym letters spelled out in English.
    pub fn toy() -> Self {
        const DIGITS: [&str; 10] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];
        let digit_table = DIGITS
            .iter()
            .enumerate()
            .map(|(i, w)| (char::from(b'0' + i as u8), vec![w.to_string()]))
            .collect();
        let letters = [
            ('A', "e"),
            ('B', "bi"),
            ('C', "si"),
            ('D', "di"),
            ('I', "ai"),
            ('M', "em"),
            ('N', "en"),
            ('T', "ti"),
        ];
        let acronym_table = letters.iter().map(|(c, w)| (*c, vec![w.to_string()])).collect();
        NormalizationConfig {
            transliteration: vec![
                TranslitRule::Spell {
                    class: TokenClass::Digits,
                    table: digit_table,
                },
                TranslitRule::Spell {
                    class: TokenClass::Acronym,
                    table: acronym_table,
                },
            ],
            ..NormalizationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sentence_delimiters.is_empty() {
            return Err(ConfigError::NoDelimiters);
        }
        if let Some(c) = self.strip_set.intersection(&self.sentence_delimiters).next() {
            return Err(ConfigError::StripDelimiterOverlap(*c));
        }
        for (i, a) in self.transliteration.iter().enumerate() {
            for (j, b) in self.transliteration.iter().enumerate().skip(i + 1) {
                let clash = match (a, b) {
                    (TranslitRule::Exact { token: x, replacement: rx }, TranslitRule::Exact { token: y, replacement: ry }) => {
                        (x == y && rx != ry).then(|| format!("token {x:?} mapped twice"))
                    }
                    (TranslitRule::Spell { class: x, .. }, TranslitRule::Spell { class: y, .. }) => {
                        (x == y).then(|| format!("{x:?} class defined twice"))
                    }
                    _ => None,
                };
                if let Some(detail) = clash {
                    return Err(ConfigError::AmbiguousRules {
                        first: i,
                        second: j,
                        detail,
                    });
                }
            }
        }
        // Replacements must be fixed points so normalization is idempotent.
        for (i, rule) in self.transliteration.iter().enumerate() {
            for word in rule.replacement_words() {
                let bad = |reason| ConfigError::BadReplacement {
                    rule: i,
                    word: word.clone(),
                    reason,
                };
                if word.is_empty() || word.chars().any(char::is_whitespace) {
                    return Err(bad("empty or contains whitespace"));
                }
                if word
                    .chars()
                    .any(|c| self.strip_set.contains(&c) || self.sentence_delimiters.contains(&c))
                {
                    return Err(bad("contains a stripped or delimiter character"));
                }
                let folded = self.fold(word);
                if self.transliterate_word(word).is_some() || self.transliterate_word(&folded).is_some() {
                    return Err(bad("is itself rewritten by the table"));
                }
            }
        }
        Ok(())
    }

    fn fold(&self, word: &str) -> String {
        if self.lowercase_fold {
            word.to_lowercase()
        } else {
            word.to_string()
        }
    }

    fn transliterate_word(&self, word: &str) -> Option<Vec<String>> {
        self.transliteration.iter().find_map(|r| r.apply(word))
    }

    /// Splits one document into token lists, in order. Empty segments are skipped.
    pub fn sentences_of(&self, text: &str) -> Vec<Vec<String>> {
        let stripped: String = text.chars().filter(|c| !self.strip_set.contains(c)).collect();
        stripped
            .split(|c: char| self.sentence_delimiters.contains(&c))
            .filter_map(|segment| {
                let mut tokens = Vec::new();
                for word in segment.split_whitespace() {
                    match self.transliterate_word(word) {
                        Some(rep) => tokens.extend(rep.iter().map(|w| self.fold(w))),
                        None => tokens.push(self.fold(word)),
                    }
                }
                tokens.retain(|t| !t.is_empty());
                (!tokens.is_empty()).then_some(tokens)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormalizedCorpus {
    pub sentences: Vec<NormalizedSentence>,
    pub dropped: Vec<DropRecord>,
    pub errors: Vec<DocumentError>,
}

pub fn normalize_corpus(docs: &[RawDocument], cfg: &NormalizationConfig) -> NormalizedCorpus {
    let mut out = NormalizedCorpus::default();
    let mut seen = HashSet::new();
    let mut unique = Vec::with_capacity(docs.len());
    for doc in docs {
        if doc.id.is_empty() {
            out.errors.push(DocumentError {
                id: String::new(),
                reason: "empty document id".into(),
            });
        } else if !seen.insert(doc.id.as_str()) {
            out.errors.push(DocumentError {
                id: doc.id.clone(),
                reason: "duplicate document id".into(),
            });
        } else {
            unique.push(doc);
        }
    }
    let per_doc: Vec<Vec<Vec<String>>> = unique.par_iter().map(|d| cfg.sentences_of(&d.text)).collect();
    for (doc, sentences) in unique.into_iter().zip(per_doc) {
        if sentences.is_empty() {
            out.dropped.push(DropRecord {
                id: doc.id.clone(),
                reason: if doc.text.trim().is_empty() {
                    "empty text".into()
                } else {
                    "no tokens left after normalization".into()
                },
            });
            continue;
        }
        for (index, tokens) in sentences.into_iter().enumerate() {
            out.sentences.push(NormalizedSentence {
                id: format!("{}-{}", doc.id, index),
                tokens,
                doc_id: doc.id.clone(),
                index,
                source_tag: doc.source_tag.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SourceCounts {
    pub sentences: usize,
    pub tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub vocabulary: usize,
    pub per_source: BTreeMap<String, SourceCounts>,
}

pub fn corpus_stats(sentences: &[NormalizedSentence]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut vocab = HashSet::new();
    for s in sentences {
        stats.sentences += 1;
        stats.tokens += s.tokens.len();
        vocab.extend(s.tokens.iter().map(String::as_str));
        let src = stats.per_source.entry(s.source_tag.clone()).or_default();
        src.sentences += 1;
        src.tokens += s.tokens.len();
    }
    stats.vocabulary = vocab.len();
    stats
}

/// Reads one document per line; an optional `<TAB>source_tag` suffix sets the tag.
/// Line ids are `<prefix>-<line number>` (1-based).
pub fn read_document_lines(bytes: &[u8], prefix: &str, default_tag: &str) -> (Vec<RawDocument>, Vec<DocumentError>) {
    let mut docs = Vec::new();
    let mut errors = Vec::new();
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    if body.is_empty() {
        return (docs, errors);
    }
    for (n, line) in body.split(|b| *b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let id = format!("{prefix}-{}", n + 1);
        match RawDocument::from_bytes(&id, line, default_tag) {
            Ok(mut doc) => {
                if let Some((text, tag)) = doc.text.rsplit_once('\t') {
                    let (text, tag) = (text.to_string(), tag.trim().to_string());
                    doc.text = text;
                    if !tag.is_empty() {
                        doc.source_tag = tag;
                    }
                }
                docs.push(doc);
            }
            Err(e) => errors.push(e),
        }
    }
    (docs, errors)
}

/// Reads a whole file as a single document whose id is the file stem.
pub fn read_document_file(path: &Path, source_tag: &str) -> std::io::Result<Result<RawDocument, DocumentError>> {
    let bytes = std::fs::read(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "doc".into());
    Ok(RawDocument::from_bytes(&id, &bytes, source_tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg_strip(strip: &str, delims: &str) -> NormalizationConfig {
        NormalizationConfig {
            strip_set: strip.chars().collect(),
            sentence_delimiters: delims.chars().collect(),
            transliteration: vec![],
            lowercase_fold: false,
        }
    }

    fn tokens(c: &NormalizedCorpus) -> Vec<Vec<String>> {
        c.sentences.iter().map(|s| s.tokens.clone()).collect()
    }

    #[test]
    fn strip_then_split() {
        let cfg = cfg_strip("@#", ".");
        let out = normalize_corpus(&[RawDocument::new("d", "a@#b. c d.", "x")], &cfg);
        assert_eq!(tokens(&out), vec![vec!["ab"], vec!["c", "d"]]);
        assert_eq!(out.sentences[1].id, "d-1");
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn empty_document_is_dropped_and_reported() {
        let out = normalize_corpus(&[RawDocument::new("e", "", "x")], &cfg_strip("@", "."));
        assert!(out.sentences.is_empty());
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].id, "e");
    }

    #[test]
    fn toy_table_spells_digits() {
        let out = normalize_corpus(&[RawDocument::new("d", "x  5  y", "x")], &NormalizationConfig::toy());
        assert_eq!(tokens(&out), vec![vec!["x", "five", "y"]]);
        let out = normalize_corpus(&[RawDocument::new("d", "room 42 of IIT", "x")], &NormalizationConfig::toy());
        assert_eq!(tokens(&out), vec![vec!["room", "four", "two", "of", "ai", "ai", "ti"]]);
    }

    #[test]
    fn spell_rule_without_full_coverage_leaves_word() {
        // 'X' has no letter name in the toy table.
        let out = normalize_corpus(&[RawDocument::new("d", "XYZ", "x")], &NormalizationConfig::toy());
        assert_eq!(tokens(&out), vec![vec!["xyz"]]);
    }

    #[test]
    fn ambiguous_table_is_rejected() {
        let mut cfg = NormalizationConfig::toy();
        cfg.transliteration.push(TranslitRule::Spell {
            class: TokenClass::Digits,
            table: BTreeMap::new(),
        });
        assert!(matches!(cfg.validate(), Err(ConfigError::AmbiguousRules { .. })));

        let toml = r#"
            [[transliteration]]
            match = "exact"
            token = "dr"
            replacement = "doctor"
            [[transliteration]]
            match = "exact"
            token = "dr"
            replacement = "drive"
        "#;
        assert!(matches!(
            NormalizationConfig::from_toml_str(toml),
            Err(ConfigError::AmbiguousRules { first: 0, second: 1, .. })
        ));
    }

    #[test]
    fn non_fixed_point_replacement_rejected() {
        let cfg = NormalizationConfig {
            transliteration: vec![
                TranslitRule::Exact {
                    token: "a".into(),
                    replacement: vec!["b".into()],
                },
                TranslitRule::Exact {
                    token: "b".into(),
                    replacement: vec!["c".into()],
                },
            ],
            ..NormalizationConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(ConfigError::BadReplacement { .. })));
    }

    #[test]
    fn config_from_toml() {
        let cfg = NormalizationConfig::from_toml_str(
            r#"
            strip = "@#"
            delimiters = "."
            lowercase = false
            [[transliteration]]
            match = "digits"
            spell = { "5" = "five", "1" = "one" }
        "#,
        )
        .unwrap();
        assert_eq!(cfg.sentences_of("A 15. b"), vec![vec!["A", "one", "five"], vec!["b"]]);
        assert!(NormalizationConfig::from_toml_str("bogus = 1").is_err());
        assert_eq!(
            NormalizationConfig::from_toml_str("delimiters = \"\""),
            Err(ConfigError::NoDelimiters)
        );
    }

    #[test]
    fn undecodable_bytes_give_error_record() {
        let (docs, errs) = read_document_lines(b"good line\n\xff\xfe bad\nthird\tnews\n", "f", "misc");
        assert_eq!(docs.len(), 2);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].id, "f-2");
        assert_eq!(docs[1].source_tag, "news");
        assert_eq!(docs[1].text, "third");
        assert_eq!(docs[0].source_tag, "misc");
    }

    #[test]
    fn duplicate_ids_reported() {
        let docs = [RawDocument::new("a", "x.", ""), RawDocument::new("a", "y.", "")];
        let out = normalize_corpus(&docs, &NormalizationConfig::default());
        assert_eq!(out.sentences.len(), 1);
        assert_eq!(out.errors.len(), 1);
    }

    #[test]
    fn stats() {
        assert_eq!(corpus_stats(&[]), CorpusStats::default());
        let s = [
            NormalizedSentence::from_tokens("1", &["a", "b"]),
            NormalizedSentence::from_tokens("2", &["a"]),
        ];
        let st = corpus_stats(&s);
        assert_eq!((st.sentences, st.tokens, st.vocabulary), (2, 3, 2));
    }

    proptest! {
        #[test]
        fn idempotent_and_clean(text in "[a-cA-D0-9@#. ]{0,40}") {
            let cfg = NormalizationConfig { strip_set: "@#".chars().collect(), ..NormalizationConfig::toy() };
            let first = cfg.sentences_of(&text);
            for sent in &first {
                for tok in sent {
                    prop_assert!(!tok.is_empty());
                    prop_assert!(!tok.chars().any(|c| cfg.strip_set.contains(&c) || cfg.sentence_delimiters.contains(&c)));
                }
                let again = cfg.sentences_of(&sent.join(" "));
                prop_assert_eq!(again, vec![sent.clone()]);
            }
            let expected = text
                .chars()
                .filter(|c| !cfg.strip_set.contains(c))
                .collect::<String>()
                .split('.')
                .filter(|seg| !seg.trim().is_empty())
                .count();
            prop_assert_eq!(first.len(), expected);
        }
    }
}
