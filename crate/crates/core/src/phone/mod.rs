//! Phones, rule-based grapheme-to-phone conversion and pentaphone contexts.

mod label;
mod question;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use label::{expand_contexts, parse_label_file, write_label_file, FullContextLabel, Pentaphone};
pub use question::{parse_question_file, write_question_file, Question, QuestionSet, Slot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhoneError {
    #[error("no rule covers grapheme {grapheme:?} at position {position} of {word:?}")]
    Uncovered {
        word: String,
        grapheme: char,
        position: usize,
    },
    #[error("unknown phone {0:?}")]
    UnknownPhone(String),
    #[error("empty phone sequence")]
    EmptySequence,
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid phone data: {0}")]
    Invalid(String),
}

/// Characters reserved by the label and question syntax.
pub const RESERVED: &[char] = &['^', '-', '+', '=', '*', ',', '{', '}', '"'];

pub fn valid_phone_symbol(p: &str) -> bool {
    !p.is_empty() && !p.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneSet {
    pub phones: BTreeSet<String>,
    pub silence: String,
    #[serde(default)]
    pub categories: BTreeMap<String, BTreeSet<String>>,
}

impl PhoneSet {
    pub fn new(phones: &[&str], silence: &str) -> Result<Self, PhoneError> {
        let set = PhoneSet {
            phones: phones.iter().map(|p| p.to_string()).collect(),
            silence: silence.to_string(),
            categories: BTreeMap::new(),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn with_category(mut self, name: &str, members: &[&str]) -> Result<Self, PhoneError> {
        self.categories
            .insert(name.to_string(), members.iter().map(|p| p.to_string()).collect());
        self.validate()?;
        Ok(self)
    }

    pub fn from_toml_str(s: &str) -> Result<Self, PhoneError> {
        let set: PhoneSet = toml::from_str(s).map_err(|e| PhoneError::Invalid(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), PhoneError> {
        if let Some(p) = self.phones.iter().find(|p| !valid_phone_symbol(p)) {
            return Err(PhoneError::Invalid(format!("phone symbol {p:?} is empty or uses reserved characters")));
        }
        if !self.phones.contains(&self.silence) {
            return Err(PhoneError::Invalid(format!("silence {:?} is not in the phone set", self.silence)));
        }
        for (name, members) in &self.categories {
            if let Some(p) = members.iter().find(|p| !self.phones.contains(*p)) {
                return Err(PhoneError::Invalid(format!("category {name:?} lists unknown phone {p:?}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, phone: &str) -> bool {
        self.phones.contains(phone)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2PRule {
    pub graphemes: Vec<char>,
    pub phones: Vec<String>,
}

/// Ordered rewrite rules. With `longest_match` the longest rule matching at the
/// current position wins (earlier rules break ties); otherwise the first
/// matching rule in list order wins. When the preferred rule leaves the rest of
/// the word uncoverable, the next candidate is tried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2PRules {
    pub rules: Vec<G2PRule>,
    pub longest_match: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RulesFile {
    #[serde(default = "yes")]
    longest_match: bool,
    rules: Vec<(String, String)>,
}

fn yes() -> bool {
    true
}

impl G2PRules {
    pub fn new(rules: &[(&str, &[&str])], longest_match: bool) -> Self {
        G2PRules {
            rules: rules
                .iter()
                .map(|(g, p)| G2PRule {
                    graphemes: g.chars().collect(),
                    phones: p.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
            longest_match,
        }
    }

    /// `rules = [["ka", "k a"], ...]` plus an optional `longest_match` flag.
    pub fn from_toml_str(s: &str) -> Result<Self, PhoneError> {
        let file: RulesFile = toml::from_str(s).map_err(|e| PhoneError::Invalid(e.to_string()))?;
        let mut rules = Vec::with_capacity(file.rules.len());
        for (g, p) in file.rules {
            if g.is_empty() {
                return Err(PhoneError::Invalid("rule with empty grapheme pattern".into()));
            }
            rules.push(G2PRule {
                graphemes: g.chars().collect(),
                phones: p.split_whitespace().map(str::to_string).collect(),
            });
        }
        Ok(G2PRules {
            rules,
            longest_match: file.longest_match,
        })
    }

    /// Every emitted phone must belong to the phone set.
    pub fn validate(&self, phones: &PhoneSet) -> Result<(), PhoneError> {
        for rule in &self.rules {
            if let Some(p) = rule.phones.iter().find(|p| !phones.contains(p)) {
                return Err(PhoneError::UnknownPhone(p.clone()));
            }
        }
        Ok(())
    }
}

pub fn g2p(word: &str, rules: &G2PRules) -> Result<Vec<String>, PhoneError> {
    let chars: Vec<char> = word.chars().collect();
    let mut dead = vec![false; chars.len() + 1];
    let mut stuck_at: Option<usize> = None;
    let mut path = Vec::new();
    if cover(&chars, 0, rules, &mut dead, &mut stuck_at, &mut path) {
        return Ok(path.iter().flat_map(|r: &&G2PRule| r.phones.iter().cloned()).collect());
    }
    let position = stuck_at.unwrap_or(0);
    Err(PhoneError::Uncovered {
        word: word.to_string(),
        grapheme: chars[position],
        position,
    })
}

/// Candidate rules at `pos` in preference order.
fn candidates<'r>(rest: &[char], rules: &'r G2PRules) -> Vec<&'r G2PRule> {
    let mut found: Vec<&G2PRule> = rules
        .rules
        .iter()
        .filter(|r| !r.graphemes.is_empty() && rest.starts_with(&r.graphemes))
        .collect();
    if rules.longest_match {
        // Stable: equal lengths keep list order.
        found.sort_by_key(|r| std::cmp::Reverse(r.graphemes.len()));
    }
    found
}

// Depth-first over candidates, backtracking out of positions that cannot be
// covered. `dead` memoizes failed positions so the search stays linear-ish.
fn cover<'r>(
    chars: &[char],
    pos: usize,
    rules: &'r G2PRules,
    dead: &mut [bool],
    stuck_at: &mut Option<usize>,
    path: &mut Vec<&'r G2PRule>,
) -> bool {
    if pos == chars.len() {
        return true;
    }
    if dead[pos] {
        return false;
    }
    let options = candidates(&chars[pos..], rules);
    if options.is_empty() && stuck_at.is_none_or(|s| pos > s) {
        *stuck_at = Some(pos);
    }
    for rule in options {
        path.push(rule);
        if cover(chars, pos + rule.graphemes.len(), rules, dead, stuck_at, path) {
            return true;
        }
        path.pop();
    }
    dead[pos] = true;
    false
}

/// Phones of a word sequence, concatenated without inter-word silence.
pub fn g2p_words<S: AsRef<str>>(words: &[S], rules: &G2PRules) -> Result<Vec<String>, PhoneError> {
    let mut out = Vec::new();
    for w in words {
        out.extend(g2p(w.as_ref(), rules)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_rules() {
        let rules = G2PRules::new(&[("ka", &["k", "a"]), ("m", &["m"])], true);
        assert_eq!(g2p("kam", &rules).unwrap(), vec!["k", "a", "m"]);
        assert!(g2p("", &rules).unwrap().is_empty());
    }

    #[test]
    fn longest_match_trace() {
        // Longest-first tries "ka" at 0, which strands "m"; it backs off to "k"
        // and continues with "am".
        let rules = G2PRules::new(&[("k", &["k"]), ("ka", &["k", "a"]), ("am", &["a", "m"])], true);
        assert_eq!(g2p("kam", &rules).unwrap(), vec!["k", "a", "m"]);
        // Preference order is visible when both parses succeed.
        let rules = G2PRules::new(&[("k", &["K"]), ("ka", &["KA"]), ("am", &["AM"]), ("m", &["M"])], true);
        assert_eq!(g2p("kam", &rules).unwrap(), vec!["KA", "M"]);
        let first = G2PRules { longest_match: false, ..rules };
        assert_eq!(g2p("kam", &first).unwrap(), vec!["K", "AM"]);
    }

    #[test]
    fn uncovered_grapheme_named() {
        let rules = G2PRules::new(&[("a", &["a"])], true);
        let e = g2p("ax", &rules).unwrap_err();
        assert!(e.to_string().contains("'x'"));
    }

    #[test]
    fn rules_and_phoneset_files() {
        let set = PhoneSet::from_toml_str(
            r#"
            phones = ["sil", "a", "k", "m"]
            silence = "sil"
            [categories]
            Vowel = ["a"]
            Nasal = ["m"]
        "#,
        )
        .unwrap();
        let rules = G2PRules::from_toml_str(r#"rules = [["ka", "k a"], ["m", "m"]]"#).unwrap();
        rules.validate(&set).unwrap();
        assert!(rules.longest_match);
        let bad = G2PRules::from_toml_str(r#"rules = [["x", "zz"]]"#).unwrap();
        assert_eq!(bad.validate(&set), Err(PhoneError::UnknownPhone("zz".into())));
        assert!(PhoneSet::from_toml_str("phones = [\"a\"]\nsilence = \"sil\"").is_err());
        assert!(PhoneSet::new(&["a+b", "sil"], "sil").is_err());
    }
}
