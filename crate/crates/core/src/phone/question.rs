use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{valid_phone_symbol, Pentaphone, PhoneError, PhoneSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    LL,
    L,
    C,
    R,
    RR,
}

impl Slot {
    pub const ALL: [Slot; 5] = [Slot::LL, Slot::L, Slot::C, Slot::R, Slot::RR];

    fn pattern(self, phone: &str) -> String {
        match self {
            Slot::LL => format!("{phone}^*"),
            Slot::L => format!("*^{phone}-*"),
            Slot::C => format!("*-{phone}+*"),
            Slot::R => format!("*+{phone}=*"),
            Slot::RR => format!("*={phone}"),
        }
    }

    fn parse_pattern(p: &str) -> Option<(Slot, &str)> {
        fn inner<'a>(s: &'a str, pre: &str, post: &str) -> Option<&'a str> {
            s.strip_prefix(pre).and_then(|r| r.strip_suffix(post))
        }
        let (slot, phone) = if let Some(x) = inner(p, "*^", "-*") {
            (Slot::L, x)
        } else if let Some(x) = inner(p, "*-", "+*") {
            (Slot::C, x)
        } else if let Some(x) = inner(p, "*+", "=*") {
            (Slot::R, x)
        } else if let Some(x) = p.strip_prefix("*=") {
            (Slot::RR, x)
        } else if let Some(x) = p.strip_suffix("^*") {
            (Slot::LL, x)
        } else {
            return None;
        };
        valid_phone_symbol(phone).then_some((slot, phone))
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::LL => "LL",
            Slot::L => "L",
            Slot::C => "C",
            Slot::R => "R",
            Slot::RR => "RR",
        }
    }
}

/// A yes/no question constraining a single context slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub name: String,
    pub slot: Slot,
    /// Kept in file order so files round-trip byte for byte.
    pub phones: Vec<String>,
}

impl Question {
    pub fn new(name: &str, slot: Slot, phones: &[&str]) -> Self {
        Question {
            name: name.to_string(),
            slot,
            phones: phones.iter().map(|p| p.to_string()).collect(),
        }
    }

    pub fn answers_yes(&self, context: &Pentaphone) -> bool {
        let v = context.slot(self.slot);
        self.phones.iter().any(|p| p == v)
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let patterns: Vec<String> = self.phones.iter().map(|p| self.slot.pattern(p)).collect();
        write!(f, "QS \"{}\" {{{}}}", self.name, patterns.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub questions: Vec<Question>,
}

impl QuestionSet {
    /// One question per (slot, category) followed by one per (slot, phone).
    /// Useful as a starting set; not a linguistically curated inventory.
    pub fn from_categories(phones: &PhoneSet) -> Self {
        let mut questions = Vec::new();
        for slot in Slot::ALL {
            for (cat, members) in &phones.categories {
                if !members.is_empty() {
                    questions.push(Question {
                        name: format!("{}-{}", slot.name(), cat),
                        slot,
                        phones: members.iter().cloned().collect(),
                    });
                }
            }
            for p in &phones.phones {
                questions.push(Question {
                    name: format!("{}-{}", slot.name(), p),
                    slot,
                    phones: vec![p.clone()],
                });
            }
        }
        QuestionSet { questions }
    }

    pub fn validate(&self, phones: &PhoneSet) -> Result<(), PhoneError> {
        let mut names = HashSet::new();
        for q in &self.questions {
            if !names.insert(q.name.as_str()) {
                return Err(PhoneError::Invalid(format!("duplicate question name {:?}", q.name)));
            }
            if q.phones.is_empty() {
                return Err(PhoneError::Invalid(format!("question {:?} has no phones", q.name)));
            }
            if let Some(p) = q.phones.iter().find(|p| !phones.contains(p)) {
                return Err(PhoneError::Invalid(format!("question {:?} uses unknown phone {p:?}", q.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.name == name)
    }
}

fn parse_question_line(line: &str) -> Result<Question, (usize, String)> {
    let col = |rest: &str| line.len() - rest.len() + 1;
    let rest = line.strip_prefix("QS ").ok_or((1, "expected 'QS '".to_string()))?;
    let rest = rest.trim_start();
    let after_quote = rest
        .strip_prefix('"')
        .ok_or_else(|| (col(rest), "expected opening '\"'".to_string()))?;
    let close = after_quote
        .find('"')
        .ok_or_else(|| (col(after_quote), "unterminated question name".to_string()))?;
    let name = &after_quote[..close];
    if name.is_empty() {
        return Err((col(after_quote), "empty question name".into()));
    }
    let rest = after_quote[close + 1..].trim_start();
    let body = rest
        .strip_prefix('{')
        .ok_or_else(|| (col(rest), "expected '{'".to_string()))?;
    let mut offset = col(body);
    let body = body
        .strip_suffix('}')
        .ok_or_else(|| (line.len() + 1, "expected closing '}'".to_string()))?;
    let mut slot = None;
    let mut phones = Vec::new();
    for pat in body.split(',') {
        let (s, p) = Slot::parse_pattern(pat).ok_or_else(|| (offset, format!("malformed pattern {pat:?}")))?;
        match slot {
            None => slot = Some(s),
            Some(prev) if prev != s => {
                return Err((offset, format!("pattern {pat:?} constrains {} but question uses {}", s.name(), prev.name())))
            }
            _ => {}
        }
        phones.push(p.to_string());
        offset += pat.chars().count() + 1;
    }
    Ok(Question {
        name: name.to_string(),
        slot: slot.expect("split yields at least one pattern"),
        phones,
    })
}

/// `QS "name" {pattern,...}` per line; blank lines and `#` comments are skipped.
pub fn parse_question_file(text: &str) -> Result<QuestionSet, PhoneError> {
    let mut questions = Vec::new();
    let mut names = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let q = parse_question_line(line).map_err(|(column, message)| PhoneError::Parse {
            line: i + 1,
            column,
            message,
        })?;
        if !names.insert(q.name.clone()) {
            return Err(PhoneError::Parse {
                line: i + 1,
                column: 5,
                message: format!("duplicate question name {:?}", q.name),
            });
        }
        questions.push(q);
    }
    Ok(QuestionSet { questions })
}

pub fn write_question_file(set: &QuestionSet) -> String {
    set.questions.iter().map(|q| format!("{q}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn right_nasal() {
        let set = parse_question_file("QS \"R-Nasal\" {*+m=*,*+n=*}\n").unwrap();
        assert_eq!(set.questions, vec![Question::new("R-Nasal", Slot::R, &["m", "n"])]);
    }

    #[test]
    fn every_slot_pattern() {
        for (pat, slot) in [("a^*", Slot::LL), ("*^a-*", Slot::L), ("*-a+*", Slot::C), ("*+a=*", Slot::R), ("*=a", Slot::RR)] {
            let q = parse_question_file(&format!("QS \"q\" {{{pat}}}")).unwrap();
            assert_eq!(q.questions[0].slot, slot);
            assert_eq!(q.questions[0].phones, vec!["a"]);
            assert_eq!(write_question_file(&q), format!("QS \"q\" {{{pat}}}\n"));
        }
    }

    #[test]
    fn errors_have_positions() {
        let cases = [
            ("QS \"x\" {*+m=*,*-n+*}", 1, 15),
            ("QX \"x\" {*+m=*}", 1, 1),
            ("QS \"x\" {*+m=*", 1, 14),
            ("QS \"x\" {*+m*}", 1, 9),
            ("\nQS x {*+m=*}", 2, 4),
        ];
        for (text, line, column) in cases {
            match parse_question_file(text) {
                Err(PhoneError::Parse { line: l, column: c, .. }) => assert_eq!((l, c), (line, column), "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_question_file("QS \"a\" {*=m}\nQS \"a\" {*=n}").is_err());
    }

    #[test]
    fn category_questions() {
        let set = PhoneSet::new(&["sil", "a", "m"], "sil")
            .unwrap()
            .with_category("Nasal", &["m"])
            .unwrap();
        let qs = QuestionSet::from_categories(&set);
        qs.validate(&set).unwrap();
        assert_eq!(qs.questions.len(), 5 * 4);
        let q = qs.get("R-Nasal").unwrap();
        assert!(q.answers_yes(&Pentaphone::new("sil", "sil", "a", "m", "sil")));
        assert!(!q.answers_yes(&Pentaphone::new("sil", "sil", "a", "sil", "m")));
    }

    proptest! {
        #[test]
        fn round_trip(qs in prop::collection::vec((prop::sample::select(Slot::ALL.to_vec()), prop::collection::vec("[a-z]{1,3}", 1..4)), 0..20)) {
            let set = QuestionSet {
                questions: qs.iter().enumerate().map(|(i, (slot, phones))| Question {
                    name: format!("q{i}"), slot: *slot, phones: phones.clone(),
                }).collect(),
            };
            let text = write_question_file(&set);
            let back = parse_question_file(&text).unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(write_question_file(&back), text);
        }

        #[test]
        fn garbage_never_panics(text in "[QS \"{}*+=^a,\n-]{0,60}") {
            let _ = parse_question_file(&text);
        }
    }
}
