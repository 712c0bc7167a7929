use std::fmt;

use serde::{Deserialize, Serialize};

use super::{valid_phone_symbol, PhoneError, PhoneSet, Slot};

/// Quinphone identity: two left neighbours, the centre phone, two right neighbours.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pentaphone {
    pub ll: String,
    pub l: String,
    pub c: String,
    pub r: String,
    pub rr: String,
}

impl Pentaphone {
    pub fn new(ll: &str, l: &str, c: &str, r: &str, rr: &str) -> Self {
        Pentaphone {
            ll: ll.into(),
            l: l.into(),
            c: c.into(),
            r: r.into(),
            rr: rr.into(),
        }
    }

    pub fn slot(&self, slot: Slot) -> &str {
        match slot {
            Slot::LL => &self.ll,
            Slot::L => &self.l,
            Slot::C => &self.c,
            Slot::R => &self.r,
            Slot::RR => &self.rr,
        }
    }

    /// `LL^L-C+R=RR`.
    pub fn parse(s: &str) -> Result<Self, (usize, String)> {
        // Each delimiter must appear exactly once and in order.
        let delims = ['^', '-', '+', '='];
        let mut parts = Vec::with_capacity(5);
        let mut start = 0;
        for d in delims {
            let Some(off) = s[start..].find(d) else {
                return Err((s.chars().count() + 1, format!("missing '{d}'")));
            };
            parts.push((start, &s[start..start + off]));
            start += off + d.len_utf8();
        }
        parts.push((start, &s[start..]));
        for (at, p) in &parts {
            if !valid_phone_symbol(p) {
                let col = s[..*at].chars().count() + 1;
                return Err((col, format!("invalid phone symbol {p:?}")));
            }
        }
        Ok(Pentaphone::new(parts[0].1, parts[1].1, parts[2].1, parts[3].1, parts[4].1))
    }
}

impl fmt::Display for Pentaphone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}-{}+{}={}", self.ll, self.l, self.c, self.r, self.rr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullContextLabel {
    /// Phone index in the utterance.
    pub position: usize,
    pub context: Pentaphone,
}

impl fmt::Display for FullContextLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.context.fmt(f)
    }
}

pub fn expand_contexts<S: AsRef<str>>(phones: &[S], phoneset: &PhoneSet) -> Result<Vec<FullContextLabel>, PhoneError> {
    if phones.is_empty() {
        return Err(PhoneError::EmptySequence);
    }
    if let Some(p) = phones.iter().find(|p| !phoneset.contains(p.as_ref())) {
        return Err(PhoneError::UnknownPhone(p.as_ref().to_string()));
    }
    let sil = phoneset.silence.as_str();
    let at = |i: isize| -> &str {
        if i < 0 || i as usize >= phones.len() {
            sil
        } else {
            phones[i as usize].as_ref()
        }
    };
    Ok((0..phones.len())
        .map(|i| {
            let i = i as isize;
            FullContextLabel {
                position: i as usize,
                context: Pentaphone::new(at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2)),
            }
        })
        .collect())
}

/// One label per line; positions are assigned from line order.
pub fn parse_label_file(text: &str) -> Result<Vec<FullContextLabel>, PhoneError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            Pentaphone::parse(line)
                .map(|context| FullContextLabel { position: i, context })
                .map_err(|(column, message)| PhoneError::Parse {
                    line: i + 1,
                    column,
                    message,
                })
        })
        .collect()
}

pub fn write_label_file(labels: &[FullContextLabel]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.context.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> PhoneSet {
        PhoneSet::new(&["sil", "k", "a", "m", "x"], "sil").unwrap()
    }

    fn ctx(l: &FullContextLabel) -> String {
        l.context.to_string()
    }

    #[test]
    fn padding() {
        let labels = expand_contexts(&["k", "a", "m"], &toy()).unwrap();
        let got: Vec<String> = labels.iter().map(ctx).collect();
        assert_eq!(got, vec!["sil^sil-k+a=m", "sil^k-a+m=sil", "k^a-m+sil=sil"]);
        let one = expand_contexts(&["x"], &toy()).unwrap();
        assert_eq!(ctx(&one[0]), "sil^sil-x+sil=sil");
        assert_eq!(expand_contexts::<&str>(&[], &toy()), Err(PhoneError::EmptySequence));
        assert_eq!(
            expand_contexts(&["q"], &toy()),
            Err(PhoneError::UnknownPhone("q".into()))
        );
    }

    #[test]
    fn parse_grammar() {
        let l = parse_label_file("sil^k-a+m=sil\n").unwrap();
        assert_eq!(l[0].context, Pentaphone::new("sil", "k", "a", "m", "sil"));
        match parse_label_file("sil^k-a+m=sil\nsil^k-a+m\n") {
            Err(PhoneError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_label_file("sil^k-+m=sil") {
            Err(PhoneError::Parse { line, column, .. }) => assert_eq!((line, column), (1, 7)),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn centers_and_boundaries(phones in prop::collection::vec(prop::sample::select(vec!["k", "a", "m", "x"]), 1..20)) {
            let labels = expand_contexts(&phones, &toy()).unwrap();
            prop_assert_eq!(labels.len(), phones.len());
            let centers: Vec<&str> = labels.iter().map(|l| l.context.c.as_str()).collect();
            prop_assert_eq!(&centers, &phones);
            let n = phones.len();
            for (i, l) in labels.iter().enumerate() {
                prop_assert_eq!(l.context.ll == "sil", i < 2);
                prop_assert_eq!(l.context.l == "sil", i < 1);
                prop_assert_eq!(l.context.r == "sil", i + 1 >= n);
                prop_assert_eq!(l.context.rr == "sil", i + 2 >= n);
            }
        }

        #[test]
        fn label_file_round_trip(rows in prop::collection::vec(prop::collection::vec("[a-z]{1,3}", 5), 0..100)) {
            let text: String = rows.iter().map(|r| format!("{}^{}-{}+{}={}\n", r[0], r[1], r[2], r[3], r[4])).collect();
            let parsed = parse_label_file(&text).unwrap();
            prop_assert_eq!(write_label_file(&parsed), text);
        }

        #[test]
        fn garbage_never_panics(text in "[a-z^+=\\-\n*]{0,60}") {
            let _ = parse_label_file(&text);
        }
    }
}
