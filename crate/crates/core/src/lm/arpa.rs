//! ARPA back-off model files.
//!
//! Layout: a `\data\` header with one `ngram K=N` line per order, then one
//! `\K-grams:` section per order holding `log10prob<TAB>w1 .. wK[<TAB>log10backoff]`
//! lines, and a closing `\end\`. Values are written with the shortest
//! representation that round-trips, so exports are exact and deterministic.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Entry, LmError, NgramModel, WordId};

pub fn write(model: &NgramModel) -> String {
    let mut out = String::new();
    out.push_str("\\data\\\n");
    for (k, table) in model.entries().iter().enumerate() {
        let _ = writeln!(out, "ngram {}={}", k + 1, table.len());
    }
    for (k, table) in model.entries().iter().enumerate() {
        let _ = write!(out, "\n\\{}-grams:\n", k + 1);
        for (gram, e) in table {
            let words: Vec<&str> = gram.iter().map(|id| model.word(*id)).collect();
            let _ = write!(out, "{}\t{}", e.log10_prob, words.join(" "));
            if let Some(b) = e.log10_backoff {
                let _ = write!(out, "\t{b}");
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

fn err(line: usize, message: impl Into<String>) -> LmError {
    LmError::Arpa {
        line,
        message: message.into(),
    }
}

pub fn parse(text: &str) -> Result<NgramModel, LmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut declared: Vec<usize> = Vec::new();
    let mut state_line = 0;
    // Header.
    loop {
        let Some((n, l)) = lines.next() else {
            return Err(err(state_line, "missing \\data\\ header"));
        };
        state_line = n;
        if l.is_empty() {
            continue;
        }
        if l != "\\data\\" {
            return Err(err(n, format!("expected \\data\\, found {l:?}")));
        }
        break;
    }
    let mut pending: Option<(usize, &str)> = None;
    for (n, l) in lines.by_ref() {
        state_line = n;
        if l.is_empty() {
            if !declared.is_empty() {
                break;
            }
            continue;
        }
        if let Some(rest) = l.strip_prefix("ngram ") {
            let (k, c) = rest
                .split_once('=')
                .ok_or_else(|| err(n, format!("malformed count line {l:?}")))?;
            let k: usize = k.trim().parse().map_err(|_| err(n, format!("non-numeric order in {l:?}")))?;
            let c: usize = c.trim().parse().map_err(|_| err(n, format!("non-numeric count in {l:?}")))?;
            if k != declared.len() + 1 {
                return Err(err(n, format!("expected ngram {} in header, found ngram {k}", declared.len() + 1)));
            }
            declared.push(c);
        } else {
            pending = Some((n, l));
            break;
        }
    }
    if declared.is_empty() {
        return Err(err(state_line, "header declares no n-gram orders"));
    }
    let order = declared.len();

    let mut vocab: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, WordId> = BTreeMap::new();
    let mut entries: Vec<BTreeMap<Vec<WordId>, Entry>> = vec![BTreeMap::new(); order];
    let mut section: Option<(usize, usize)> = None; // (order, header line)
    let mut seen_end = false;

    let check_section = |section: Option<(usize, usize)>, entries: &Vec<BTreeMap<Vec<WordId>, Entry>>| {
        if let Some((k, at)) = section {
            let got = entries[k - 1].len();
            if got != declared[k - 1] {
                return Err(err(
                    at,
                    format!("\\{k}-grams: header declares {} entries, section lists {got}", declared[k - 1]),
                ));
            }
        }
        Ok(())
    };

    let rest = pending.into_iter().chain(lines);
    let mut expected_next = 1;
    for (n, l) in rest {
        state_line = n;
        if l.is_empty() {
            continue;
        }
        if seen_end {
            return Err(err(n, format!("content after \\end\\: {l:?}")));
        }
        if l == "\\end\\" {
            check_section(section, &entries)?;
            seen_end = true;
            continue;
        }
        if let Some(k) = l.strip_prefix('\\').and_then(|s| s.strip_suffix("-grams:")) {
            check_section(section, &entries)?;
            let k: usize = k.parse().map_err(|_| err(n, format!("malformed section header {l:?}")))?;
            if k != expected_next || k > order {
                return Err(err(n, format!("unexpected section \\{k}-grams:")));
            }
            expected_next += 1;
            section = Some((k, n));
            continue;
        }
        let Some((k, _)) = section else {
            return Err(err(n, format!("n-gram line outside a section: {l:?}")));
        };
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(err(n, format!("expected {} or {} fields for a {k}-gram, found {}", k + 1, k + 2, fields.len())));
        }
        let log10_prob: f64 = fields[0]
            .parse()
            .map_err(|_| err(n, format!("non-numeric probability {:?}", fields[0])))?;
        let log10_backoff = match fields.get(k + 1) {
            Some(b) => Some(b.parse::<f64>().map_err(|_| err(n, format!("non-numeric backoff {b:?}")))?),
            None => None,
        };
        if log10_prob > 0.0 || log10_backoff.is_some_and(|b| b.is_nan()) || log10_prob.is_nan() {
            return Err(err(n, format!("log probability out of range: {}", fields[0])));
        }
        let mut gram = Vec::with_capacity(k);
        for w in &fields[1..=k] {
            let id = match index.get(*w) {
                Some(id) => *id,
                None if k == 1 => {
                    let id = vocab.len() as WordId;
                    vocab.push(w.to_string());
                    index.insert(w.to_string(), id);
                    id
                }
                None => return Err(err(n, format!("word {w:?} has no unigram entry"))),
            };
            gram.push(id);
        }
        if entries[k - 1]
            .insert(
                gram,
                Entry {
                    log10_prob,
                    log10_backoff,
                },
            )
            .is_some()
        {
            return Err(err(n, format!("duplicate {k}-gram {:?}", fields[1..=k].join(" "))));
        }
    }
    if !seen_end {
        return Err(err(state_line, "missing \\end\\ marker"));
    }
    if expected_next != order + 1 {
        return Err(err(state_line, format!("missing \\{expected_next}-grams: section")));
    }
    Ok(NgramModel::from_parts(order, vocab, entries))
}
