//! Listening-test score aggregation.
//!
//! Ratings arrive as CSV with the header
//! `listener,item,system,quality,intelligibility,comprehension`; score fields
//! may be empty. Quality and intelligibility use a 1-5 scale, comprehension is
//! a correct/incorrect flag. Means are computed over sorted values so the
//! summaries do not depend on record order.
//!
//! Degradation scores compare each listener's mean for a system with the same
//! listener's mean for the ground-truth recordings, average those ratios over
//! listeners, scale by 5 and clamp to [1, 5].

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 5.0;

#[derive(Debug, Error)]
pub enum RatingError {
    #[error("no ratings for system {0:?}")]
    Empty(String),
    #[error("record {record}: {field} score {value} outside [1, 5]")]
    OutOfScale { record: usize, field: &'static str, value: f64 },
    #[error("record {record}: cannot read comprehension flag {value:?}")]
    BadFlag { record: usize, value: String },
    #[error("ratings file: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub listener: String,
    pub item: String,
    pub system: String,
    pub quality: Option<f64>,
    pub intelligibility: Option<f64>,
    pub comprehension: Option<bool>,
}

#[derive(Deserialize)]
struct RawRecord {
    listener: String,
    item: String,
    system: String,
    quality: Option<f64>,
    intelligibility: Option<f64>,
    comprehension: Option<String>,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "correct" | "y" => Some(true),
        "0" | "false" | "no" | "incorrect" | "n" => Some(false),
        _ => None,
    }
}

pub fn read_ratings<R: Read>(reader: R) -> Result<Vec<RatingRecord>, RatingError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RawRecord>().enumerate() {
        let raw = row?;
        let record = i + 1;
        for (field, value) in [("quality", raw.quality), ("intelligibility", raw.intelligibility)] {
            if let Some(v) = value {
                if !(SCALE_MIN..=SCALE_MAX).contains(&v) {
                    return Err(RatingError::OutOfScale { record, field, value: v });
                }
            }
        }
        let comprehension = match raw.comprehension.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(parse_flag(s).ok_or_else(|| RatingError::BadFlag {
                record,
                value: s.to_string(),
            })?),
        };
        out.push(RatingRecord {
            listener: raw.listener,
            item: raw.item,
            system: raw.system,
            quality: raw.quality,
            intelligibility: raw.intelligibility,
            comprehension,
        });
    }
    Ok(out)
}

/// Ratings of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSet {
    pub system: String,
    pub records: Vec<RatingRecord>,
}

pub fn group_by_system(records: Vec<RatingRecord>) -> Vec<RatingSet> {
    let mut map: BTreeMap<String, Vec<RatingRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.system.clone()).or_default().push(r);
    }
    map.into_iter().map(|(system, records)| RatingSet { system, records }).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmosField {
    Quality,
    #[default]
    Intelligibility,
}

impl DmosField {
    fn of(self, r: &RatingRecord) -> Option<f64> {
        match self {
            DmosField::Quality => r.quality,
            DmosField::Intelligibility => r.intelligibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub system: String,
    pub ratings: usize,
    pub mos: Option<f64>,
    pub intelligibility: Option<f64>,
    /// Percentage of correct comprehension answers.
    pub comprehension: Option<f64>,
    pub dmos: Option<f64>,
}

impl ScoreSummary {
    /// `MOS / intelligibility / comprehension%`, e.g. `3.486 / 4.241 / 94.25%`.
    pub fn table_row(&self) -> String {
        let f3 = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let pct = self.comprehension.map_or("-".to_string(), |x| format!("{x:.2}%"));
        format!("{} / {} / {}", f3(self.mos), f3(self.intelligibility), pct)
    }
}

fn sorted_mean(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

fn listener_means(records: &[RatingRecord], field: DmosField) -> BTreeMap<&str, f64> {
    let mut per: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = field.of(r) {
            per.entry(r.listener.as_str()).or_default().push(v);
        }
    }
    per.into_iter().filter_map(|(l, v)| Some((l, sorted_mean(v)?))).collect()
}

pub fn summarize_ratings(set: &RatingSet, ground_truth: Option<&RatingSet>, dmos_field: DmosField) -> Result<ScoreSummary, RatingError> {
    if set.records.is_empty() {
        return Err(RatingError::Empty(set.system.clone()));
    }
    let mos = sorted_mean(set.records.iter().filter_map(|r| r.quality).collect());
    let intelligibility = sorted_mean(set.records.iter().filter_map(|r| r.intelligibility).collect());
    let flags: Vec<bool> = set.records.iter().filter_map(|r| r.comprehension).collect();
    let comprehension =
        (!flags.is_empty()).then(|| 100.0 * flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64);
    let dmos = ground_truth.and_then(|gt| {
        let sys = listener_means(&set.records, dmos_field);
        let reference = listener_means(&gt.records, dmos_field);
        let ratios: Vec<f64> = sys
            .iter()
            .filter_map(|(l, s)| reference.get(l).map(|g| s / g))
            .collect();
        sorted_mean(ratios).map(|r| (r * SCALE_MAX).clamp(SCALE_MIN, SCALE_MAX))
    });
    Ok(ScoreSummary {
        system: set.system.clone(),
        ratings: set.records.len(),
        mos,
        intelligibility,
        comprehension,
        dmos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(listener: &str, system: &str, q: Option<f64>, i: Option<f64>, c: Option<bool>) -> RatingRecord {
        RatingRecord {
            listener: listener.into(),
            item: "i".into(),
            system: system.into(),
            quality: q,
            intelligibility: i,
            comprehension: c,
        }
    }

    #[test]
    fn mos_and_comprehension() {
        let set = RatingSet {
            system: "s".into(),
            records: [4.0, 5.0, 4.0, 5.0].iter().map(|q| rec("l", "s", Some(*q), None, None)).collect(),
        };
        let s = summarize_ratings(&set, None, DmosField::Quality).unwrap();
        assert_eq!(s.mos, Some(4.5));
        assert_eq!(s.comprehension, None);

        let set = RatingSet {
            system: "s".into(),
            records: (0..20).map(|i| rec("l", "s", None, None, Some(i != 7))).collect(),
        };
        let s = summarize_ratings(&set, None, DmosField::Quality).unwrap();
        assert_eq!(s.comprehension, Some(95.0));
    }

    #[test]
    fn table_row_format() {
        let s = ScoreSummary {
            system: "Baseline 1".into(),
            ratings: 1,
            mos: Some(3.486),
            intelligibility: Some(4.241),
            comprehension: Some(94.25),
            dmos: None,
        };
        assert_eq!(s.table_row(), "3.486 / 4.241 / 94.25%");
    }

    #[test]
    fn dmos_per_listener_ratio() {
        let sys = RatingSet {
            system: "s".into(),
            records: vec![rec("a", "s", None, Some(3.0), None), rec("b", "s", None, Some(4.0), None)],
        };
        let gt = RatingSet {
            system: "gt".into(),
            records: vec![rec("a", "gt", None, Some(5.0), None), rec("b", "gt", None, Some(4.0), None)],
        };
        let s = summarize_ratings(&sys, Some(&gt), DmosField::Intelligibility).unwrap();
        // ratios 0.6 and 1.0 -> 0.8 * 5 = 4.0
        assert!((s.dmos.unwrap() - 4.0).abs() < 1e-12);
        let high = RatingSet {
            system: "s".into(),
            records: vec![rec("a", "s", None, Some(5.0), None)],
        };
        let low = RatingSet {
            system: "gt".into(),
            records: vec![rec("a", "gt", None, Some(2.0), None)],
        };
        assert_eq!(summarize_ratings(&high, Some(&low), DmosField::Intelligibility).unwrap().dmos, Some(5.0));
    }

    #[test]
    fn csv_ingest() {
        let text = "listener,item,system,quality,intelligibility,comprehension\nl1,u1,A,4,5,correct\nl1,u2,B,,3,0\n";
        let recs = read_ratings(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].quality, None);
        assert_eq!(recs[1].comprehension, Some(false));
        let groups = group_by_system(recs);
        assert_eq!(groups.iter().map(|g| g.system.as_str()).collect::<Vec<_>>(), vec!["A", "B"]);

        let bad = "listener,item,system,quality,intelligibility,comprehension\nl1,u1,A,7,,\n";
        assert!(matches!(read_ratings(bad.as_bytes()), Err(RatingError::OutOfScale { record: 1, .. })));
        let empty = RatingSet {
            system: "x".into(),
            records: vec![],
        };
        assert!(summarize_ratings(&empty, None, DmosField::Quality).is_err());
    }
}
