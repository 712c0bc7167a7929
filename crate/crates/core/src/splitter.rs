//! Splitting sentences at improbable word transitions.
//!
//! Every interior bigram of a sentence is scored with the LM; where the score
//! is strictly below the threshold the sentence is cut after the left word.
//! Bigrams involving the start or end marker never cut. The pieces are then
//! synthesized separately and concatenated in order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::lm::{LmError, NgramModel, ScoredBigram};
use crate::textnorm::NormalizedSentence;

/// Threshold used when none is configured, in the model's log base.
pub const DEFAULT_THRESHOLD: f64 = -5.12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPoint {
    /// Token index of the left word; the cut falls right after it.
    pub index: usize,
    pub bigram: ScoredBigram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    pub segments: Vec<Vec<String>>,
    pub split_points: Vec<SplitPoint>,
    pub threshold: f64,
}

impl SplitResult {
    pub fn tokens(&self) -> Vec<String> {
        self.segments.concat()
    }
}

pub fn split(model: &NgramModel, sentence: &NormalizedSentence, threshold: f64) -> Result<SplitResult, LmError> {
    let scored = model.score_bigrams(sentence)?;
    let n = sentence.tokens.len();
    let mut segments = Vec::new();
    let mut split_points = Vec::new();
    let mut start = 0;
    // scored[i] is the pair (token i-1, token i); interior pairs are 1..n.
    for (i, bigram) in scored.into_iter().enumerate().take(n).skip(1) {
        if bigram.log_likelihood < threshold {
            segments.push(sentence.tokens[start..i].to_vec());
            split_points.push(SplitPoint { index: i - 1, bigram });
            start = i;
        }
    }
    if n > 0 {
        segments.push(sentence.tokens[start..].to_vec());
    }
    Ok(SplitResult {
        segments,
        split_points,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisPlan {
    pub items: Vec<String>,
    /// Silence inserted between consecutive items, in frames.
    pub pause_frames: usize,
}

impl SynthesisPlan {
    pub fn joins(&self) -> usize {
        self.items.len().saturating_sub(1)
    }

    /// Text of the whole plan with items joined by single spaces.
    pub fn joined_text(&self) -> String {
        self.items.join(" ")
    }
}

pub fn plan_synthesis(result: &SplitResult, pause_frames: usize) -> SynthesisPlan {
    SynthesisPlan {
        items: result.segments.iter().map(|s| s.join(" ")).collect(),
        pause_frames,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub split_points: usize,
    /// Segment length (tokens) -> number of segments.
    pub segment_lengths: BTreeMap<usize, usize>,
}

/// Split statistics for a set of candidate thresholds. Purely descriptive; no
/// threshold is picked.
pub fn sweep(model: &NgramModel, sentences: &[NormalizedSentence], thresholds: &[f64]) -> Result<Vec<SweepRow>, LmError> {
    let scored = sentences
        .iter()
        .map(|s| model.score_bigrams(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let mut row = SweepRow {
                threshold,
                split_points: 0,
                segment_lengths: BTreeMap::new(),
            };
            for (s, bigrams) in sentences.iter().zip(&scored) {
                let n = s.tokens.len();
                let mut start = 0;
                for i in 1..n {
                    if bigrams[i].log_likelihood < threshold {
                        row.split_points += 1;
                        *row.segment_lengths.entry(i - start).or_default() += 1;
                        start = i;
                    }
                }
                if n > 0 {
                    *row.segment_lengths.entry(n - start).or_default() += 1;
                }
            }
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::LmConfig;
    use proptest::prelude::*;

    fn model() -> NgramModel {
        let corpus: Vec<NormalizedSentence> = [vec!["a", "b", "c"], vec!["a", "c"], vec!["b", "c", "a"]]
            .iter()
            .enumerate()
            .map(|(i, t)| NormalizedSentence::from_tokens(&i.to_string(), t))
            .collect();
        NgramModel::train(&corpus, &LmConfig::default()).unwrap()
    }

    #[test]
    fn extreme_thresholds() {
        let m = model();
        let s = NormalizedSentence::from_tokens("x", &["a", "b", "c", "a"]);
        let none = split(&m, &s, f64::NEG_INFINITY).unwrap();
        assert_eq!(none.segments.len(), 1);
        assert!(none.split_points.is_empty());
        let all = split(&m, &s, 0.0).unwrap();
        assert_eq!(all.segments, vec![vec!["a"], vec!["b"], vec!["c"], vec!["a"]]);
        assert_eq!(all.split_points.iter().map(|p| p.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn ties_do_not_split() {
        let m = model();
        let s = NormalizedSentence::from_tokens("x", &["a", "b"]);
        let score = m.score_bigrams(&s).unwrap()[1].log_likelihood;
        assert!(split(&m, &s, score).unwrap().split_points.is_empty());
        assert_eq!(split(&m, &s, score + 1e-9).unwrap().split_points.len(), 1);
    }

    #[test]
    fn single_token_and_empty() {
        let m = model();
        let r = split(&m, &NormalizedSentence::from_tokens("x", &["a"]), 0.0).unwrap();
        assert_eq!(r.segments, vec![vec!["a"]]);
        let r = split(&m, &NormalizedSentence::from_tokens::<&str>("x", &[]), 0.0).unwrap();
        assert!(r.segments.is_empty());
    }

    #[test]
    fn plans() {
        let m = model();
        let s = NormalizedSentence::from_tokens("x", &["a", "b", "c"]);
        let one = plan_synthesis(&split(&m, &s, f64::NEG_INFINITY).unwrap(), 0);
        assert_eq!((one.items.len(), one.joins()), (1, 0));
        let three = plan_synthesis(&split(&m, &s, 0.0).unwrap(), 4);
        assert_eq!((three.items.len(), three.joins(), three.pause_frames), (3, 2, 4));
        assert_eq!(three.joined_text(), s.text());
    }

    #[test]
    fn sweep_counts_agree_with_split() {
        let m = model();
        let sents = vec![
            NormalizedSentence::from_tokens("1", &["a", "b", "c", "a"]),
            NormalizedSentence::from_tokens("2", &["c", "c"]),
        ];
        let rows = sweep(&m, &sents, &[-1.0, -0.5, 0.0]).unwrap();
        for row in rows {
            let expected: usize = sents.iter().map(|s| split(&m, s, row.threshold).unwrap().split_points.len()).sum();
            assert_eq!(row.split_points, expected);
            let segs: usize = row.segment_lengths.values().sum();
            assert_eq!(segs, expected + sents.len());
        }
    }

    proptest! {
        #[test]
        fn partition_and_monotone(words in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..12),
                                  t1 in -4.0f64..0.0, dt in 0.0f64..2.0) {
            let m = model();
            let s = NormalizedSentence::from_tokens("x", &words);
            let lo = split(&m, &s, t1).unwrap();
            let hi = split(&m, &s, t1 + dt).unwrap();
            prop_assert_eq!(lo.tokens(), s.tokens.clone());
            prop_assert!(lo.segments.iter().all(|seg| !seg.is_empty()));
            prop_assert!(lo.split_points.iter().all(|p| p.bigram.log_likelihood < t1));
            prop_assert!(hi.split_points.len() >= lo.split_points.len());
        }
    }
}
