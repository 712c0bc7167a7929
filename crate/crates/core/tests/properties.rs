use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use convaug::cluster::{node_log_likelihood, ClusterTree, ContextStats, Node, Pool, TreeConfig};
use convaug::eval::errors::edit_distance;
use convaug::eval::ratings::{summarize_ratings, DmosField, RatingRecord, RatingSet};
use convaug::eval::{align, count_errors, significance_test};
use convaug::lm::{LmConfig, NgramModel, EOS, UNK};
use convaug::phone::{Pentaphone, Question, QuestionSet, Slot};
use convaug::pipeline::manifest::{CorpusManifest, ManifestRecord, Stage};
use convaug::splitter;
use convaug::textnorm::{normalize_corpus, NormalizationConfig, NormalizedSentence, RawDocument};

fn corpus() -> impl Strategy<Value = Vec<Vec<&'static str>>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 1..7), 1..8)
}

fn train(c: &[Vec<&str>], order: usize) -> NgramModel {
    let s: Vec<NormalizedSentence> = c.iter().map(|t| NormalizedSentence::from_tokens("s", t)).collect();
    NgramModel::train(&s, &LmConfig { order, ..LmConfig::default() }).unwrap()
}

fn phone() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["sil", "a", "k", "m"])
}

fn pentaphone() -> impl Strategy<Value = Pentaphone> {
    prop::array::uniform5(phone()).prop_map(|p| Pentaphone::new(p[0], p[1], p[2], p[3], p[4]))
}

fn toy_questions() -> QuestionSet {
    let mut questions = Vec::new();
    for slot in Slot::ALL {
        for (name, members) in [("Vowel", &["a"][..]), ("Nasal", &["m"]), ("Stop", &["k"]), ("Silence", &["sil"])] {
            questions.push(Question::new(&format!("{}-{name}", slot.name()), slot, members));
        }
    }
    QuestionSet { questions }
}

fn stats() -> impl Strategy<Value = BTreeMap<Pentaphone, ContextStats>> {
    prop::collection::btree_map(pentaphone(), prop::collection::vec(-3.0f64..3.0, 1..8), 1..30).prop_map(|m| {
        m.into_iter()
            .map(|(c, xs)| {
                let mut s = ContextStats::empty(c.clone(), 1);
                for x in xs {
                    s.occupancy += 1.0;
                    s.sum[0] += x;
                    s.sum_sq[0] += x * x;
                }
                (c, s)
            })
            .collect()
    })
}

/// Stats of the training contexts that reach each node.
fn reach(tree: &ClusterTree, stats: &BTreeMap<Pentaphone, ContextStats>) -> Vec<Vec<Pentaphone>> {
    let mut at = vec![Vec::new(); tree.nodes().len()];
    for c in stats.keys() {
        let mut i = 0;
        loop {
            at[i].push(c.clone());
            match &tree.nodes()[i] {
                Node::Leaf(_) => break,
                Node::Split { question, yes, no } => {
                    i = if tree.questions()[*question].answers_yes(c) { *yes } else { *no };
                }
            }
        }
    }
    at
}

fn pooled(stats: &BTreeMap<Pentaphone, ContextStats>, which: &[Pentaphone]) -> Pool {
    Pool::of(which.iter().map(|c| &stats[c]), 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lm_histories_normalize(c in corpus(), order in 1usize..=3) {
        let m = train(&c, order);
        let words: Vec<String> = m.predictable_words().map(String::from).collect();
        let mut histories: Vec<Vec<&str>> = vec![vec![]];
        for _ in 1..order {
            histories = histories
                .into_iter()
                .flat_map(|h| m.vocab().iter().map(move |w| { let mut h = h.clone(); h.push(w.as_str()); h }))
                .collect();
        }
        for h in histories {
            let sum: f64 = words.iter().map(|w| m.prob(&h, w)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "history {:?} sums to {}", h, sum);
            for w in &words {
                let p = m.prob(&h, w);
                prop_assert!(p > 0.0 && p <= 1.0);
            }
        }
    }

    #[test]
    fn arpa_is_deterministic_and_round_trips(c in corpus(), order in 1usize..=3) {
        let a = train(&c, order);
        let b = train(&c, order);
        prop_assert_eq!(a.to_arpa(), b.to_arpa());
        let back = NgramModel::from_arpa(&a.to_arpa()).unwrap();
        for (x, y) in a.entries().iter().zip(back.entries()) {
            prop_assert_eq!(x.len(), y.len());
            for ((gx, ex), (gy, ey)) in x.iter().zip(y) {
                let wx: Vec<&str> = gx.iter().map(|i| a.word(*i)).collect();
                let wy: Vec<&str> = gy.iter().map(|i| back.word(*i)).collect();
                prop_assert_eq!(wx, wy);
                prop_assert!((ex.log10_prob - ey.log10_prob).abs() <= 1e-6);
                match (ex.log10_backoff, ey.log10_backoff) {
                    (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-6),
                    (p, q) => prop_assert_eq!(p, q),
                }
            }
        }
    }

    #[test]
    fn scoring_contracts(c in corpus(), s in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "zz"]), 1..9)) {
        let m = train(&c, 2);
        let sent = NormalizedSentence::from_tokens("q", &s);
        let pairs = m.score_bigrams(&sent).unwrap();
        prop_assert_eq!(pairs.len(), s.len() + 1);
        prop_assert_eq!(pairs.last().unwrap().right.as_str(), EOS);
        let mut running = 0.0;
        for p in &pairs {
            prop_assert!(p.log_likelihood.is_finite() && p.log_likelihood <= 0.0);
            let next = running + p.log_likelihood;
            prop_assert!(next <= running);
            running = next;
        }
        prop_assert!((running - m.sentence_log_likelihood(&sent)).abs() < 1e-9);
        // Out-of-vocabulary words score exactly as the unknown marker.
        let unk: Vec<&str> = s.iter().map(|w| if *w == "zz" { UNK } else { *w }).collect();
        let as_unk = m.sentence_log_likelihood(&NormalizedSentence::from_tokens("u", &unk));
        prop_assert_eq!(running, as_unk);
    }

    #[test]
    fn split_ties_do_not_split(c in corpus(), s in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 2..9)) {
        let m = train(&c, 2);
        let sent = NormalizedSentence::from_tokens("q", &s);
        let pairs = m.score_bigrams(&sent).unwrap();
        for p in &pairs[1..s.len()] {
            let r = splitter::split(&m, &sent, p.log_likelihood).unwrap();
            prop_assert!(r.split_points.iter().all(|q| q.bigram.log_likelihood < p.log_likelihood));
            prop_assert_eq!(r.tokens(), s.iter().map(|t| t.to_string()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn tree_gains_partition_and_determinism(st in stats(), min_gain in 0.0f64..3.0, min_occ in 1.0f64..6.0) {
        let qs = toy_questions();
        let cfg = TreeConfig { min_occupancy: min_occ, min_gain };
        let tree = ClusterTree::grow(&st, &qs, &cfg);
        prop_assert_eq!(&tree, &ClusterTree::grow(&st, &qs, &cfg));
        let at = reach(&tree, &st);
        let mut leaf_ll = 0.0;
        for (i, node) in tree.nodes().iter().enumerate() {
            match node {
                Node::Leaf(_) => leaf_ll += node_log_likelihood(&pooled(&st, &at[i])).unwrap(),
                Node::Split { yes, no, .. } => {
                    prop_assert_eq!(at[*yes].len() + at[*no].len(), at[i].len());
                    prop_assert!(at[*yes].iter().all(|c| !at[*no].contains(c)));
                    let gain = node_log_likelihood(&pooled(&st, &at[*yes])).unwrap()
                        + node_log_likelihood(&pooled(&st, &at[*no])).unwrap()
                        - node_log_likelihood(&pooled(&st, &at[i])).unwrap();
                    prop_assert!(gain >= min_gain - 1e-9, "split gain {} below {}", gain, min_gain);
                }
            }
        }
        let root = node_log_likelihood(&pooled(&st, &at[0])).unwrap();
        prop_assert!(root <= leaf_ll + 1e-9);
    }

    #[test]
    fn error_counts_equal_edit_distance(
        r in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..12),
        h in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..12),
    ) {
        let u = count_errors("u", &r, &h);
        prop_assert_eq!(u.counts.edits(), edit_distance(&r, &h));
        prop_assert_eq!(align(&r, &h), align(&r, &h));
        prop_assert_eq!(u.trace, align(&r, &h));
    }

    #[test]
    fn significance_is_symmetric(
        a in prop::collection::vec(1.0f64..5.0, 2..15),
        b in prop::collection::vec(1.0f64..5.0, 2..15),
    ) {
        let p = significance_test(&a, &b, false).unwrap();
        prop_assert_eq!(p, significance_test(&b, &a, false).unwrap());
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn ratings_are_permutation_invariant(
        rows in prop::collection::vec((0usize..4, 0usize..5, 1u8..=5, 1u8..=5, any::<bool>()), 1..40),
        seed in any::<u64>(),
    ) {
        let record = |(l, i, q, s, c): &(usize, usize, u8, u8, bool), system: &str| RatingRecord {
            listener: format!("L{l}"),
            item: format!("i{i}"),
            system: system.into(),
            quality: Some(*q as f64),
            intelligibility: Some(*s as f64),
            comprehension: Some(*c),
        };
        let set = RatingSet { system: "sys".into(), records: rows.iter().map(|r| record(r, "sys")).collect() };
        let truth = RatingSet { system: "gt".into(), records: rows.iter().map(|r| record(&(r.0, r.1, 5, 5, true), "gt")).collect() };
        let mut shuffled = set.clone();
        let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut shuffled.records[..], &mut rng);
        let a = summarize_ratings(&set, Some(&truth), DmosField::Intelligibility).unwrap();
        let b = summarize_ratings(&shuffled, Some(&truth), DmosField::Intelligibility).unwrap();
        prop_assert_eq!(&a, &b);
        let dmos = a.dmos.unwrap();
        prop_assert!((1.0..=5.0).contains(&dmos));
    }

    #[test]
    fn sentence_count_matches_segments(texts in prop::collection::vec("[a-c ,.?!#|]{0,30}", 1..6)) {
        let cfg = NormalizationConfig::default();
        let docs: Vec<RawDocument> = texts.iter().enumerate().map(|(i, t)| RawDocument::new(format!("d{i}"), t.clone(), "t")).collect();
        let out = normalize_corpus(&docs, &cfg);
        let expected: usize = texts
            .iter()
            .map(|t| {
                t.split(['.', '?', '!'])
                    .filter(|seg| seg.chars().any(|c| c.is_alphanumeric()))
                    .count()
            })
            .sum();
        prop_assert_eq!(out.sentences.len(), expected);
        for s in &out.sentences {
            for t in &s.tokens {
                prop_assert!(!t.contains(|c: char| cfg.strip_set.contains(&c) || cfg.sentence_delimiters.contains(&c)));
            }
        }
    }

    #[test]
    fn manifest_round_trip_keeps_stages_apart(
        rows in prop::collection::vec(("[a-z]{1,6}", any::<bool>(), "[a-z ]{1,20}"), 0..20),
    ) {
        let records: Vec<ManifestRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, (src, synth, text))| ManifestRecord {
                id: format!("r{i}"),
                stage: if *synth { Stage::SyntheticPretrain } else { Stage::CleanFinetune },
                source: src.clone(),
                text: text.clone(),
                label_path: PathBuf::from(format!("labels/r{i}.lab")),
                feature_path: PathBuf::from(format!("features/r{i}.f32")),
            })
            .collect();
        let m = CorpusManifest::new(records);
        let text = m.to_text().unwrap();
        let back = CorpusManifest::parse(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_text().unwrap(), text);
        let synth = back.stage(Stage::SyntheticPretrain).count();
        let clean = back.stage(Stage::CleanFinetune).count();
        prop_assert_eq!(synth + clean, back.records.len());
    }
}
