//! Decision-tree state tying.
//!
//! Contexts are pooled under single diagonal Gaussians. A node's log-likelihood
//! is `-0.5 * occ * (d * ln(2*pi*e) + sum_k ln var_k)` with the pooled variance
//! floored per dimension. Trees grow top-down: each node takes the question with
//! the largest likelihood gain (earliest question on ties) provided both children
//! keep `min_occupancy` frames and the gain strictly exceeds `min_gain`.
//!
//! Routing answers each question on the label itself, so every syntactically
//! valid label reaches a leaf, including contexts absent from training.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phone::{parse_question_file, FullContextLabel, Pentaphone, Question, QuestionSet};

pub const VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("utterance {utterance}: {labels} labels but {blocks} frame blocks")]
    BlockCountMismatch {
        utterance: usize,
        labels: usize,
        blocks: usize,
    },
    #[error("pool has zero occupancy")]
    ZeroOccupancy,
    #[error("tree file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("alignment file line {line}: {message}")]
    Alignment { line: usize, message: String },
}

/// Sufficient statistics for one context (or a pool of contexts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextStats {
    pub context: Pentaphone,
    /// Number of frames.
    pub occupancy: f64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl ContextStats {
    pub fn empty(context: Pentaphone, dim: usize) -> Self {
        ContextStats {
            context,
            occupancy: 0.0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.occupancy).collect()
    }

    fn add_frame(&mut self, frame: &[f64]) {
        self.occupancy += 1.0;
        for (k, x) in frame.iter().enumerate() {
            self.sum[k] += x;
            self.sum_sq[k] += x * x;
        }
    }

    fn add(&mut self, other: &Pool) {
        self.occupancy += other.occupancy;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }
}

/// Merged statistics with no context attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub occupancy: f64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Pool {
    pub fn new(dim: usize) -> Self {
        Pool {
            occupancy: 0.0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn of<'a>(stats: impl IntoIterator<Item = &'a ContextStats>, dim: usize) -> Self {
        let mut p = Pool::new(dim);
        for s in stats {
            p.occupancy += s.occupancy;
            for k in 0..dim {
                p.sum[k] += s.sum[k];
                p.sum_sq[k] += s.sum_sq[k];
            }
        }
        p
    }

    pub fn merge(&mut self, other: &Pool) {
        self.occupancy += other.occupancy;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.occupancy).collect()
    }

    /// Unfloored population variance per dimension (clamped at 0).
    pub fn raw_variance(&self) -> Vec<f64> {
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, sq)| {
                let m = s / self.occupancy;
                (sq / self.occupancy - m * m).max(0.0)
            })
            .collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        self.raw_variance().into_iter().map(|v| v.max(VARIANCE_FLOOR)).collect()
    }
}

/// Per-phone frame blocks for one aligned utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedUtterance {
    pub labels: Vec<FullContextLabel>,
    /// `frames[i]` holds the frames of phone `i`, each a feature vector.
    pub frames: Vec<Vec<Vec<f64>>>,
}

fn check_shape(utts: &[AlignedUtterance]) -> Result<Option<usize>, ClusterError> {
    let mut dim = None;
    for (u, utt) in utts.iter().enumerate() {
        if utt.labels.len() != utt.frames.len() {
            return Err(ClusterError::BlockCountMismatch {
                utterance: u,
                labels: utt.labels.len(),
                blocks: utt.frames.len(),
            });
        }
        for frame in utt.frames.iter().flatten() {
            match dim {
                None => dim = Some(frame.len()),
                Some(d) if d != frame.len() => {
                    return Err(ClusterError::DimensionMismatch {
                        expected: d,
                        found: frame.len(),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(dim)
}

/// Frame-level statistics per distinct context.
pub fn accumulate_stats(utts: &[AlignedUtterance]) -> Result<BTreeMap<Pentaphone, ContextStats>, ClusterError> {
    let dim = check_shape(utts)?.unwrap_or(0);
    let mut out: BTreeMap<Pentaphone, ContextStats> = BTreeMap::new();
    for utt in utts {
        for (label, block) in utt.labels.iter().zip(&utt.frames) {
            if block.is_empty() {
                continue;
            }
            let entry = out
                .entry(label.context.clone())
                .or_insert_with(|| ContextStats::empty(label.context.clone(), dim));
            for frame in block {
                entry.add_frame(frame);
            }
        }
    }
    Ok(out)
}

/// One-dimensional statistics over phone durations: every occurrence is one
/// sample whose value is its frame count.
pub fn duration_stats(utts: &[AlignedUtterance]) -> Result<BTreeMap<Pentaphone, ContextStats>, ClusterError> {
    check_shape(utts)?;
    let mut out: BTreeMap<Pentaphone, ContextStats> = BTreeMap::new();
    for utt in utts {
        for (label, block) in utt.labels.iter().zip(&utt.frames) {
            if block.is_empty() {
                continue;
            }
            out.entry(label.context.clone())
                .or_insert_with(|| ContextStats::empty(label.context.clone(), 1))
                .add_frame(&[block.len() as f64]);
        }
    }
    Ok(out)
}

/// Merges two stats maps; statistics are additive.
pub fn merge_stats(into: &mut BTreeMap<Pentaphone, ContextStats>, other: BTreeMap<Pentaphone, ContextStats>) {
    for (ctx, s) in other {
        match into.get_mut(&ctx) {
            Some(e) => e.add(&Pool {
                occupancy: s.occupancy,
                sum: s.sum,
                sum_sq: s.sum_sq,
            }),
            None => {
                into.insert(ctx, s);
            }
        }
    }
}

pub fn node_log_likelihood(pool: &Pool) -> Result<f64, ClusterError> {
    if pool.occupancy <= 0.0 {
        return Err(ClusterError::ZeroOccupancy);
    }
    let d = pool.sum.len() as f64;
    let log_det: f64 = pool.variance().iter().map(|v| v.ln()).sum();
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(-0.5 * pool.occupancy * (d * two_pi_e.ln() + log_det))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub min_occupancy: f64,
    pub min_gain: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_occupancy: 10.0,
            min_gain: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub id: usize,
    pub occupancy: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { question: usize, yes: usize, no: usize },
    Leaf(Leaf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    dim: usize,
    /// Questions used by split nodes.
    questions: Vec<Question>,
    /// Node 0 is the root.
    nodes: Vec<Node>,
}

/// Best split of a set of contexts, if any question yields two children that
/// both meet the occupancy floor.
pub struct SplitChoice {
    pub question: usize,
    pub gain: f64,
}

pub fn best_split(contexts: &[&ContextStats], questions: &QuestionSet, dim: usize, min_occupancy: f64) -> Option<SplitChoice> {
    let parent = Pool::of(contexts.iter().copied(), dim);
    let parent_ll = node_log_likelihood(&parent).ok()?;
    let mut best: Option<SplitChoice> = None;
    for (qi, q) in questions.questions.iter().enumerate() {
        let mut yes = Pool::new(dim);
        let mut no = Pool::new(dim);
        for s in contexts {
            let target = if q.answers_yes(&s.context) { &mut yes } else { &mut no };
            target.merge(&Pool {
                occupancy: s.occupancy,
                sum: s.sum.clone(),
                sum_sq: s.sum_sq.clone(),
            });
        }
        if yes.occupancy <= 0.0 || no.occupancy <= 0.0 {
            continue;
        }
        if yes.occupancy < min_occupancy || no.occupancy < min_occupancy {
            continue;
        }
        let gain = node_log_likelihood(&yes).ok()? + node_log_likelihood(&no).ok()? - parent_ll;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(SplitChoice { question: qi, gain });
        }
    }
    best
}

impl ClusterTree {
    /// Single leaf pooling everything; used when growth is impossible.
    fn leaf_only(pool: &Pool) -> Self {
        ClusterTree {
            dim: pool.sum.len(),
            questions: Vec::new(),
            nodes: vec![Node::Leaf(Leaf {
                id: 0,
                occupancy: pool.occupancy,
                mean: if pool.occupancy > 0.0 { pool.mean() } else { vec![0.0; pool.sum.len()] },
                variance: if pool.occupancy > 0.0 { pool.variance() } else { vec![VARIANCE_FLOOR; pool.sum.len()] },
            })],
        }
    }

    pub fn grow(stats: &BTreeMap<Pentaphone, ContextStats>, questions: &QuestionSet, cfg: &TreeConfig) -> Self {
        let dim = stats.values().next().map(ContextStats::dim).unwrap_or(0);
        let contexts: Vec<&ContextStats> = stats.values().filter(|s| s.occupancy > 0.0).collect();
        if contexts.is_empty() || questions.questions.is_empty() {
            return Self::leaf_only(&Pool::of(contexts.iter().copied(), dim));
        }
        let mut tree = ClusterTree {
            dim,
            questions: Vec::new(),
            nodes: Vec::new(),
        };
        let mut used: BTreeMap<usize, usize> = BTreeMap::new();
        let mut leaves = 0;
        tree.grow_node(&contexts, questions, cfg, &mut used, &mut leaves);
        tree
    }

    fn grow_node(
        &mut self,
        contexts: &[&ContextStats],
        questions: &QuestionSet,
        cfg: &TreeConfig,
        used: &mut BTreeMap<usize, usize>,
        leaves: &mut usize,
    ) -> usize {
        let me = self.nodes.len();
        let choice = best_split(contexts, questions, self.dim, cfg.min_occupancy).filter(|c| c.gain > cfg.min_gain);
        let Some(choice) = choice else {
            let pool = Pool::of(contexts.iter().copied(), self.dim);
            self.nodes.push(Node::Leaf(Leaf {
                id: *leaves,
                occupancy: pool.occupancy,
                mean: pool.mean(),
                variance: pool.variance(),
            }));
            *leaves += 1;
            return me;
        };
        let q = &questions.questions[choice.question];
        let local_q = *used.entry(choice.question).or_insert_with(|| {
            self.questions.push(q.clone());
            self.questions.len() - 1
        });
        self.nodes.push(Node::Split {
            question: local_q,
            yes: 0,
            no: 0,
        });
        let (yes_set, no_set): (Vec<&ContextStats>, Vec<&ContextStats>) =
            contexts.iter().copied().partition(|s| q.answers_yes(&s.context));
        let yes = self.grow_node(&yes_set, questions, cfg, used, leaves);
        let no = self.grow_node(&no_set, questions, cfg, used, leaves);
        self.nodes[me] = Node::Split {
            question: local_q,
            yes,
            no,
        };
        me
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(l) => Some(l),
            Node::Split { .. } => None,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    fn route_node(&self, context: &Pentaphone) -> &Leaf {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split { question, yes, no } => {
                    i = if self.questions[*question].answers_yes(context) { *yes } else { *no };
                }
            }
        }
    }

    /// Leaf id for any label.
    pub fn route(&self, context: &Pentaphone) -> usize {
        self.route_node(context).id
    }

    pub fn leaf_for(&self, context: &Pentaphone) -> &Leaf {
        self.route_node(context)
    }

    /// Text form: a header, the used questions, then one line per node in index order.
    ///
    /// ```text
    /// tree dim=1 nodes=3
    /// QS "R-Nasal" {*+m=*,*+n=*}
    /// node 0 "R-Nasal" 1 2
    /// leaf 1 0 12 1.5 0.25
    /// leaf 2 1 30 -0.5 0.0001
    /// ```
    /// Leaf lines are `leaf <node> <leaf id> <occupancy> <means,> <variances,>`.
    pub fn to_text(&self) -> String {
        let mut out = format!("tree dim={} nodes={}\n", self.dim, self.nodes.len());
        for q in &self.questions {
            let _ = writeln!(out, "{q}");
        }
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Split { question, yes, no } => {
                    let _ = writeln!(out, "node {i} \"{}\" {yes} {no}", self.questions[*question].name);
                }
                Node::Leaf(l) => {
                    let _ = writeln!(out, "leaf {i} {} {} {} {}", l.id, l.occupancy, join(&l.mean), join(&l.variance));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ClusterError> {
        let err = |line: usize, m: String| ClusterError::Parse { line, message: m };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty tree file".into()))?;
        let mut dim = None;
        let mut n_nodes = None;
        let mut head = header.split_whitespace();
        if head.next() != Some("tree") {
            return Err(err(1, format!("expected 'tree' header, found {header:?}")));
        }
        for field in head {
            match field.split_once('=') {
                Some(("dim", v)) => dim = v.parse::<usize>().ok(),
                Some(("nodes", v)) => n_nodes = v.parse::<usize>().ok(),
                _ => return Err(err(1, format!("unknown header field {field:?}"))),
            }
        }
        let (Some(dim), Some(n_nodes)) = (dim, n_nodes) else {
            return Err(err(1, "header needs dim= and nodes=".into()));
        };
        let mut q_text = String::new();
        let mut q_lines = Vec::new();
        let mut nodes: Vec<Option<Node>> = vec![None; n_nodes];
        let mut pending_splits = Vec::new();
        for (n, line) in lines {
            if line.starts_with("QS ") {
                q_text.push_str(line);
                q_text.push('\n');
                q_lines.push(n);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(n, format!("expected an integer, found {s:?}")));
            let idx = num(fields.get(1).copied().unwrap_or(""))?;
            if idx >= n_nodes || nodes[idx].is_some() {
                return Err(err(n, format!("node index {idx} out of range or repeated")));
            }
            match fields.first().copied() {
                Some("node") => {
                    let (name, rest) = line
                        .split_once('"')
                        .and_then(|(_, r)| r.split_once('"'))
                        .ok_or_else(|| err(n, "expected quoted question name".into()))?;
                    let children: Vec<&str> = rest.split_whitespace().collect();
                    if children.len() != 2 {
                        return Err(err(n, "expected yes and no children".into()));
                    }
                    let (yes, no) = (num(children[0])?, num(children[1])?);
                    if yes >= n_nodes || no >= n_nodes || yes <= idx || no <= idx {
                        return Err(err(n, "child index out of range".into()));
                    }
                    pending_splits.push((n, idx, name.to_string()));
                    nodes[idx] = Some(Node::Split { question: 0, yes, no });
                }
                Some("leaf") => {
                    if fields.len() != 6 {
                        return Err(err(n, format!("leaf line needs 6 fields, found {}", fields.len())));
                    }
                    let id = num(fields[2])?;
                    let occupancy: f64 = fields[3].parse().map_err(|_| err(n, format!("bad occupancy {:?}", fields[3])))?;
                    let vec = |s: &str| -> Result<Vec<f64>, ClusterError> {
                        let v = s
                            .split(',')
                            .map(|x| x.parse::<f64>().map_err(|_| err(n, format!("bad number {x:?}"))))
                            .collect::<Result<Vec<_>, _>>()?;
                        if v.len() != dim {
                            return Err(err(n, format!("expected {dim} values, found {}", v.len())));
                        }
                        Ok(v)
                    };
                    nodes[idx] = Some(Node::Leaf(Leaf {
                        id,
                        occupancy,
                        mean: vec(fields[4])?,
                        variance: vec(fields[5])?,
                    }));
                }
                _ => return Err(err(n, format!("unrecognized line {line:?}"))),
            }
        }
        let qs = parse_question_file(&q_text).map_err(|e| match e {
            crate::phone::PhoneError::Parse { line, message, .. } => err(q_lines[line - 1], message),
            other => err(0, other.to_string()),
        })?;
        for (n, idx, name) in pending_splits {
            let qi = qs
                .questions
                .iter()
                .position(|q| q.name == name)
                .ok_or_else(|| err(n, format!("question {name:?} is not defined")))?;
            if let Some(Node::Split { question, .. }) = nodes[idx].as_mut() {
                *question = qi;
            }
        }
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| err(0, format!("node {i} missing"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ClusterTree {
            dim,
            questions: qs.questions,
            nodes,
        })
    }
}

/// Reads aligned training data. Each utterance starts with `# <id>`; every
/// following line is `<label><TAB><frames>` where frames are separated by `;`
/// and feature values by `,`. Blank lines are ignored.
pub fn parse_alignments(text: &str) -> Result<Vec<(String, AlignedUtterance)>, ClusterError> {
    let err = |line: usize, message: String| ClusterError::Alignment { line, message };
    let mut out: Vec<(String, AlignedUtterance)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix('#') {
            let id = id.trim();
            if id.is_empty() {
                return Err(err(n, "utterance header without id".into()));
            }
            out.push((
                id.to_string(),
                AlignedUtterance {
                    labels: Vec::new(),
                    frames: Vec::new(),
                },
            ));
            continue;
        }
        let Some((_, utt)) = out.last_mut() else {
            return Err(err(n, "label line before the first '# <id>' header".into()));
        };
        let (label, frames) = line
            .split_once('\t')
            .ok_or_else(|| err(n, "expected <label><TAB><frames>".into()))?;
        let context = Pentaphone::parse(label).map_err(|(col, m)| err(n, format!("column {col}: {m}")))?;
        let block = frames
            .split(';')
            .map(|f| {
                f.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| err(n, format!("bad feature value {v:?}"))))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        utt.labels.push(FullContextLabel {
            position: utt.labels.len(),
            context,
        });
        utt.frames.push(block);
    }
    let utts: Vec<AlignedUtterance> = out.iter().map(|(_, u)| u.clone()).collect();
    check_shape(&utts)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phone::Slot;

    fn ctx(r: &str) -> Pentaphone {
        Pentaphone::new("sil", "k", "a", r, "sil")
    }

    fn stats_from(context: Pentaphone, frames: &[&[f64]]) -> ContextStats {
        let mut s = ContextStats::empty(context, frames[0].len());
        for f in frames {
            s.add_frame(f);
        }
        s
    }

    #[test]
    fn accumulate_basic() {
        let label = FullContextLabel {
            position: 0,
            context: ctx("m"),
        };
        let utt = AlignedUtterance {
            labels: vec![label.clone()],
            frames: vec![vec![vec![1.0]; 3]],
        };
        let s = accumulate_stats(std::slice::from_ref(&utt)).unwrap();
        let st = &s[&ctx("m")];
        assert_eq!(st.occupancy, 3.0);
        assert_eq!(st.mean(), vec![1.0]);
        let twice = accumulate_stats(&[utt.clone(), utt]).unwrap();
        assert_eq!(twice[&ctx("m")].occupancy, 6.0);
        assert_eq!(twice[&ctx("m")].sum, vec![6.0]);
    }

    #[test]
    fn accumulate_rejects_bad_shapes() {
        let label = FullContextLabel {
            position: 0,
            context: ctx("m"),
        };
        let bad_dim = AlignedUtterance {
            labels: vec![label.clone()],
            frames: vec![vec![vec![1.0], vec![1.0, 2.0]]],
        };
        assert_eq!(
            accumulate_stats(&[bad_dim]),
            Err(ClusterError::DimensionMismatch { expected: 1, found: 2 })
        );
        let bad_count = AlignedUtterance {
            labels: vec![label],
            frames: vec![],
        };
        assert!(matches!(accumulate_stats(&[bad_count]), Err(ClusterError::BlockCountMismatch { .. })));
    }

    #[test]
    fn likelihood_properties() {
        let single = Pool::of([&stats_from(ctx("m"), &[&[2.0]])], 1);
        let l = node_log_likelihood(&single).unwrap();
        let expected = -0.5 * ((2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + VARIANCE_FLOOR.ln());
        assert!((l - expected).abs() < 1e-12);

        let a = stats_from(ctx("m"), &[&[1.0, 0.0], &[3.0, 2.0]]);
        let la = node_log_likelihood(&Pool::of([&a], 2)).unwrap();
        let ld = node_log_likelihood(&Pool::of([&a, &a], 2)).unwrap();
        assert!((ld - 2.0 * la).abs() < 1e-9);

        assert_eq!(node_log_likelihood(&Pool::new(1)), Err(ClusterError::ZeroOccupancy));
    }

    #[test]
    fn one_split_on_right_nasal() {
        let mut stats = BTreeMap::new();
        stats.insert(ctx("m"), stats_from(ctx("m"), &[&[5.0], &[5.2], &[4.8]]));
        stats.insert(ctx("sil"), stats_from(ctx("sil"), &[&[-5.0], &[-5.1], &[-4.9]]));
        let qs = QuestionSet {
            questions: vec![
                Question::new("C-Vowel", Slot::C, &["a"]),
                Question::new("R-Nasal", Slot::R, &["m", "n"]),
            ],
        };
        let tree = ClusterTree::grow(&stats, &qs, &TreeConfig { min_occupancy: 1.0, min_gain: 0.0 });
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.questions().len(), 1);
        assert_eq!(tree.questions()[0].name, "R-Nasal");
        let unseen = Pentaphone::new("a", "a", "m", "sil", "k");
        assert_eq!(tree.route(&unseen), tree.route(&ctx("sil")));
        assert_ne!(tree.route(&ctx("m")), tree.route(&ctx("sil")));

        let single = ClusterTree::grow(&stats, &qs, &TreeConfig { min_occupancy: 1.0, min_gain: f64::INFINITY });
        assert_eq!(single.leaf_count(), 1);
        let leaf = single.leaves().next().unwrap();
        assert_eq!(leaf.occupancy, 6.0);

        let text = tree.to_text();
        let back = ClusterTree::from_text(&text).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn identical_stats_do_not_split() {
        let mut stats = BTreeMap::new();
        for r in ["m", "sil", "k"] {
            stats.insert(ctx(r), stats_from(ctx(r), &[&[1.0], &[2.0]]));
        }
        let qs = QuestionSet {
            questions: vec![Question::new("R-m", Slot::R, &["m"])],
        };
        let tree = ClusterTree::grow(&stats, &qs, &TreeConfig { min_occupancy: 1.0, min_gain: 0.0 });
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn occupancy_floor_blocks_splits() {
        let mut stats = BTreeMap::new();
        stats.insert(ctx("m"), stats_from(ctx("m"), &[&[5.0], &[5.2]]));
        stats.insert(ctx("sil"), stats_from(ctx("sil"), &[&[-5.0], &[-5.1]]));
        let qs = QuestionSet {
            questions: vec![Question::new("R-m", Slot::R, &["m"])],
        };
        let tree = ClusterTree::grow(&stats, &qs, &TreeConfig::default());
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn tree_file_errors() {
        assert!(ClusterTree::from_text("").is_err());
        let bad = "tree dim=1 nodes=1\nleaf 0 0 x 1 1\n";
        assert!(matches!(ClusterTree::from_text(bad), Err(ClusterError::Parse { line: 2, .. })));
        let missing_q = "tree dim=1 nodes=3\nnode 0 \"Q\" 1 2\nleaf 1 0 1 1 1\nleaf 2 1 1 1 1\n";
        assert!(matches!(ClusterTree::from_text(missing_q), Err(ClusterError::Parse { line: 2, .. })));
    }
}
