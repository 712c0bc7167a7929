//! Word skips, repetitions and mispronunciations from transcript alignment.
//!
//! Reference and hypothesis are aligned by minimum edit distance (match 0,
//! substitution, deletion and insertion 1). Among optimal alignments the one
//! chosen is the first when walking left to right and preferring
//! match > substitute > delete > insert at every step. Deletions count as
//! skips, substitutions as mispronunciations, and insertions equal to the
//! immediately preceding hypothesis token as repetitions. Other insertions
//! are counted separately; when the inserted token occurred earlier in the
//! hypothesis the trace flags it as a possible repetition loop.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AlignOp {
    Match { reference: usize, hypothesis: usize },
    Substitute { reference: usize, hypothesis: usize },
    Delete { reference: usize },
    Insert { hypothesis: usize, repetition: bool, loop_suspect: bool },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorCounts {
    pub skips: usize,
    pub repetitions: usize,
    pub mispronunciations: usize,
    /// Insertions that are not immediate repetitions.
    pub insertions: usize,
}

impl ErrorCounts {
    pub fn edits(&self) -> usize {
        self.skips + self.repetitions + self.mispronunciations + self.insertions
    }

    fn add(&mut self, o: &ErrorCounts) {
        self.skips += o.skips;
        self.repetitions += o.repetitions;
        self.mispronunciations += o.mispronunciations;
        self.insertions += o.insertions;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceErrors {
    pub id: String,
    pub counts: ErrorCounts,
    pub trace: Vec<AlignOp>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub utterances: Vec<UtteranceErrors>,
    pub totals: ErrorCounts,
}

impl ErrorReport {
    pub fn push(&mut self, u: UtteranceErrors) {
        self.totals.add(&u.counts);
        self.utterances.push(u);
    }

    /// `id<TAB>skips<TAB>repetitions<TAB>mispronunciations<TAB>insertions`, header
    /// first and a `TOTAL` row last.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tskips\trepetitions\tmispronunciations\tinsertions\n");
        let row = |id: &str, c: &ErrorCounts| {
            format!("{id}\t{}\t{}\t{}\t{}\n", c.skips, c.repetitions, c.mispronunciations, c.insertions)
        };
        for u in &self.utterances {
            out.push_str(&row(&u.id, &u.counts));
        }
        out.push_str(&row("TOTAL", &self.totals));
        out
    }
}

/// Minimum edit distance between two token sequences.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    suffix_costs(reference, hypothesis)[0][0]
}

// cost[i][j] = distance between reference[i..] and hypothesis[j..].
fn suffix_costs<T: PartialEq>(r: &[T], h: &[T]) -> Vec<Vec<usize>> {
    let (n, m) = (r.len(), h.len());
    let mut cost = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            cost[i][j] = match (i < n, j < m) {
                (false, false) => 0,
                (true, false) => cost[i + 1][j] + 1,
                (false, true) => cost[i][j + 1] + 1,
                (true, true) => {
                    let diag = cost[i + 1][j + 1] + usize::from(r[i] != h[j]);
                    diag.min(cost[i + 1][j] + 1).min(cost[i][j + 1] + 1)
                }
            };
        }
    }
    cost
}

pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<AlignOp> {
    let cost = suffix_costs(reference, hypothesis);
    let (n, m) = (reference.len(), hypothesis.len());
    let (mut i, mut j) = (0, 0);
    let mut ops = Vec::with_capacity(n.max(m));
    while i < n || j < m {
        let here = cost[i][j];
        if i < n && j < m && reference[i] == hypothesis[j] && cost[i + 1][j + 1] == here {
            ops.push(AlignOp::Match {
                reference: i,
                hypothesis: j,
            });
            i += 1;
            j += 1;
        } else if i < n && j < m && reference[i] != hypothesis[j] && cost[i + 1][j + 1] + 1 == here {
            ops.push(AlignOp::Substitute {
                reference: i,
                hypothesis: j,
            });
            i += 1;
            j += 1;
        } else if i < n && cost[i + 1][j] + 1 == here {
            ops.push(AlignOp::Delete { reference: i });
            i += 1;
        } else {
            let repetition = j > 0 && hypothesis[j] == hypothesis[j - 1];
            let loop_suspect = !repetition && hypothesis[..j].contains(&hypothesis[j]);
            ops.push(AlignOp::Insert {
                hypothesis: j,
                repetition,
                loop_suspect,
            });
            j += 1;
        }
    }
    ops
}

pub fn classify(ops: &[AlignOp]) -> ErrorCounts {
    let mut c = ErrorCounts::default();
    for op in ops {
        match op {
            AlignOp::Match { .. } => {}
            AlignOp::Substitute { .. } => c.mispronunciations += 1,
            AlignOp::Delete { .. } => c.skips += 1,
            AlignOp::Insert { repetition: true, .. } => c.repetitions += 1,
            AlignOp::Insert { .. } => c.insertions += 1,
        }
    }
    c
}

pub fn count_errors<S: AsRef<str>>(id: &str, reference: &[S], hypothesis: &[S]) -> UtteranceErrors {
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let h: Vec<&str> = hypothesis.iter().map(AsRef::as_ref).collect();
    let trace = align(&r, &h);
    UtteranceErrors {
        id: id.to_string(),
        counts: classify(&trace),
        trace,
    }
}
