//! Token-level edit extraction between an original text and its correction.
//!
//! The alignment is a unit-cost Levenshtein alignment over tokens. Among all
//! minimal-cost alignments the one with the fewest runs of consecutive
//! non-matching operations is chosen, and each run becomes a single edit.

use std::ops::Range;

use super::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditKind {
    Insert,
    Delete,
    Replace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub kind: EditKind,
    pub orig: Range<usize>,
    pub corr: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditScript {
    pub edits: Vec<Edit>,
}

impl EditScript {
    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    /// Replays the script: unedited stretches come from `orig`, edited ones
    /// from `corr`.
    pub fn apply<T: Clone>(&self, orig: &[T], corr: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(corr.len());
        let mut pos = 0;
        for e in &self.edits {
            out.extend_from_slice(&orig[pos..e.orig.start]);
            out.extend_from_slice(&corr[e.corr.clone()]);
            pos = e.orig.end;
        }
        out.extend_from_slice(&orig[pos..]);
        out
    }
}

/// How tokens are compared during alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TokenEquality {
    /// Compare case-folded forms; pure case changes are not edits.
    #[default]
    CaseInsensitive,
    Exact,
}

impl TokenEquality {
    pub fn eq(self, a: &Token, b: &Token) -> bool {
        match self {
            TokenEquality::CaseInsensitive => a.lower == b.lower,
            TokenEquality::Exact => a.surface == b.surface,
        }
    }
}

pub fn extract_edits(orig: &[Token], corr: &[Token], equality: TokenEquality) -> EditScript {
    align_edits(orig, corr, |a, b| equality.eq(a, b))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Sub,
    Del,
    Ins,
}

/// `(cost, runs)` compared lexicographically.
type Score = (u32, u32);

const UNREACHED: Score = (u32::MAX, u32::MAX);

#[derive(Clone, Copy)]
struct Cell {
    score: Score,
    op: Op,
    prev_editing: bool,
}

pub fn align_edits<T>(orig: &[T], corr: &[T], eq: impl Fn(&T, &T) -> bool) -> EditScript {
    let (n, m) = (orig.len(), corr.len());
    let width = m + 1;
    // state 0: last op was a match (or nothing yet); state 1: inside an edit run
    let idx = |i: usize, j: usize, s: usize| (i * width + j) * 2 + s;
    let mut cells = vec![
        Cell {
            score: UNREACHED,
            op: Op::Match,
            prev_editing: false,
        };
        (n + 1) * width * 2
    ];
    cells[idx(0, 0, 0)].score = (0, 0);

    let relax = |cells: &mut [Cell], target: usize, score: Score, op: Op, prev_editing: bool| {
        if score < cells[target].score {
            cells[target] = Cell {
                score,
                op,
                prev_editing,
            };
        }
    };

    for i in 0..=n {
        for j in 0..=m {
            for s in 0..2 {
                let (cost, runs) = cells[idx(i, j, s)].score;
                if cost == u32::MAX {
                    continue;
                }
                let editing = s == 1;
                let opened = runs + u32::from(!editing);
                if i < n && j < m {
                    if eq(&orig[i], &corr[j]) {
                        relax(&mut cells, idx(i + 1, j + 1, 0), (cost, runs), Op::Match, editing);
                    } else {
                        relax(&mut cells, idx(i + 1, j + 1, 1), (cost + 1, opened), Op::Sub, editing);
                    }
                }
                if i < n {
                    relax(&mut cells, idx(i + 1, j, 1), (cost + 1, opened), Op::Del, editing);
                }
                if j < m {
                    relax(&mut cells, idx(i, j + 1, 1), (cost + 1, opened), Op::Ins, editing);
                }
            }
        }
    }

    let end_state = if cells[idx(n, m, 1)].score < cells[idx(n, m, 0)].score {
        1
    } else {
        0
    };
    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j, mut s) = (n, m, end_state);
    while i > 0 || j > 0 {
        let cell = cells[idx(i, j, s)];
        ops.push(cell.op);
        match cell.op {
            Op::Match | Op::Sub => {
                i -= 1;
                j -= 1;
            }
            Op::Del => i -= 1,
            Op::Ins => j -= 1,
        }
        s = usize::from(cell.prev_editing);
    }
    ops.reverse();

    let mut edits = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut run: Option<(usize, usize)> = None;
    for op in ops {
        if op == Op::Match {
            if let Some((i0, j0)) = run.take() {
                edits.push(make_edit(i0..i, j0..j));
            }
        } else if run.is_none() {
            run = Some((i, j));
        }
        match op {
            Op::Match | Op::Sub => {
                i += 1;
                j += 1;
            }
            Op::Del => i += 1,
            Op::Ins => j += 1,
        }
    }
    if let Some((i0, j0)) = run {
        edits.push(make_edit(i0..i, j0..j));
    }
    EditScript { edits }
}

fn make_edit(orig: Range<usize>, corr: Range<usize>) -> Edit {
    let kind = match (orig.is_empty(), corr.is_empty()) {
        (true, _) => EditKind::Insert,
        (_, true) => EditKind::Delete,
        _ => EditKind::Replace,
    };
    Edit { kind, orig, corr }
}
