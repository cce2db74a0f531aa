//! Attention permission masks (`true` = may attend).

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::policy::Schedule;
use crate::tokenization::Boundaries;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttentionMask {
    rows: usize,
    cols: usize,
    allow: Vec<bool>,
}

impl AttentionMask {
    /// Build from a predicate over 1-based `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut allow = Vec::with_capacity(rows * cols);
        for i in 1..=rows {
            for j in 1..=cols {
                allow.push(f(i, j));
            }
        }
        AttentionMask { rows, cols, allow }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Whether row `i` may attend to column `j` (both 1-based).
    pub fn allows(&self, i: usize, j: usize) -> bool {
        assert!(i >= 1 && i <= self.rows && j >= 1 && j <= self.cols, "mask index out of range");
        self.allow[(i - 1) * self.cols + (j - 1)]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.allow[(i - 1) * self.cols..i * self.cols]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.allow
            .chunks(self.cols)
            .map(|r| r.iter().filter(|&&a| a).count())
            .collect()
    }

    /// Top-left `rows x cols` block.
    pub fn submatrix(&self, rows: usize, cols: usize) -> AttentionMask {
        assert!(rows <= self.rows && cols <= self.cols);
        AttentionMask::from_fn(rows, cols, |i, j| self.allows(i, j))
    }

    /// Every permission in `other` is also granted here.
    pub fn covers(&self, other: &AttentionMask) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.allow.iter().zip(&other.allow).all(|(&a, &b)| a || !b)
    }

    /// Row-major 0/1 grid, one row per line.
    pub fn to_grid(&self) -> String {
        let mut out = String::with_capacity(self.rows * (2 * self.cols));
        for row in self.allow.chunks(self.cols) {
            let line: Vec<&str> = row.iter().map(|&a| if a { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for AttentionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_grid())
    }
}

impl Serialize for AttentionMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for row in self.allow.chunks(self.cols) {
            let bits: Vec<u8> = row.iter().map(|&a| u8::from(a)).collect();
            seq.serialize_element(&bits)?;
        }
        seq.end()
    }
}

/// Token-level unidirectional self-attention.
pub fn causal_mask(n: usize) -> Result<AttentionMask> {
    if n == 0 {
        return Err(Error::InvalidParameter("mask size must be >= 1".into()));
    }
    Ok(AttentionMask::from_fn(n, n, |i, j| j <= i))
}

/// Unidirectional across words, bidirectional inside a word: token `i` sees
/// every token up to the end of its own word.
pub fn intra_word_mask(src: &Boundaries) -> AttentionMask {
    let n = src.token_count();
    let horizon: Vec<usize> = (1..=n)
        .map(|i| src.next_at_or_after(i).expect("last token is a boundary"))
        .collect();
    AttentionMask::from_fn(n, n, |i, j| j <= horizon[i - 1])
}

/// Build the intra-word mask from raw boundary indices.
pub fn intra_word_mask_from(ends: &[usize], n: usize) -> Result<AttentionMask> {
    let src = Boundaries::new(ends.to_vec(), n)?;
    Ok(intra_word_mask(&src))
}

/// Target token `i` may attend to the `g_i` source tokens read before it.
pub fn cross_mask(schedule: &Schedule) -> AttentionMask {
    let reads = schedule.reads();
    AttentionMask::from_fn(schedule.target_len(), schedule.source_len(), |i, j| {
        j <= reads[i - 1]
    })
}
