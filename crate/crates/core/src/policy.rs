//! READ/WRITE schedules and the token-to-word policy conversion.
//!
//! A [`Schedule`] stores, for each target token `i`, how many source tokens
//! have been read when `y_i` is written. Word-level policies are obtained by
//! delaying each read count to the next source word boundary and then
//! holding it constant while a target word is being written.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tokenization::Boundaries;

/// Slack allowed when comparing accumulated transport mass against the threshold.
pub const TRANSPORT_MASS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    reads: Vec<usize>,
    source_len: usize,
}

impl Schedule {
    pub fn new(reads: Vec<usize>, source_len: usize) -> Result<Self> {
        if source_len == 0 {
            return Err(Error::InvalidSchedule("source length is zero".into()));
        }
        if reads.is_empty() {
            return Err(Error::InvalidSchedule("no target tokens".into()));
        }
        for (i, &g) in reads.iter().enumerate() {
            if g == 0 || g > source_len {
                return Err(Error::InvalidSchedule(format!(
                    "g[{}] = {g} outside 1..={source_len}",
                    i + 1
                )));
            }
        }
        if let Some(i) = reads.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidSchedule(format!(
                "decreasing at target token {} ({} > {})",
                i + 2,
                reads[i],
                reads[i + 1]
            )));
        }
        Ok(Schedule { reads, source_len })
    }

    /// Read the whole source before writing anything.
    pub fn offline(source_len: usize, target_len: usize) -> Result<Self> {
        Schedule::new(vec![source_len; target_len], source_len)
    }

    pub fn reads(&self) -> &[usize] {
        &self.reads
    }

    /// Source tokens read before writing target token `i` (1-based).
    pub fn get(&self, i: usize) -> Result<usize> {
        i.checked_sub(1)
            .and_then(|k| self.reads.get(k))
            .copied()
            .ok_or_else(|| Error::index(i, self.reads.len()))
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.reads.len()
    }

    pub fn into_reads(self) -> Vec<usize> {
        self.reads
    }

    pub fn from_json(text: &str, source_len: usize) -> Result<Self> {
        let reads: Vec<usize> = serde_json::from_str(text).map_err(|e| Error::Parse {
            column: e.column(),
            message: e.to_string(),
        })?;
        Schedule::new(reads, source_len)
    }

    pub(crate) fn check_dims(&self, src: &Boundaries, tgt: &Boundaries) -> Result<()> {
        if src.token_count() != self.source_len {
            return Err(Error::Dimension(format!(
                "schedule covers {} source tokens, boundaries cover {}",
                self.source_len,
                src.token_count()
            )));
        }
        if tgt.token_count() != self.target_len() {
            return Err(Error::Dimension(format!(
                "schedule covers {} target tokens, boundaries cover {}",
                self.target_len(),
                tgt.token_count()
            )));
        }
        Ok(())
    }
}

impl Serialize for Schedule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(&self.reads)
    }
}

/// Intermediate and final sequences of the word-level conversion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConversionResult {
    /// Read counts delayed to the next source word boundary.
    #[serde(rename = "r")]
    pub read_refined: Vec<usize>,
    /// Index of the last token of the target word holding each token.
    #[serde(rename = "b")]
    pub target_word_ends: Vec<usize>,
    /// The word-level schedule.
    #[serde(rename = "w")]
    pub schedule: Schedule,
}

pub fn waitk_token(k: usize, source_len: usize, target_len: usize) -> Result<Schedule> {
    if k == 0 {
        return Err(Error::InvalidParameter("wait-k requires k >= 1".into()));
    }
    let reads = (1..=target_len)
        .map(|i| (k + i - 1).min(source_len))
        .collect();
    Schedule::new(reads, source_len)
}

/// Delay every read count to the nearest source word boundary at or after it.
pub fn word_read_refine(schedule: &Schedule, src: &Boundaries) -> Result<Vec<usize>> {
    if src.token_count() != schedule.source_len() {
        return Err(Error::Dimension(format!(
            "schedule covers {} source tokens, boundaries cover {}",
            schedule.source_len(),
            src.token_count()
        )));
    }
    Ok(schedule
        .reads()
        .iter()
        .map(|&g| {
            src.next_at_or_after(g)
                .expect("boundaries always contain the last source token")
        })
        .collect())
}

/// Last token index of the target word containing token `i`.
pub fn target_word_end(i: usize, tgt: &Boundaries) -> Result<usize> {
    if i == 0 || i > tgt.token_count() {
        return Err(Error::index(i, tgt.token_count()));
    }
    Ok(tgt
        .next_at_or_after(i)
        .expect("boundaries always contain the last target token"))
}

/// Copy the value at each target word's first token across the whole word.
fn hold_per_target_word(values: &[usize], tgt: &Boundaries) -> Vec<usize> {
    let mut out = Vec::with_capacity(values.len());
    for span in tgt.spans() {
        let head = values[span.first - 1];
        out.extend(std::iter::repeat_n(head, span.len()));
    }
    out
}

pub fn to_word_policy(
    schedule: &Schedule,
    src: &Boundaries,
    tgt: &Boundaries,
) -> Result<ConversionResult> {
    schedule.check_dims(src, tgt)?;
    let read_refined = word_read_refine(schedule, src)?;
    let target_word_ends = (1..=schedule.target_len())
        .map(|i| target_word_end(i, tgt))
        .collect::<Result<Vec<_>>>()?;

    let mut word = Vec::with_capacity(read_refined.len());
    for (i, &r) in read_refined.iter().enumerate() {
        if i == 0 || target_word_ends[i - 1] != target_word_ends[i] {
            word.push(r);
        } else {
            word.push(word[i - 1]);
        }
    }
    Ok(ConversionResult {
        read_refined,
        target_word_ends,
        schedule: Schedule::new(word, schedule.source_len())?,
    })
}

/// Word-level wait-k: read `k` words, then alternate one source word and one
/// target word. Every token of target word `t` is written after source word
/// `min(k + t - 1, W_src)` is complete.
pub fn waitk_word(k: usize, src: &Boundaries, tgt: &Boundaries) -> Result<Schedule> {
    if k == 0 {
        return Err(Error::InvalidParameter("wait-k requires k >= 1".into()));
    }
    let source_words = src.word_count();
    let mut reads = Vec::with_capacity(tgt.token_count());
    for span in tgt.spans() {
        let word = (k + span.word_index - 1).min(source_words);
        let last = src.word_last(word)?;
        reads.extend(std::iter::repeat_n(last, span.len()));
    }
    Schedule::new(reads, src.token_count())
}

/// Read `k` tokens, write `k` tokens, repeat, ignoring word boundaries.
pub fn alternating_tokens(k: usize, source_len: usize, target_len: usize) -> Result<Schedule> {
    if k == 0 {
        return Err(Error::InvalidParameter("TkTk requires k >= 1".into()));
    }
    let reads = (1..=target_len)
        .map(|i| (k * i.div_ceil(k)).min(source_len))
        .collect();
    Schedule::new(reads, source_len)
}

/// Policy variants used to separate the effect of word-level READ and WRITE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Word-level READ and WRITE (the full conversion).
    WordReadWordWrite,
    /// Token-level READ, word-level WRITE.
    TokenReadWordWrite,
    /// Word-level READ, token-level WRITE.
    WordReadTokenWrite,
    /// Alternate `k` token reads with `k` token writes.
    AlternatingTokens { k: usize },
}

impl Ablation {
    pub fn new(kind: &str, k: Option<usize>) -> Result<Self> {
        match kind.to_ascii_lowercase().as_str() {
            "ww" => Ok(Ablation::WordReadWordWrite),
            "tw" => Ok(Ablation::TokenReadWordWrite),
            "wt" => Ok(Ablation::WordReadTokenWrite),
            "tktk" => match k {
                Some(k) if k >= 1 => Ok(Ablation::AlternatingTokens { k }),
                _ => Err(Error::InvalidParameter("tktk requires k >= 1".into())),
            },
            other => Err(Error::InvalidParameter(format!(
                "unknown ablation kind {other:?} (expected ww, tw, wt or tktk)"
            ))),
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    /// Parses `ww`, `tw`, `wt` or `tktk:k=N`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((kind, rest)) => {
                let k = rest
                    .strip_prefix("k=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("bad ablation parameter {rest:?}")))?;
                Ablation::new(kind, Some(k))
            }
            None => Ablation::new(s, None),
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ablation::WordReadWordWrite => f.write_str("ww"),
            Ablation::TokenReadWordWrite => f.write_str("tw"),
            Ablation::WordReadTokenWrite => f.write_str("wt"),
            Ablation::AlternatingTokens { k } => write!(f, "tktk:k={k}"),
        }
    }
}

/// Apply an ablation to a base token schedule. `AlternatingTokens` only uses
/// the base schedule's dimensions.
pub fn ablation_policy(
    ablation: Ablation,
    base: &Schedule,
    src: &Boundaries,
    tgt: &Boundaries,
) -> Result<Schedule> {
    base.check_dims(src, tgt)?;
    match ablation {
        Ablation::WordReadWordWrite => Ok(to_word_policy(base, src, tgt)?.schedule),
        Ablation::TokenReadWordWrite => Schedule::new(
            hold_per_target_word(base.reads(), tgt),
            base.source_len(),
        ),
        Ablation::WordReadTokenWrite => {
            Schedule::new(word_read_refine(base, src)?, base.source_len())
        }
        Ablation::AlternatingTokens { k } => {
            alternating_tokens(k, base.source_len(), base.target_len())
        }
    }
}

/// Per-target-token information weights over source tokens (`m x n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransportMatrix {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl TransportMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if m == 0 || n == 0 {
            return Err(Error::Dimension("transport matrix is empty".into()));
        }
        let mut weights = Vec::with_capacity(m * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "transport row {} has {} columns, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "transport row {} has a negative or non-finite weight",
                    i + 1
                )));
            }
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 || mass > 1.0 + TRANSPORT_MASS_EPS {
                return Err(Error::InvalidParameter(format!(
                    "transport row {} sums to {mass}, expected (0, 1]",
                    i + 1
                )));
            }
            weights.extend(row);
        }
        Ok(TransportMatrix {
            rows: m,
            cols: n,
            weights,
        })
    }

    /// Every entry `1/n`.
    pub fn uniform(target_len: usize, source_len: usize) -> Result<Self> {
        let w = 1.0 / source_len as f64;
        TransportMatrix::new(vec![vec![w; source_len]; target_len])
    }

    pub fn target_len(&self) -> usize {
        self.rows
    }

    pub fn source_len(&self) -> usize {
        self.cols
    }

    /// Row for target token `i` (1-based).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[(i - 1) * self.cols..i * self.cols]
    }
}

impl TryFrom<Vec<Vec<f64>>> for TransportMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        TransportMatrix::new(rows)
    }
}

impl From<TransportMatrix> for Vec<Vec<f64>> {
    fn from(t: TransportMatrix) -> Self {
        t.weights.chunks(t.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Number of source tokens each target token waits for under a transport
/// threshold: the shortest prefix whose accumulated weight reaches `delta`
/// (the whole source if it never does), made monotone.
pub fn itst_required_counts(transport: &TransportMatrix, delta: f64) -> Result<Schedule> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {delta} outside (0, 1)"
        )));
    }
    let n = transport.source_len();
    let mut reads = Vec::with_capacity(transport.target_len());
    let mut floor = 1;
    for i in 1..=transport.target_len() {
        let mut mass = 0.0;
        let mut needed = n;
        for (j, w) in transport.row(i).iter().enumerate() {
            mass += w;
            if mass >= delta - TRANSPORT_MASS_EPS {
                needed = j + 1;
                break;
            }
        }
        floor = floor.max(needed);
        reads.push(floor);
    }
    Schedule::new(reads, n)
}

/// Word-level ITST: the requirement at each target word's first token is
/// lifted to a source word boundary and held for the rest of that word.
pub fn itst_word_policy(schedule: &Schedule, src: &Boundaries, tgt: &Boundaries) -> Result<Schedule> {
    schedule.check_dims(src, tgt)?;
    let refined = word_read_refine(schedule, src)?;
    let mut reads = hold_per_target_word(&refined, tgt);
    let mut floor = 0;
    for g in reads.iter_mut() {
        floor = floor.max(*g);
        *g = floor;
    }
    Schedule::new(reads, schedule.source_len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub action: ActionKind,
    pub index: usize,
    /// A READ of a source token no write depends on.
    #[serde(default)]
    pub post_final: bool,
}

impl Action {
    pub fn read(index: usize) -> Self {
        Action {
            action: ActionKind::Read,
            index,
            post_final: false,
        }
    }

    pub fn write(index: usize) -> Self {
        Action {
            action: ActionKind::Write,
            index,
            post_final: false,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            ActionKind::Read => write!(f, "R{}", self.index),
            ActionKind::Write => write!(f, "W{}", self.index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionTrace {
    pub events: Vec<Action>,
}

impl fmt::Display for ActionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.events.iter().map(Action::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn schedule_to_actions(schedule: &Schedule) -> ActionTrace {
    let mut events = Vec::with_capacity(schedule.source_len() + schedule.target_len());
    let mut read = 0;
    for (i, &g) in schedule.reads().iter().enumerate() {
        while read < g {
            read += 1;
            events.push(Action::read(read));
        }
        events.push(Action::write(i + 1));
    }
    while read < schedule.source_len() {
        read += 1;
        events.push(Action {
            post_final: true,
            ..Action::read(read)
        });
    }
    ActionTrace { events }
}

pub fn actions_to_schedule(trace: &ActionTrace) -> Result<Schedule> {
    let invalid = |pos: usize, msg: String| Error::InvalidTrace(format!("event {pos}: {msg}"));
    let last_write = trace
        .events
        .iter()
        .rposition(|a| a.action == ActionKind::Write)
        .ok_or_else(|| Error::InvalidTrace("no WRITE events".into()))?;

    let mut read = 0;
    let mut reads = Vec::new();
    for (pos, event) in trace.events.iter().enumerate() {
        let pos = pos + 1;
        match event.action {
            ActionKind::Read => {
                if event.index != read + 1 {
                    return Err(invalid(pos, format!("READ({}) after READ({read})", event.index)));
                }
                if event.post_final != (pos - 1 > last_write) {
                    return Err(invalid(pos, "post_final flag inconsistent with position".into()));
                }
                read += 1;
            }
            ActionKind::Write => {
                if event.index != reads.len() + 1 {
                    return Err(invalid(
                        pos,
                        format!("WRITE({}) after WRITE({})", event.index, reads.len()),
                    ));
                }
                if event.post_final {
                    return Err(invalid(pos, "WRITE flagged post_final".into()));
                }
                if read == 0 {
                    return Err(invalid(pos, "WRITE before any READ".into()));
                }
                reads.push(read);
            }
        }
    }
    Schedule::new(reads, read).map_err(|e| Error::InvalidTrace(e.to_string()))
}
