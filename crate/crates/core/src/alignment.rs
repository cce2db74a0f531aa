//! Policy quality as the share of aligned source words fully read before
//! their target word starts being written.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::policy::Schedule;
use crate::tokenization::Boundaries;

/// Word alignment pairs `(source word, target word)`, 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AlignmentSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl AlignmentSet {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        AlignmentSet {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check_bounds(&self, source_words: usize, target_words: usize) -> Result<()> {
        for (s, t) in self.pairs() {
            if s == 0 || s > source_words {
                return Err(Error::index(s, source_words));
            }
            if t == 0 || t > target_words {
                return Err(Error::index(t, target_words));
            }
        }
        Ok(())
    }
}

/// Parse one Pharaoh line of 0-based `s-t` pairs.
pub fn parse_pharaoh(line: &str) -> Result<AlignmentSet> {
    let mut pairs = BTreeSet::new();
    let mut column = 1;
    for chunk in line.split(' ') {
        let item = chunk.trim();
        if !item.is_empty() {
            let pair = item
                .split_once('-')
                .and_then(|(s, t)| Some((s.parse::<usize>().ok()?, t.parse::<usize>().ok()?)));
            match pair {
                Some((s, t)) => {
                    pairs.insert((s + 1, t + 1));
                }
                None => {
                    return Err(Error::Parse {
                        column,
                        message: format!("expected i-j, found {item:?}"),
                    })
                }
            }
        }
        column += chunk.chars().count() + 1;
    }
    Ok(AlignmentSet { pairs })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QualityReport {
    pub satisfied: usize,
    pub total: usize,
    /// `None` when there are no pairs.
    pub proportion: Option<f64>,
}

impl QualityReport {
    pub fn from_counts(satisfied: usize, total: usize) -> Self {
        QualityReport {
            satisfied,
            total,
            proportion: (total > 0).then(|| satisfied as f64 / total as f64),
        }
    }

    /// Pair-weighted sum of reports.
    pub fn merge(self, other: QualityReport) -> QualityReport {
        QualityReport::from_counts(self.satisfied + other.satisfied, self.total + other.total)
    }
}

/// Which aligned pairs had their source word fully read when the first token
/// of the target word was written.
pub fn aligned_read_proportion(
    schedule: &Schedule,
    src: &Boundaries,
    tgt: &Boundaries,
    alignment: &AlignmentSet,
) -> Result<QualityReport> {
    schedule.check_dims(src, tgt)?;
    alignment.check_bounds(src.word_count(), tgt.word_count())?;
    let satisfied = alignment
        .pairs()
        .filter(|&(s, t)| {
            let source_last = src.ends()[s - 1];
            let target_first = if t == 1 { 1 } else { tgt.ends()[t - 2] + 1 };
            source_last <= schedule.reads()[target_first - 1]
        })
        .count();
    Ok(QualityReport::from_counts(satisfied, alignment.len()))
}

/// One sentence of an alignment test set.
#[derive(Debug, Clone, Copy)]
pub struct QualityRecord<'a> {
    pub id: usize,
    pub schedule: &'a Schedule,
    pub source: &'a Boundaries,
    pub target: &'a Boundaries,
    pub alignment: &'a AlignmentSet,
}

/// Micro-averaged quality over a corpus; sentences without pairs add nothing.
pub fn corpus_quality(records: &[QualityRecord<'_>]) -> Result<QualityReport> {
    records.iter().try_fold(QualityReport::from_counts(0, 0), |acc, r| {
        aligned_read_proportion(r.schedule, r.source, r.target, r.alignment)
            .map(|q| acc.merge(q))
            .map_err(|e| e.in_record(r.id))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{to_word_policy, waitk_token, waitk_word};

    fn b(ends: &[usize]) -> Boundaries {
        Boundaries::new(ends.to_vec(), *ends.last().unwrap()).unwrap()
    }

    #[test]
    fn pharaoh_parsing() {
        assert_eq!(parse_pharaoh("0-0 1-2").unwrap(), AlignmentSet::new([(1, 1), (2, 3)]));
        assert!(parse_pharaoh("").unwrap().is_empty());
        assert_eq!(parse_pharaoh("0-0 0-0  1-1").unwrap().len(), 2);
        assert_eq!(
            parse_pharaoh("0-0 3-x"),
            Err(Error::Parse { column: 5, message: "expected i-j, found \"3-x\"".into() })
        );
        assert!(matches!(parse_pharaoh("01"), Err(Error::Parse { column: 1, .. })));
    }

    #[test]
    fn offline_satisfies_everything() {
        let (src, tgt) = (b(&[1, 3, 4, 10]), b(&[1, 3, 4, 7]));
        let a = AlignmentSet::new([(4, 1), (2, 2), (1, 4), (3, 3)]);
        let q = aligned_read_proportion(&Schedule::offline(10, 7).unwrap(), &src, &tgt, &a).unwrap();
        assert_eq!(q.proportion, Some(1.0));
    }

    #[test]
    fn word_waitk_on_diagonal() {
        let (src, tgt) = (b(&[2, 3, 6, 7]), b(&[1, 3, 4, 6]));
        let diagonal = AlignmentSet::new((1..=4).map(|t| (t, t)));
        let w = waitk_word(1, &src, &tgt).unwrap();
        let q = aligned_read_proportion(&w, &src, &tgt, &diagonal).unwrap();
        assert_eq!((q.satisfied, q.total), (4, 4));
    }

    #[test]
    fn beine_legs_pair() {
        let (src, tgt) = (b(&[1, 3, 4, 10]), b(&[1, 3, 4, 7]));
        let pair = AlignmentSet::new([(2, 2)]);
        let token = waitk_token(1, 10, 7).unwrap();
        assert_eq!(aligned_read_proportion(&token, &src, &tgt, &pair).unwrap().satisfied, 0);
        let word = to_word_policy(&token, &src, &tgt).unwrap().schedule;
        assert_eq!(aligned_read_proportion(&word, &src, &tgt, &pair).unwrap().satisfied, 1);
    }

    #[test]
    fn out_of_range_pairs() {
        let (src, tgt) = (b(&[1, 3]), b(&[2]));
        let s = Schedule::offline(3, 2).unwrap();
        let err = aligned_read_proportion(&s, &src, &tgt, &AlignmentSet::new([(3, 1)])).unwrap_err();
        assert_eq!(err, Error::Index { index: 3, len: 2 });
        assert!(aligned_read_proportion(&s, &src, &tgt, &AlignmentSet::new([(1, 2)])).is_err());
    }

    #[test]
    fn corpus_micro_average() {
        let (src, tgt) = (b(&[1, 2]), b(&[1, 2]));
        let lagging = Schedule::new(vec![1, 1], 2).unwrap();
        let full = Schedule::offline(2, 2).unwrap();
        let a = AlignmentSet::new([(1, 1), (2, 2)]);
        let empty = AlignmentSet::default();
        let single = [QualityRecord { id: 1, schedule: &lagging, source: &src, target: &tgt, alignment: &a }];
        assert_eq!(
            corpus_quality(&single).unwrap(),
            aligned_read_proportion(&lagging, &src, &tgt, &a).unwrap()
        );
        let records = [
            single[0],
            QualityRecord { id: 2, schedule: &full, source: &src, target: &tgt, alignment: &a },
            QualityRecord { id: 3, schedule: &full, source: &src, target: &tgt, alignment: &empty },
        ];
        let q = corpus_quality(&records).unwrap();
        assert_eq!((q.satisfied, q.total, q.proportion), (3, 4, Some(0.75)));
        assert_eq!(corpus_quality(&[]).unwrap().proportion, None);

        let bad = AlignmentSet::new([(5, 1)]);
        let err = corpus_quality(&[QualityRecord { id: 7, schedule: &full, source: &src, target: &tgt, alignment: &bad }])
            .unwrap_err();
        assert!(matches!(err, Error::Record { id: 7, .. }));
    }
}
