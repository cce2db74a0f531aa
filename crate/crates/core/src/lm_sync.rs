//! Word-boundary synchronization between two tokenizations of one source.
//!
//! The translation model and an external language model segment the same
//! sentence with different vocabularies. They only exchange activations at
//! word boundaries, where both have consumed exactly the same surface prefix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::AttentionMask;
use crate::policy::Schedule;
use crate::tokenization::{Boundaries, TokenizedSentence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualWord {
    pub surface: String,
    pub simt_span: (usize, usize),
    pub lm_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualSegmentation {
    pub words: Vec<DualWord>,
}

impl DualSegmentation {
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn simt_len(&self) -> usize {
        self.words.last().map_or(0, |w| w.simt_span.1)
    }

    pub fn lm_len(&self) -> usize {
        self.words.last().map_or(0, |w| w.lm_span.1)
    }
}

/// Pair the words of two tokenizations, requiring identical surfaces.
pub fn align_dual(simt: &TokenizedSentence, lm: &TokenizedSentence) -> Result<DualSegmentation> {
    let simt_spans = simt.word_spans();
    let lm_spans = lm.word_spans();
    let mut words = Vec::with_capacity(simt_spans.len());
    for (k, (s, l)) in simt_spans.iter().zip(&lm_spans).enumerate() {
        let surface = simt.word_surface(k + 1)?;
        let lm_surface = lm.word_surface(k + 1)?;
        if surface != lm_surface {
            return Err(Error::VocabularyAlignment {
                word: k + 1,
                reason: format!("surface {surface:?} vs {lm_surface:?}"),
            });
        }
        words.push(DualWord {
            surface,
            simt_span: (s.first, s.last),
            lm_span: (l.first, l.last),
        });
    }
    if simt_spans.len() != lm_spans.len() {
        return Err(Error::VocabularyAlignment {
            word: simt_spans.len().min(lm_spans.len()) + 1,
            reason: format!(
                "word counts differ ({} vs {})",
                simt_spans.len(),
                lm_spans.len()
            ),
        });
    }
    Ok(DualSegmentation { words })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SyncEvent {
    /// Source words consumed by both models.
    pub words_read: usize,
    pub simt_read: usize,
    pub lm_read: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncSchedule {
    pub events: Vec<SyncEvent>,
}

/// Expand a cumulative word-read schedule into per-word sync points.
///
/// `words_read` holds, at each step, how many source words have been read;
/// it must be non-decreasing. A step that reads several words emits one
/// event per word, since each word boundary is a point where both models
/// hold the same prefix.
pub fn sync_schedule(words_read: &[usize], dual: &DualSegmentation) -> Result<SyncSchedule> {
    let total = dual.word_count();
    let mut events = Vec::new();
    let mut done = 0;
    for &w in words_read {
        if w > total {
            return Err(Error::index(w, total));
        }
        if w < done {
            return Err(Error::InvalidSchedule(format!(
                "word reads decrease ({done} then {w})"
            )));
        }
        while done < w {
            done += 1;
            let word = &dual.words[done - 1];
            events.push(SyncEvent {
                words_read: done,
                simt_read: word.simt_span.1,
                lm_read: word.lm_span.1,
            });
        }
    }
    Ok(SyncSchedule { events })
}

/// Number of LM tokens the translation model may attend to after
/// `words_read` source words.
pub fn lm_attend_limit(words_read: usize, dual: &DualSegmentation) -> Result<usize> {
    match words_read {
        0 => Ok(0),
        w if w <= dual.word_count() => Ok(dual.words[w - 1].lm_span.1),
        w => Err(Error::index(w, dual.word_count())),
    }
}

/// Decoder-to-LM permissions for a translation schedule over the SiMT
/// source tokenization: target token `i` sees the LM tokens of every source
/// word completed within its `g_i` read tokens. A row is empty when `g_i`
/// stops inside the first word, which word-level schedules never do.
pub fn lm_cross_mask(schedule: &Schedule, simt_src: &Boundaries, dual: &DualSegmentation) -> Result<AttentionMask> {
    if simt_src.token_count() != schedule.source_len() || simt_src.token_count() != dual.simt_len() {
        return Err(Error::Dimension(
            "schedule, source boundaries and dual segmentation disagree on source length".into(),
        ));
    }
    let limits = schedule
        .reads()
        .iter()
        .map(|&g| lm_attend_limit(simt_src.words_completed(g), dual))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttentionMask::from_fn(schedule.target_len(), dual.lm_len(), |i, j| {
        j <= limits[i - 1]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> TokenizedSentence {
        TokenizedSentence::from_marked(s).unwrap()
    }

    #[test]
    fn identical_tokenizations_align_identically() {
        let s = ts("Meine▁ B eine▁ waren▁");
        let dual = align_dual(&s, &s).unwrap();
        assert!(dual.words.iter().all(|w| w.simt_span == w.lm_span));
        let sync = sync_schedule(&[1, 2, 3], &dual).unwrap();
        assert!(sync.events.iter().all(|e| e.simt_read == e.lm_read));
    }

    #[test]
    fn different_segmentations_of_one_word() {
        let dual = align_dual(&ts("Tre mend ously▁"), &ts("Tremend ously▁")).unwrap();
        assert_eq!(dual.words.len(), 1);
        assert_eq!(dual.words[0].simt_span, (1, 3));
        assert_eq!(dual.words[0].lm_span, (1, 2));
        assert_eq!(dual.words[0].surface, "Tremendously");
        assert_eq!(lm_attend_limit(1, &dual).unwrap(), 2);
        assert_eq!(
            sync_schedule(&[1], &dual).unwrap().events,
            vec![SyncEvent { words_read: 1, simt_read: 3, lm_read: 2 }]
        );
    }

    #[test]
    fn mismatches_are_reported() {
        let err = align_dual(&ts("a▁ b▁"), &ts("ab▁")).unwrap_err();
        assert!(matches!(err, Error::VocabularyAlignment { word: 1, .. }));
        let err = align_dual(&ts("a▁ b▁ c▁"), &ts("a▁ b▁")).unwrap_err();
        assert!(matches!(err, Error::VocabularyAlignment { word: 3, .. }));
        let err = align_dual(&ts("a▁ bc▁"), &ts("a▁ bd▁")).unwrap_err();
        assert!(matches!(err, Error::VocabularyAlignment { word: 2, .. }));
    }

    #[test]
    fn sync_follows_span_ends() {
        let simt = ts("a b▁ c▁ d e▁");
        let lm = ts("ab▁ c▁ d e▁");
        let dual = align_dual(&simt, &lm).unwrap();
        let pairs: Vec<_> = sync_schedule(&[1, 2, 3], &dual)
            .unwrap()
            .events
            .iter()
            .map(|e| (e.simt_read, e.lm_read))
            .collect();
        assert_eq!(pairs, vec![(2, 1), (3, 2), (5, 4)]);
        // repeated counts and multi-word bursts
        let events = sync_schedule(&[0, 2, 2, 3], &dual).unwrap().events;
        assert_eq!(events.len(), 3);
        assert!(sync_schedule(&[4], &dual).is_err());
        assert!(sync_schedule(&[2, 1], &dual).is_err());
    }

    #[test]
    fn single_word_and_limits() {
        let dual = align_dual(&ts("x y z▁"), &ts("xy z▁")).unwrap();
        assert_eq!(
            sync_schedule(&[1], &dual).unwrap().events,
            vec![SyncEvent { words_read: 1, simt_read: 3, lm_read: 2 }]
        );
        assert_eq!(lm_attend_limit(0, &dual).unwrap(), 0);
        assert_eq!(lm_attend_limit(1, &dual).unwrap(), dual.lm_len());
        assert!(lm_attend_limit(2, &dual).is_err());
    }

    #[test]
    fn lm_cross_mask_tracks_complete_words() {
        let simt = ts("a b▁ c▁ d e▁");
        let lm = ts("ab▁ c▁ de▁");
        let dual = align_dual(&simt, &lm).unwrap();
        let schedule = Schedule::new(vec![1, 2, 3, 5], 5).unwrap();
        let mask = lm_cross_mask(&schedule, simt.boundaries(), &dual).unwrap();
        assert_eq!(mask.row_sums(), vec![0, 1, 2, 3]);
    }
}
