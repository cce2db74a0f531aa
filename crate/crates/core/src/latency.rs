//! Average Lagging at the token level and its word-level projection.
//!
//! Word-level delays count a source word as read once its first token is
//! read, and a target word as written once its last token is written.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::policy::Schedule;
use crate::tokenization::Boundaries;

/// How the target/source length ratio is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaConvention {
    /// `gamma = |y| / |x|` using the hypothesis length.
    #[default]
    HypothesisOverSource,
}

/// Where the sum over target positions stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauConvention {
    /// First target position written after the whole source was read;
    /// `|y|` when that never happens.
    #[default]
    FirstFullReadFallbackM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AlParams {
    pub gamma: GammaConvention,
    pub tau: TauConvention,
}

impl fmt::Display for AlParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gamma = match self.gamma {
            GammaConvention::HypothesisOverSource => "gamma=|y|/|x|",
        };
        let tau = match self.tau {
            TauConvention::FirstFullReadFallbackM => "tau=first full read (fallback |y|)",
        };
        write!(f, "{gamma}; {tau}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lagging {
    pub al: f64,
    pub gamma: f64,
    pub tau: usize,
}

/// Average Lagging over raw delays: `delays[i]` source units were read when
/// target unit `i + 1` was emitted, out of `source_len` in total.
pub fn lagging(delays: &[usize], source_len: usize, params: AlParams) -> Result<Lagging> {
    if delays.is_empty() || source_len == 0 {
        return Err(Error::Dimension("average lagging needs non-empty sequences".into()));
    }
    let gamma = match params.gamma {
        GammaConvention::HypothesisOverSource => delays.len() as f64 / source_len as f64,
    };
    let tau = match params.tau {
        TauConvention::FirstFullReadFallbackM => delays
            .iter()
            .position(|&d| d >= source_len)
            .map_or(delays.len(), |i| i + 1),
    };
    let total: f64 = delays[..tau]
        .iter()
        .enumerate()
        .map(|(i, &d)| d as f64 - i as f64 / gamma)
        .sum();
    Ok(Lagging {
        al: total / tau as f64,
        gamma,
        tau,
    })
}

pub fn average_lagging(schedule: &Schedule, params: AlParams) -> Lagging {
    lagging(schedule.reads(), schedule.source_len(), params)
        .expect("a valid schedule is non-empty")
}

/// Source words started before each target word was completed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordDelays {
    pub delays: Vec<usize>,
    pub source_words: usize,
    pub target_words: usize,
}

pub fn project_word_delays(schedule: &Schedule, src: &Boundaries, tgt: &Boundaries) -> Result<WordDelays> {
    schedule.check_dims(src, tgt)?;
    let delays = tgt
        .ends()
        .iter()
        .map(|&last| src.words_started(schedule.reads()[last - 1]))
        .collect();
    Ok(WordDelays {
        delays,
        source_words: src.word_count(),
        target_words: tgt.word_count(),
    })
}

pub fn word_average_lagging(
    schedule: &Schedule,
    src: &Boundaries,
    tgt: &Boundaries,
    params: AlParams,
) -> Result<Lagging> {
    let words = project_word_delays(schedule, src, tgt)?;
    lagging(&words.delays, words.source_words, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerLevel<T> {
    pub token: T,
    pub word: T,
}

/// Token- and word-level AL for one sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub token_al: f64,
    pub word_al: f64,
    pub gamma: PerLevel<f64>,
    pub tau: PerLevel<usize>,
    pub convention: String,
}

pub fn latency_report(
    schedule: &Schedule,
    src: &Boundaries,
    tgt: &Boundaries,
    params: AlParams,
) -> Result<LatencyReport> {
    let token = average_lagging(schedule, params);
    let word = word_average_lagging(schedule, src, tgt, params)?;
    Ok(LatencyReport {
        token_al: token.al,
        word_al: word.al,
        gamma: PerLevel {
            token: token.gamma,
            word: word.gamma,
        },
        tau: PerLevel {
            token: token.tau,
            word: word.tau,
        },
        convention: params.to_string(),
    })
}
