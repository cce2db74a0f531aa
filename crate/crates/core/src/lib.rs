//! Word-level simultaneous translation policies: schedules, word-boundary
//! conversion, latency metrics, attention masks, LM vocabulary sync and
//! alignment-based read quality, plus a corpus harness.

pub mod alignment;
pub mod error;
pub mod harness;
pub mod latency;
pub mod lm_sync;
pub mod mask;
pub mod policy;
pub mod tokenization;

pub use error::{Error, Result};
pub use latency::{average_lagging, latency_report, word_average_lagging, AlParams, LatencyReport, Lagging};
pub use policy::{
    ablation_policy, itst_required_counts, itst_word_policy, to_word_policy, waitk_token, waitk_word, Ablation,
    Schedule, TransportMatrix,
};
pub use tokenization::{Boundaries, MarkerConvention, Token, TokenizedSentence, MARKER};
