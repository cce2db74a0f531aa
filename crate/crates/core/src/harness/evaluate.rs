//! Corpus-level latency and alignment-quality evaluation.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::alignment::{aligned_read_proportion, QualityReport};
use crate::error::{Error, Result};
use crate::harness::corpus::{CorpusEntry, CorpusRecord};
use crate::harness::policy_spec::Policy;
use crate::latency::{latency_report, AlParams};
use crate::policy::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" => Ok(OutputFormat::Text),
            other => Err(Error::InvalidParameter(format!(
                "unknown format {other:?} (expected json, csv or text)"
            ))),
        }
    }
}

/// Which target side alignments are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentSide {
    /// The ground-truth reference, with the policy applied to it.
    #[default]
    Reference,
    /// The hypothesis and its simulated schedule.
    Hypothesis,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub policy: Policy,
    pub params: AlParams,
    /// Worker threads; results are merged in input order regardless.
    pub workers: usize,
    pub strict: bool,
    pub alignment_side: AlignmentSide,
}

impl EvalConfig {
    pub fn new(policy: Policy) -> Self {
        EvalConfig {
            policy,
            params: AlParams::default(),
            workers: 1,
            strict: false,
            alignment_side: AlignmentSide::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub id: usize,
    pub token_al: f64,
    pub word_al: f64,
    pub source_tokens: usize,
    pub target_tokens: usize,
    pub source_words: usize,
    pub target_words: usize,
    pub schedule: Schedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordFailure {
    pub id: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub sentences: usize,
    pub failed: usize,
    pub mean_token_al: Option<f64>,
    pub mean_word_al: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<QualityReport>,
    pub policy: String,
    pub convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RecordFailure>,
    pub aggregate: Aggregate,
}

fn evaluate_record(record: &CorpusRecord, index: usize, config: &EvalConfig) -> Result<ResultRow> {
    let src = record.source.boundaries();
    let target = record
        .target()
        .ok_or_else(|| Error::InvalidParameter("record has neither hypothesis nor reference".into()))?;
    let tgt = target.boundaries();
    let schedule = config.policy.schedule(index, src, tgt)?;
    let report = latency_report(&schedule, src, tgt, config.params)?;

    let quality = match &record.alignment {
        None => None,
        Some(alignment) => Some(match (config.alignment_side, &record.reference) {
            (AlignmentSide::Reference, Some(reference)) if record.hypothesis.is_some() => {
                let forced = config.policy.schedule(index, src, reference.boundaries())?;
                aligned_read_proportion(&forced, src, reference.boundaries(), alignment)?
            }
            _ => aligned_read_proportion(&schedule, src, tgt, alignment)?,
        }),
    };

    Ok(ResultRow {
        id: record.id,
        token_al: report.token_al,
        word_al: report.word_al,
        source_tokens: src.token_count(),
        target_tokens: tgt.token_count(),
        source_words: src.word_count(),
        target_words: tgt.word_count(),
        schedule,
        quality,
    })
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| values.sum::<f64>() / n as f64)
}

/// Evaluate every record. Output order follows the input regardless of the
/// worker count; failed records are listed (or abort the run when strict).
pub fn evaluate_corpus(entries: &[CorpusEntry], config: &EvalConfig) -> Result<Evaluation> {
    if entries.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let run = |i: usize, entry: &CorpusEntry| -> Result<ResultRow> {
        let record = entry.as_ref().map_err(Clone::clone)?;
        evaluate_record(record, i, config).map_err(|e| e.in_record(record.id))
    };
    let results: Vec<Result<ResultRow>> = if config.workers <= 1 {
        entries.iter().enumerate().map(|(i, e)| run(i, e)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| entries.par_iter().enumerate().map(|(i, e)| run(i, e)).collect())
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(row) => rows.push(row),
            Err(e) if config.strict => return Err(e),
            Err(e) => {
                let id = match &e {
                    Error::Record { id, .. } => *id,
                    _ => i + 1,
                };
                failures.push(RecordFailure {
                    id,
                    error: e.to_string(),
                });
            }
        }
    }

    let alignment = rows
        .iter()
        .filter_map(|r| r.quality)
        .reduce(QualityReport::merge);
    let aggregate = Aggregate {
        sentences: rows.len(),
        failed: failures.len(),
        mean_token_al: mean(rows.iter().map(|r| r.token_al)),
        mean_word_al: mean(rows.iter().map(|r| r.word_al)),
        alignment,
        policy: config.policy.spec().to_string(),
        convention: config.params.to_string(),
    };
    Ok(Evaluation {
        rows,
        failures,
        aggregate,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl Evaluation {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,token_al,word_al,source_tokens,target_tokens,source_words,target_words,satisfied,aligned\n");
        for r in &self.rows {
            let (sat, total) = r
                .quality
                .map_or((String::new(), String::new()), |q| (q.satisfied.to_string(), q.total.to_string()));
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{},{},{},{},{sat},{total}",
                r.id, r.token_al, r.word_al, r.source_tokens, r.target_tokens, r.source_words, r.target_words
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = write!(out, "{:>5}  token_al={:.4}  word_al={:.4}", r.id, r.token_al, r.word_al);
            if let Some(q) = r.quality {
                let _ = write!(out, "  aligned={}/{}", q.satisfied, q.total);
            }
            out.push('\n');
        }
        for f in &self.failures {
            let _ = writeln!(out, "{:>5}  error: {}", f.id, f.error);
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "policy={}  sentences={}  failed={}  mean_token_al={}  mean_word_al={}",
            a.policy,
            a.sentences,
            a.failed,
            opt(a.mean_token_al),
            opt(a.mean_word_al)
        );
        if let Some(q) = a.alignment {
            let _ = writeln!(out, "aligned_read_proportion={} ({}/{})", opt(q.proportion), q.satisfied, q.total);
        }
        let _ = writeln!(out, "convention: {}", a.convention);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::{parse_corpus, CorpusText};
    use crate::tokenization::MarkerConvention;

    const SRC: &str = "Meine▁ B eine▁ waren▁ bl ut über ström t .▁\nIr gen det was▁ lag▁ in▁ der▁ Luft .▁\n";
    const HYP: &str = "My▁ leg s▁ were▁ bloo dy .▁\nSome thing▁ lay▁ in▁ the▁ air .▁\n";

    fn corpus(src: &str, hyp: &str) -> Vec<CorpusEntry> {
        parse_corpus(
            CorpusText {
                source: src,
                hypothesis: Some(hyp),
                ..Default::default()
            },
            MarkerConvention::Suffix,
        )
        .unwrap()
    }

    #[test]
    fn fixture_pair_word_waitk() {
        let config = EvalConfig::new(Policy::parse("waitk-word:k=1").unwrap());
        let eval = evaluate_corpus(&corpus(SRC, HYP), &config).unwrap();
        assert_eq!(eval.aggregate.mean_word_al, Some(1.0));
        assert_eq!(eval.rows.len(), 2);
        assert!(eval.failures.is_empty());
    }

    #[test]
    fn empty_corpus() {
        let config = EvalConfig::new(Policy::parse("offline").unwrap());
        assert_eq!(evaluate_corpus(&[], &config).unwrap_err(), Error::EmptyCorpus);
    }

    #[test]
    fn failures_are_reported_or_fatal() {
        let entries = corpus("a▁ b▁\n▁\nc▁", "x▁\ny▁\nz▁");
        let mut config = EvalConfig::new(Policy::parse("waitk-token:k=1").unwrap());
        let eval = evaluate_corpus(&entries, &config).unwrap();
        assert_eq!(eval.rows.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(eval.failures.len(), 1);
        assert_eq!(eval.failures[0].id, 2);
        config.strict = true;
        assert!(matches!(evaluate_corpus(&entries, &config), Err(Error::Record { id: 2, .. })));
    }

    #[test]
    fn alignment_scored_on_reference() {
        let entries = parse_corpus(
            CorpusText {
                source: "Meine▁ B eine▁ waren▁ bl ut über ström t .▁",
                hypothesis: Some("My▁ B ody▁ was▁"),
                reference: Some("My▁ leg s▁ were▁ covered▁ in▁ blood .▁"),
                alignment: Some("1-1"),
            },
            MarkerConvention::Suffix,
        )
        .unwrap();
        let mut config = EvalConfig::new(Policy::parse("waitk-token:k=1").unwrap());
        let eval = evaluate_corpus(&entries, &config).unwrap();
        assert_eq!(eval.rows[0].quality.unwrap().satisfied, 0);
        assert_eq!(eval.rows[0].target_tokens, 4);
        config.policy = Policy::parse("convert:waitk-token:k=1").unwrap();
        let eval = evaluate_corpus(&entries, &config).unwrap();
        assert_eq!(eval.rows[0].quality.unwrap().satisfied, 1);
        assert_eq!(eval.aggregate.alignment.unwrap().proportion, Some(1.0));
    }

    #[test]
    fn formats() {
        let config = EvalConfig::new(Policy::parse("waitk-word:k=1").unwrap());
        let eval = evaluate_corpus(&corpus(SRC, HYP), &config).unwrap();
        let csv = eval.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,1.342857,1.000000,10,7,4,4"));
        assert!(eval.to_text().contains("mean_word_al=1.000000"));
        let json = serde_json::to_value(&eval).unwrap();
        assert_eq!(json["rows"][0]["schedule"], serde_json::json!([1, 3, 3, 4, 10, 10, 10]));
        assert!("yaml".parse::<OutputFormat>().is_err());
    }
}
