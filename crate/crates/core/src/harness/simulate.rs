//! Step-by-step simulation of a policy over one sentence pair.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::corpus::CorpusRecord;
use crate::harness::policy_spec::Policy;
use crate::policy::Schedule;
use crate::tokenization::{Token, TokenizedSentence};

/// Default cap on writer output, as a multiple of the source length.
pub const MAX_LEN_RATIO: usize = 4;

/// Produces the next target token given the source prefix read so far and
/// the target tokens already written; `None` ends the sentence.
pub trait WriterOracle {
    fn next_token(&mut self, source_prefix: &[Token], target_prefix: &[Token]) -> Option<Token>;
}

impl<F> WriterOracle for F
where
    F: FnMut(&[Token], &[Token]) -> Option<Token>,
{
    fn next_token(&mut self, source_prefix: &[Token], target_prefix: &[Token]) -> Option<Token> {
        self(source_prefix, target_prefix)
    }
}

/// Writes a fixed hypothesis regardless of the source.
#[derive(Debug, Clone)]
pub struct ReplayOracle {
    tokens: Vec<Token>,
}

impl ReplayOracle {
    pub fn new(hypothesis: &TokenizedSentence) -> Self {
        ReplayOracle {
            tokens: hypothesis.tokens().to_vec(),
        }
    }
}

impl WriterOracle for ReplayOracle {
    fn next_token(&mut self, _source_prefix: &[Token], target_prefix: &[Token]) -> Option<Token> {
        self.tokens.get(target_prefix.len()).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub step: usize,
    pub source_tokens: usize,
    /// Source words whose first token has been read.
    pub source_words: usize,
    pub written: Vec<Token>,
}

/// One row per source token read, listing the target tokens written right
/// after that read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepTrace {
    pub source: Vec<Token>,
    pub steps: Vec<Step>,
}

impl StepTrace {
    pub fn new(source: &TokenizedSentence, target: &TokenizedSentence, schedule: &Schedule) -> Result<Self> {
        if schedule.source_len() != source.len() || schedule.target_len() != target.len() {
            return Err(Error::Dimension(format!(
                "schedule is {}x{}, sentence pair is {}x{}",
                schedule.target_len(),
                schedule.source_len(),
                target.len(),
                source.len()
            )));
        }
        let mut steps: Vec<Step> = (1..=source.len())
            .map(|j| Step {
                step: j,
                source_tokens: j,
                source_words: source.boundaries().words_started(j),
                written: Vec::new(),
            })
            .collect();
        for (tok, &g) in target.tokens().iter().zip(schedule.reads()) {
            steps[g - 1].written.push(tok.clone());
        }
        Ok(StepTrace {
            source: source.tokens().to_vec(),
            steps,
        })
    }

    pub fn to_schedule(&self) -> Result<Schedule> {
        let reads = self
            .steps
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.source_tokens, s.written.len()))
            .collect();
        Schedule::new(reads, self.steps.len())
    }

    /// Steps that wrote at least one token.
    pub fn write_steps(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| !s.written.is_empty())
            .map(|s| s.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Simulation {
    pub id: usize,
    pub target: Vec<Token>,
    pub schedule: Schedule,
    pub trace: StepTrace,
}

fn sentence_from_output(mut tokens: Vec<Token>) -> Result<TokenizedSentence> {
    let Some(last) = tokens.pop() else {
        return Err(Error::Dimension("writer produced no tokens".into()));
    };
    tokens.push(Token::new(last.text(), true)?);
    TokenizedSentence::from_tokens(tokens)
}

/// Simulate `policy` on a record. With an oracle the target is generated
/// incrementally; without one the record's hypothesis (or reference) is
/// written on the policy's schedule.
pub fn simulate(
    record: &CorpusRecord,
    index: usize,
    policy: &Policy,
    oracle: Option<&mut dyn WriterOracle>,
    max_len: Option<usize>,
) -> Result<Simulation> {
    let src = &record.source;
    let (target, schedule) = match oracle {
        None => {
            let target = record
                .target()
                .ok_or_else(|| Error::InvalidParameter("no hypothesis and no writer oracle".into()))?;
            let schedule = policy.schedule(index, src.boundaries(), target.boundaries())?;
            (target.clone(), schedule)
        }
        Some(oracle) => {
            let max_len = max_len.unwrap_or(MAX_LEN_RATIO * src.len());
            let mut written: Vec<Token> = Vec::new();
            let mut reads = Vec::new();
            let mut read = 1;
            let (mut word_start, mut target_word) = (1, 1);
            loop {
                let i = written.len() + 1;
                let need = policy.online_requirement(i, word_start, target_word, src.boundaries())?;
                read = read.max(need).min(src.len());
                let Some(tok) = oracle.next_token(&src.tokens()[..read], &written) else {
                    break;
                };
                if written.len() == max_len {
                    return Err(Error::OracleRunaway { max_len });
                }
                if tok.is_word_final() {
                    word_start = i + 1;
                    target_word += 1;
                }
                reads.push(read);
                written.push(tok);
            }
            let target = sentence_from_output(written)?;
            (target, Schedule::new(reads, src.len())?)
        }
    };
    let trace = StepTrace::new(src, &target, &schedule)?;
    Ok(Simulation {
        id: record.id,
        target: target.tokens().to_vec(),
        schedule,
        trace,
    })
}

/// Plain-text table in the layout `Step | Streaming Input | Output`.
pub fn render_trace(trace: &StepTrace) -> String {
    let inputs: Vec<String> = trace
        .steps
        .iter()
        .map(|s| {
            trace.source[..s.source_tokens]
                .iter()
                .map(Token::marked)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let width = inputs
        .iter()
        .map(|s| s.chars().count())
        .chain(std::iter::once("Streaming Input".len()))
        .max()
        .unwrap_or(0);
    let pad = |s: &str| format!("{s}{}", " ".repeat(width - s.chars().count()));

    let mut out = String::new();
    let _ = writeln!(out, "Step | {} | Output", pad("Streaming Input"));
    let _ = writeln!(out, "-----+-{}-+-------", "-".repeat(width));
    for (step, input) in trace.steps.iter().zip(&inputs) {
        let output: Vec<String> = step.written.iter().map(Token::marked).collect();
        let line = format!("{:>4} | {} | {}", step.step, pad(input), output.join(" "));
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEGS_SRC: &str = "Meine▁ B eine▁ waren▁ bl ut über ström t .▁";
    const LEGS_WORD_HYP: &str = "My▁ leg s▁ were▁ bloo dy .▁";

    fn record(src: &str, hyp: &str) -> CorpusRecord {
        CorpusRecord {
            id: 1,
            source: TokenizedSentence::from_marked(src).unwrap(),
            hypothesis: Some(TokenizedSentence::from_marked(hyp).unwrap()),
            reference: None,
            alignment: None,
        }
    }

    fn outputs(trace: &StepTrace) -> Vec<String> {
        trace
            .steps
            .iter()
            .filter(|s| !s.written.is_empty())
            .map(|s| s.written.iter().map(Token::marked).collect::<Vec<_>>().join(" "))
            .collect()
    }

    #[test]
    fn legs_example_word_waitk_bursts() {
        let sim = simulate(&record(LEGS_SRC, LEGS_WORD_HYP), 0, &Policy::parse("waitk-word:k=1").unwrap(), None, None).unwrap();
        assert_eq!(sim.trace.write_steps(), vec![1, 3, 4, 10]);
        assert_eq!(outputs(&sim.trace), vec!["My▁", "leg s▁", "were▁", "bloo dy .▁"]);
        assert_eq!(sim.trace.to_schedule().unwrap(), sim.schedule);
        assert_eq!(sim.trace.steps.len(), 10);
        assert_eq!(sim.trace.steps[2].source_words, 2);
    }

    #[test]
    fn offline_is_one_burst() {
        let sim = simulate(&record(LEGS_SRC, LEGS_WORD_HYP), 0, &Policy::parse("offline").unwrap(), None, None).unwrap();
        assert_eq!(sim.trace.write_steps(), vec![10]);
    }

    #[test]
    fn replay_oracle_matches_fixed_hypothesis() {
        let rec = record(LEGS_SRC, "My▁ B ody▁ was▁ blue▁ and▁ my▁ leg s▁ were▁ blood - ri dden .▁");
        for spec in ["waitk-token:k=1", "waitk-word:k=2", "convert:waitk-token:k=1", "ablation:tw:waitk-token:k=2"] {
            let policy = Policy::parse(spec).unwrap();
            let fixed = simulate(&rec, 0, &policy, None, None).unwrap();
            let mut oracle = ReplayOracle::new(rec.hypothesis.as_ref().unwrap());
            let live = simulate(&rec, 0, &policy, Some(&mut oracle), None).unwrap();
            assert_eq!(fixed, live, "{spec}");
        }
    }

    #[test]
    fn oracle_sees_policy_prefix() {
        let rec = record("a b▁ c▁ d e▁", "x▁");
        let mut seen = Vec::new();
        let mut oracle = |src: &[Token], tgt: &[Token]| -> Option<Token> {
            seen.push(src.len());
            (tgt.len() < 3).then(|| Token::new("y", true).unwrap())
        };
        let sim = simulate(&rec, 0, &Policy::parse("waitk-word:k=1").unwrap(), Some(&mut oracle), None).unwrap();
        assert_eq!(sim.schedule.reads(), &[2, 3, 5]);
        assert_eq!(seen, vec![2, 3, 5, 5]);
    }

    #[test]
    fn oracle_runaway_and_empty_output() {
        let rec = record("a▁ b▁", "x▁");
        let policy = Policy::parse("waitk-token:k=1").unwrap();
        let mut forever = |_: &[Token], _: &[Token]| Some(Token::new("z", true).unwrap());
        assert_eq!(
            simulate(&rec, 0, &policy, Some(&mut forever), None).unwrap_err(),
            Error::OracleRunaway { max_len: 8 }
        );
        let mut silent = |_: &[Token], _: &[Token]| None;
        assert!(matches!(simulate(&rec, 0, &policy, Some(&mut silent), None), Err(Error::Dimension(_))));
        let mut one = |_: &[Token], t: &[Token]| (t.is_empty()).then(|| Token::new("q", false).unwrap());
        let sim = simulate(&rec, 0, &policy, Some(&mut one), Some(3)).unwrap();
        assert!(sim.target[0].is_word_final());
    }

    #[test]
    fn length_mismatch() {
        let src = TokenizedSentence::from_marked("a▁ b▁").unwrap();
        let tgt = TokenizedSentence::from_marked("x▁").unwrap();
        let s = Schedule::new(vec![1, 2], 2).unwrap();
        assert!(matches!(StepTrace::new(&src, &tgt, &s), Err(Error::Dimension(_))));
    }

    #[test]
    fn renders_table_layout() {
        let sim = simulate(&record(LEGS_SRC, LEGS_WORD_HYP), 0, &Policy::parse("waitk-word:k=1").unwrap(), None, None).unwrap();
        let text = render_trace(&sim.trace);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines[0].starts_with("Step | Streaming Input"));
        assert!(lines[4].ends_with("| leg s▁"));
        assert!(lines[3].starts_with("   2 | Meine▁ B ") && lines[3].ends_with('|'));
        let populated = lines[2..].iter().filter(|l| !l.trim_end().ends_with('|')).count();
        assert_eq!(populated, 4);

        let empty = StepTrace { source: vec![], steps: vec![] };
        assert_eq!(render_trace(&empty).lines().count(), 2);
    }
}
