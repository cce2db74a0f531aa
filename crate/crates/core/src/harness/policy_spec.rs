//! Policy specification strings used on the command line.
//!
//! ```text
//! offline
//! waitk-token:k=3
//! waitk-word:k=1
//! convert:<spec>
//! ablation:ww:<spec> | ablation:tw:<spec> | ablation:wt:<spec>
//! ablation:tktk:k=2
//! itst:delta=0.6,transport=FILE
//! itst-word:delta=0.6,transport=FILE
//! ```
//!
//! A transport file holds one JSON matrix (array of rows) per line, aligned
//! with the corpus lines.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::policy::{
    ablation_policy, alternating_tokens, itst_required_counts, itst_word_policy, to_word_policy,
    waitk_token, waitk_word, Ablation, Schedule, TransportMatrix,
};
use crate::tokenization::Boundaries;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Offline,
    WaitkToken { k: usize },
    WaitkWord { k: usize },
    Convert(Box<PolicySpec>),
    /// `base` is `None` only for the alternating-tokens ablation.
    Ablation {
        ablation: Ablation,
        base: Option<Box<PolicySpec>>,
    },
    Itst {
        delta: f64,
        transport: PathBuf,
        word_level: bool,
    },
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn parse_k(params: &str) -> Result<usize> {
    let k = params
        .strip_prefix("k=")
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| bad(format!("expected k=N, found {params:?}")))?;
    if k == 0 {
        return Err(bad("k must be >= 1"));
    }
    Ok(k)
}

fn parse_itst(params: &str, word_level: bool) -> Result<PolicySpec> {
    let mut delta = None;
    let mut transport = None;
    for kv in params.split(',') {
        match kv.split_once('=') {
            Some(("delta", v)) => {
                delta = Some(v.parse::<f64>().map_err(|_| bad(format!("bad delta {v:?}")))?)
            }
            Some(("transport", v)) if !v.is_empty() => transport = Some(PathBuf::from(v)),
            _ => return Err(bad(format!("unknown itst parameter {kv:?}"))),
        }
    }
    let delta = delta.ok_or_else(|| bad("itst requires delta="))?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(bad(format!("delta {delta} outside (0, 1)")));
    }
    Ok(PolicySpec::Itst {
        delta,
        transport: transport.ok_or_else(|| bad("itst requires transport=FILE"))?,
        word_level,
    })
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "offline" if rest.is_empty() => Ok(PolicySpec::Offline),
            "waitk-token" => Ok(PolicySpec::WaitkToken { k: parse_k(rest)? }),
            "waitk-word" => Ok(PolicySpec::WaitkWord { k: parse_k(rest)? }),
            "convert" => Ok(PolicySpec::Convert(Box::new(rest.parse()?))),
            "ablation" => {
                let (kind, tail) = rest.split_once(':').unwrap_or((rest, ""));
                if kind.eq_ignore_ascii_case("tktk") {
                    Ok(PolicySpec::Ablation {
                        ablation: Ablation::AlternatingTokens { k: parse_k(tail)? },
                        base: None,
                    })
                } else {
                    let ablation = Ablation::new(kind, None)?;
                    if tail.is_empty() {
                        return Err(bad(format!("ablation:{kind} needs a base policy")));
                    }
                    Ok(PolicySpec::Ablation {
                        ablation,
                        base: Some(Box::new(tail.parse()?)),
                    })
                }
            }
            "itst" => parse_itst(rest, false),
            "itst-word" => parse_itst(rest, true),
            _ => Err(bad(format!("unknown policy {s:?}"))),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Offline => f.write_str("offline"),
            PolicySpec::WaitkToken { k } => write!(f, "waitk-token:k={k}"),
            PolicySpec::WaitkWord { k } => write!(f, "waitk-word:k={k}"),
            PolicySpec::Convert(base) => write!(f, "convert:{base}"),
            PolicySpec::Ablation { ablation, base: None } => write!(f, "ablation:{ablation}"),
            PolicySpec::Ablation {
                ablation,
                base: Some(base),
            } => write!(f, "ablation:{ablation}:{base}"),
            PolicySpec::Itst {
                delta,
                transport,
                word_level,
            } => write!(
                f,
                "{}:delta={delta},transport={}",
                if *word_level { "itst-word" } else { "itst" },
                transport.display()
            ),
        }
    }
}

impl PolicySpec {
    fn transport_path(&self) -> Option<&Path> {
        match self {
            PolicySpec::Itst { transport, .. } => Some(transport),
            PolicySpec::Convert(base) => base.transport_path(),
            PolicySpec::Ablation { base: Some(base), .. } => base.transport_path(),
            _ => None,
        }
    }
}

/// A policy specification with its transport matrices loaded.
#[derive(Debug, Clone)]
pub struct Policy {
    spec: PolicySpec,
    transports: Option<Arc<Vec<TransportMatrix>>>,
}

pub fn read_transport_lines(text: &str) -> Result<Vec<TransportMatrix>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str::<TransportMatrix>(line).map_err(|e| Error::Parse {
                column: e.column(),
                message: format!("transport line {}: {e}", i + 1),
            })
        })
        .collect()
}

impl Policy {
    /// Reads the transport file if the spec names one.
    pub fn load(spec: PolicySpec) -> Result<Self> {
        let transports = match spec.transport_path() {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Some(Arc::new(read_transport_lines(&text)?))
            }
            None => None,
        };
        Ok(Policy { spec, transports })
    }

    /// Parse and load in one step.
    pub fn parse(spec: &str) -> Result<Self> {
        Policy::load(spec.parse()?)
    }

    /// Attach matrices directly instead of reading the named file.
    pub fn with_transports(spec: PolicySpec, transports: Vec<TransportMatrix>) -> Self {
        Policy {
            spec,
            transports: Some(Arc::new(transports)),
        }
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    /// Schedule for the `index`-th corpus record (0-based).
    pub fn schedule(&self, index: usize, src: &Boundaries, tgt: &Boundaries) -> Result<Schedule> {
        self.schedule_for(&self.spec, index, src, tgt)
    }

    fn schedule_for(&self, spec: &PolicySpec, index: usize, src: &Boundaries, tgt: &Boundaries) -> Result<Schedule> {
        let (n, m) = (src.token_count(), tgt.token_count());
        match spec {
            PolicySpec::Offline => Schedule::offline(n, m),
            PolicySpec::WaitkToken { k } => waitk_token(*k, n, m),
            PolicySpec::WaitkWord { k } => waitk_word(*k, src, tgt),
            PolicySpec::Convert(base) => {
                let base = self.schedule_for(base, index, src, tgt)?;
                Ok(to_word_policy(&base, src, tgt)?.schedule)
            }
            PolicySpec::Ablation { ablation, base } => match base {
                Some(base) => {
                    let base = self.schedule_for(base, index, src, tgt)?;
                    ablation_policy(*ablation, &base, src, tgt)
                }
                None => match ablation {
                    Ablation::AlternatingTokens { k } => alternating_tokens(*k, n, m),
                    other => Err(bad(format!("ablation {other} needs a base policy"))),
                },
            },
            PolicySpec::Itst {
                delta, word_level, ..
            } => {
                let matrix = self
                    .transports
                    .as_ref()
                    .and_then(|t| t.get(index))
                    .ok_or_else(|| bad(format!("no transport matrix for record {}", index + 1)))?;
                if matrix.target_len() != m || matrix.source_len() != n {
                    return Err(Error::Dimension(format!(
                        "transport matrix is {}x{}, sentence pair is {m}x{n}",
                        matrix.target_len(),
                        matrix.source_len()
                    )));
                }
                let counts = itst_required_counts(matrix, *delta)?;
                if *word_level {
                    itst_word_policy(&counts, src, tgt)
                } else {
                    Ok(counts)
                }
            }
        }
    }

    /// Source tokens required before writing target token `i`, computed
    /// incrementally: `word_start` is the first token of the target word
    /// being written and `target_word` its 1-based index. Fails for policies
    /// that need the whole target up front.
    pub fn online_requirement(&self, i: usize, word_start: usize, target_word: usize, src: &Boundaries) -> Result<usize> {
        online(&self.spec, i, word_start, target_word, src)
    }
}

fn online(spec: &PolicySpec, i: usize, word_start: usize, target_word: usize, src: &Boundaries) -> Result<usize> {
    let n = src.token_count();
    let lift = |g: usize| src.next_at_or_after(g).unwrap_or(n);
    match spec {
        PolicySpec::Offline => Ok(n),
        PolicySpec::WaitkToken { k } => Ok((k + i - 1).min(n)),
        PolicySpec::WaitkWord { k } => src.word_last((k + target_word - 1).min(src.word_count())),
        PolicySpec::Convert(base)
        | PolicySpec::Ablation {
            ablation: Ablation::WordReadWordWrite,
            base: Some(base),
        } => Ok(lift(online(base, word_start, word_start, target_word, src)?)),
        PolicySpec::Ablation {
            ablation: Ablation::TokenReadWordWrite,
            base: Some(base),
        } => online(base, word_start, word_start, target_word, src),
        PolicySpec::Ablation {
            ablation: Ablation::WordReadTokenWrite,
            base: Some(base),
        } => Ok(lift(online(base, i, word_start, target_word, src)?)),
        PolicySpec::Ablation {
            ablation: Ablation::AlternatingTokens { k },
            ..
        } => Ok((k * i.div_ceil(*k)).min(n)),
        PolicySpec::Ablation { base: None, .. } => Err(bad("ablation needs a base policy")),
        PolicySpec::Itst { .. } => Err(bad(
            "itst policies need a transport matrix over a known target; supply a hypothesis",
        )),
    }
}
