use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wordsimt::harness::{
    emit_curve, evaluate_corpus, load_corpus, parse_curve_csv, parse_latex_table, render_trace, simulate,
    AlignmentSide, CorpusEntry, CorpusFiles, CorpusRecord, EvalConfig, LatencyAxis, OutputFormat, Policy,
};
use wordsimt::lm_sync::{align_dual, lm_cross_mask, sync_schedule, SyncEvent};
use wordsimt::mask::{causal_mask, cross_mask, intra_word_mask, AttentionMask};
use wordsimt::policy::{to_word_policy, ConversionResult};
use wordsimt::{Error, MarkerConvention, Schedule, TokenizedSentence};

#[derive(Parser)]
#[command(name = "wordsimt", version, about = "Word-level simultaneous translation policies and metrics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Source token file, one sentence per line.
    #[arg(long, global = true)]
    source: Option<PathBuf>,
    /// Target token file (hypotheses; references for align-eval).
    #[arg(long, global = true)]
    target: Option<PathBuf>,
    /// Reference token file.
    #[arg(long, global = true)]
    reference: Option<PathBuf>,
    /// Pharaoh alignment file, parallel with the token files.
    #[arg(long, global = true)]
    align: Option<PathBuf>,
    /// Source tokenized with the translation model's vocabulary.
    #[arg(long, global = true)]
    simt_tokens: Option<PathBuf>,
    /// Source tokenized with the language model's vocabulary.
    #[arg(long, global = true)]
    lm_tokens: Option<PathBuf>,
    /// Policy, e.g. waitk-word:k=1 or convert:waitk-token:k=3.
    #[arg(long, global = true)]
    policy: Option<String>,
    #[arg(long, global = true, default_value = "suffix")]
    marker_convention: MarkerConvention,
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Fail on the first record error (exit code 1).
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskKind {
    Causal,
    IntraWord,
    Cross,
    Lm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Token,
    Word,
}

#[derive(Subcommand)]
enum Command {
    /// Step-by-step READ/WRITE trace of a policy.
    Simulate,
    /// Word-boundary conversion of a token-level policy.
    Convert,
    /// Token- and word-level Average Lagging.
    Latency {
        /// Score alignments against the hypothesis instead of the reference.
        #[arg(long)]
        score_hypothesis: bool,
    },
    /// Attention masks.
    Mask {
        #[arg(long, value_enum)]
        kind: MaskKind,
    },
    /// Synchronisation points between two source tokenizations.
    Sync,
    /// Proportion of aligned source words read before their target word.
    AlignEval,
    /// Latency/quality curve points from a result table.
    Curve {
        /// LaTeX-style table or CSV with label,latency,quality columns.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "word")]
        axis: Axis,
    },
}

enum Failure {
    Usage(String),
    Record(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Record { .. } => Failure::Record(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn policy(common: &Common) -> CliResult<Policy> {
    let spec = common
        .policy
        .as_deref()
        .ok_or_else(|| Failure::Usage("--policy is required".into()))?;
    Ok(Policy::parse(spec)?)
}

fn corpus(common: &Common, target_as_reference: bool) -> CliResult<Vec<CorpusEntry>> {
    let target = require(&common.target, "target")?.to_path_buf();
    let (hypothesis, reference) = if target_as_reference {
        (None, Some(target))
    } else {
        (Some(target), common.reference.clone())
    };
    Ok(load_corpus(&CorpusFiles {
        source: require(&common.source, "source")?.to_path_buf(),
        hypothesis,
        reference,
        alignment: common.align.clone(),
        convention: common.marker_convention,
    })?)
}

/// Run `f` on every record. Failures are reported on stderr and skipped,
/// or abort the run under `--strict`.
fn each_record<T>(
    entries: &[CorpusEntry],
    strict: bool,
    mut f: impl FnMut(usize, &CorpusRecord) -> wordsimt::Result<T>,
) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let result = entry
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|r| f(i, r).map_err(|e| Error::Record { id: r.id, source: Box::new(e) }));
        match result {
            Ok(v) => out.push(v),
            Err(e) if strict => return Err(Failure::Record(e.to_string())),
            Err(e) => eprintln!("warning: {e}"),
        }
    }
    Ok(out)
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Converted {
    id: usize,
    g: Schedule,
    #[serde(flatten)]
    conversion: ConversionResult,
}

#[derive(Serialize)]
struct IdMask {
    id: usize,
    mask: AttentionMask,
}

#[derive(Serialize)]
struct IdSync {
    id: usize,
    events: Vec<SyncEvent>,
}

fn cmd_simulate(common: &Common, format: OutputFormat) -> CliResult<String> {
    let policy = policy(common)?;
    let entries = corpus(common, false)?;
    let sims = each_record(&entries, common.strict, |i, r| simulate(r, i, &policy, None, None))?;
    Ok(match format {
        OutputFormat::Json => json(&sims),
        OutputFormat::Csv => {
            let mut out = String::from("id,step,source_tokens,source_words,written\n");
            for sim in &sims {
                for s in &sim.trace.steps {
                    let written: Vec<String> = s.written.iter().map(|t| t.marked()).collect();
                    let _ = writeln!(out, "{},{},{},{},{}", sim.id, s.step, s.source_tokens, s.source_words, written.join(" "));
                }
            }
            out
        }
        OutputFormat::Text => sims
            .iter()
            .map(|sim| format!("# {}\n{}", sim.id, render_trace(&sim.trace)))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

fn cmd_convert(common: &Common, format: OutputFormat) -> CliResult<String> {
    let policy = policy(common)?;
    let entries = corpus(common, false)?;
    let rows = each_record(&entries, common.strict, |i, r| {
        let tgt = r.target().expect("target file is required").boundaries();
        let g = policy.schedule(i, r.source.boundaries(), tgt)?;
        let conversion = to_word_policy(&g, r.source.boundaries(), tgt)?;
        Ok(Converted { id: r.id, g, conversion })
    })?;
    Ok(match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv => {
            let mut out = String::from("id,i,g,r,b,w\n");
            for row in &rows {
                let c = &row.conversion;
                for (i, &g) in row.g.reads().iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{g},{},{},{}",
                        row.id,
                        i + 1,
                        c.read_refined[i],
                        c.target_word_ends[i],
                        c.schedule.reads()[i]
                    );
                }
            }
            out
        }
        OutputFormat::Text => {
            let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            let mut out = String::new();
            for row in &rows {
                let c = &row.conversion;
                let _ = writeln!(out, "# {}", row.id);
                let _ = writeln!(out, "g: {}", list(row.g.reads()));
                let _ = writeln!(out, "r: {}", list(&c.read_refined));
                let _ = writeln!(out, "b: {}", list(&c.target_word_ends));
                let _ = writeln!(out, "w: {}", list(c.schedule.reads()));
            }
            out
        }
    })
}

fn cmd_evaluate(common: &Common, format: OutputFormat, align_eval: bool, score_hypothesis: bool) -> CliResult<String> {
    let entries = corpus(common, align_eval)?;
    let mut config = EvalConfig::new(policy(common)?);
    config.workers = common.workers.max(1);
    config.strict = common.strict;
    if score_hypothesis {
        config.alignment_side = AlignmentSide::Hypothesis;
    }
    let eval = evaluate_corpus(&entries, &config)?;
    for f in &eval.failures {
        eprintln!("warning: {}", f.error);
    }
    Ok(match format {
        OutputFormat::Json => json(&eval),
        OutputFormat::Csv => eval.to_csv(),
        OutputFormat::Text => eval.to_text(),
    })
}

fn read_source_lines(path: &Path, convention: MarkerConvention) -> CliResult<Vec<wordsimt::Result<TokenizedSentence>>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if text.lines().next().is_none() {
        return Err(Error::EmptyCorpus.into());
    }
    Ok(text.lines().map(|l| TokenizedSentence::parse(l, convention)).collect())
}

fn cmd_mask(common: &Common, format: OutputFormat, kind: MaskKind) -> CliResult<String> {
    let masks: Vec<IdMask> = match kind {
        MaskKind::Causal | MaskKind::IntraWord => {
            let lines = read_source_lines(require(&common.source, "source")?, common.marker_convention)?;
            let mut out = Vec::new();
            for (i, line) in lines.into_iter().enumerate() {
                let mask = line.and_then(|s| match kind {
                    MaskKind::Causal => causal_mask(s.len()),
                    _ => Ok(intra_word_mask(s.boundaries())),
                });
                match mask {
                    Ok(mask) => out.push(IdMask { id: i + 1, mask }),
                    Err(e) => {
                        let e = Error::Record { id: i + 1, source: Box::new(e) };
                        if common.strict {
                            return Err(Failure::Record(e.to_string()));
                        }
                        eprintln!("warning: {e}");
                    }
                }
            }
            out
        }
        MaskKind::Cross => {
            let policy = policy(common)?;
            let entries = corpus(common, false)?;
            each_record(&entries, common.strict, |i, r| {
                let tgt = r.target().expect("target file is required").boundaries();
                let schedule = policy.schedule(i, r.source.boundaries(), tgt)?;
                Ok(IdMask { id: r.id, mask: cross_mask(&schedule) })
            })?
        }
        MaskKind::Lm => {
            let policy = policy(common)?;
            let simt = read_source_lines(require(&common.simt_tokens, "simt-tokens")?, common.marker_convention)?;
            let lm = read_source_lines(require(&common.lm_tokens, "lm-tokens")?, common.marker_convention)?;
            let targets = read_source_lines(require(&common.target, "target")?, common.marker_convention)?;
            if simt.len() != lm.len() || simt.len() != targets.len() {
                return Err(Failure::Usage("simt, lm and target files differ in line count".into()));
            }
            let mut out = Vec::new();
            for (i, ((s, l), t)) in simt.into_iter().zip(lm).zip(targets).enumerate() {
                let mask = (|| {
                    let (s, l, t) = (s?, l?, t?);
                    let dual = align_dual(&s, &l)?;
                    let schedule = policy.schedule(i, s.boundaries(), t.boundaries())?;
                    lm_cross_mask(&schedule, s.boundaries(), &dual)
                })();
                match mask {
                    Ok(mask) => out.push(IdMask { id: i + 1, mask }),
                    Err(e) => {
                        let e = Error::Record { id: i + 1, source: Box::new(e) };
                        if common.strict {
                            return Err(Failure::Record(e.to_string()));
                        }
                        eprintln!("warning: {e}");
                    }
                }
            }
            out
        }
    };
    Ok(match format {
        OutputFormat::Json => json(&masks),
        OutputFormat::Csv => {
            let mut out = String::from("id,row,col\n");
            for m in &masks {
                for i in 1..=m.mask.rows() {
                    for j in 1..=m.mask.cols() {
                        if m.mask.allows(i, j) {
                            let _ = writeln!(out, "{},{i},{j}", m.id);
                        }
                    }
                }
            }
            out
        }
        OutputFormat::Text => masks
            .iter()
            .map(|m| format!("# {}\n{}", m.id, m.mask.to_grid()))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

/// Sync points for every source word, or for the word-level reads of
/// `--policy` against `--target` when both are given.
fn cmd_sync(common: &Common, format: OutputFormat) -> CliResult<String> {
    let simt = read_source_lines(require(&common.simt_tokens, "simt-tokens")?, common.marker_convention)?;
    let lm = read_source_lines(require(&common.lm_tokens, "lm-tokens")?, common.marker_convention)?;
    if simt.len() != lm.len() {
        return Err(Failure::Usage("simt and lm token files differ in line count".into()));
    }
    let driver = match (&common.policy, &common.target) {
        (Some(_), Some(t)) => {
            let targets = read_source_lines(t, common.marker_convention)?;
            if targets.len() != simt.len() {
                return Err(Failure::Usage("target and simt token files differ in line count".into()));
            }
            Some((policy(common)?, targets))
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for (i, (s, l)) in simt.into_iter().zip(lm).enumerate() {
        let result = (|| {
            let (s, l) = (s?, l?);
            let dual = align_dual(&s, &l)?;
            let words_read: Vec<usize> = match &driver {
                None => (1..=dual.word_count()).collect(),
                Some((policy, targets)) => {
                    let t = targets[i].as_ref().map_err(Clone::clone)?;
                    let schedule = policy.schedule(i, s.boundaries(), t.boundaries())?;
                    schedule
                        .reads()
                        .iter()
                        .map(|&g| s.boundaries().words_completed(g))
                        .collect()
                }
            };
            Ok::<_, Error>(sync_schedule(&words_read, &dual)?.events)
        })();
        match result {
            Ok(events) => rows.push(IdSync { id: i + 1, events }),
            Err(e) => {
                let e = Error::Record { id: i + 1, source: Box::new(e) };
                if common.strict {
                    return Err(Failure::Record(e.to_string()));
                }
                eprintln!("warning: {e}");
            }
        }
    }
    Ok(match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv => {
            let mut out = String::from("id,words_read,simt_read,lm_read\n");
            for r in &rows {
                for e in &r.events {
                    let _ = writeln!(out, "{},{},{},{}", r.id, e.words_read, e.simt_read, e.lm_read);
                }
            }
            out
        }
        OutputFormat::Text => {
            let mut out = String::new();
            for r in &rows {
                let pairs: Vec<String> = r.events.iter().map(|e| format!("({},{})", e.simt_read, e.lm_read)).collect();
                let _ = writeln!(out, "{}: {}", r.id, pairs.join(" "));
            }
            out
        }
    })
}

fn cmd_curve(input: &Path, axis: Axis, format: OutputFormat) -> CliResult<String> {
    let text = fs::read_to_string(input).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
    let is_csv = input.extension().is_some_and(|e| e == "csv")
        || text.lines().next().is_some_and(|l| l.split(',').any(|c| c.trim() == "label"));
    let points = if is_csv {
        parse_curve_csv(&text)?
    } else {
        let axis = match axis {
            Axis::Token => LatencyAxis::Token,
            Axis::Word => LatencyAxis::Word,
        };
        parse_latex_table(&text, axis)?
    };
    Ok(emit_curve(&points, format)?)
}

fn run(cli: Cli) -> CliResult<String> {
    let common = &cli.common;
    let format = |default| common.format.unwrap_or(default);
    match cli.command {
        Command::Simulate => cmd_simulate(common, format(OutputFormat::Text)),
        Command::Convert => cmd_convert(common, format(OutputFormat::Json)),
        Command::Latency { score_hypothesis } => cmd_evaluate(common, format(OutputFormat::Json), false, score_hypothesis),
        Command::Mask { kind } => cmd_mask(common, format(OutputFormat::Text), kind),
        Command::Sync => cmd_sync(common, format(OutputFormat::Json)),
        Command::AlignEval => cmd_evaluate(common, format(OutputFormat::Json), true, false),
        Command::Curve { input, axis } => cmd_curve(&input, axis, format(OutputFormat::Csv)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Record(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
