use std::fs;
use std::path::{Path, PathBuf};

use crate::alignment::{parse_pharaoh, AlignmentSet};
use crate::error::{Error, Result};
use crate::tokenization::{MarkerConvention, TokenizedSentence};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    /// 1-based line number.
    pub id: usize,
    pub source: TokenizedSentence,
    pub hypothesis: Option<TokenizedSentence>,
    pub reference: Option<TokenizedSentence>,
    pub alignment: Option<AlignmentSet>,
}

impl CorpusRecord {
    /// The target used for latency: the hypothesis when present, otherwise
    /// the reference.
    pub fn target(&self) -> Option<&TokenizedSentence> {
        self.hypothesis.as_ref().or(self.reference.as_ref())
    }
}

/// A record that parsed, or the error that prevented it.
pub type CorpusEntry = Result<CorpusRecord>;

#[derive(Debug, Clone, Default)]
pub struct CorpusFiles {
    pub source: PathBuf,
    pub hypothesis: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub alignment: Option<PathBuf>,
    pub convention: MarkerConvention,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// In-memory parallel texts, one sentence per line.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusText<'a> {
    pub source: &'a str,
    pub hypothesis: Option<&'a str>,
    pub reference: Option<&'a str>,
    pub alignment: Option<&'a str>,
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

/// Split parallel texts into records. Line-count mismatches fail the whole
/// corpus; a line that does not parse fails only its own record.
pub fn parse_corpus(text: CorpusText<'_>, convention: MarkerConvention) -> Result<Vec<CorpusEntry>> {
    let source = lines(text.source);
    if source.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let parallel = |name: &str, t: Option<&str>| -> Result<Option<Vec<String>>> {
        let Some(t) = t else { return Ok(None) };
        let l: Vec<String> = lines(t).into_iter().map(str::to_owned).collect();
        if l.len() != source.len() {
            return Err(Error::Dimension(format!(
                "{name} has {} lines, source has {}",
                l.len(),
                source.len()
            )));
        }
        Ok(Some(l))
    };
    let hyp = parallel("hypothesis", text.hypothesis)?;
    let reference = parallel("reference", text.reference)?;
    let align = parallel("alignment", text.alignment)?;

    let parse = |line: &str| TokenizedSentence::parse(line, convention);
    Ok(source
        .iter()
        .enumerate()
        .map(|(i, src)| {
            let id = i + 1;
            let build = || -> Result<CorpusRecord> {
                Ok(CorpusRecord {
                    id,
                    source: parse(src)?,
                    hypothesis: hyp.as_ref().map(|h| parse(&h[i])).transpose()?,
                    reference: reference.as_ref().map(|r| parse(&r[i])).transpose()?,
                    alignment: align.as_ref().map(|a| parse_pharaoh(&a[i])).transpose()?,
                })
            };
            build().map_err(|e| e.in_record(id))
        })
        .collect())
}

pub fn load_corpus(files: &CorpusFiles) -> Result<Vec<CorpusEntry>> {
    let source = read(&files.source)?;
    let hypothesis = files.hypothesis.as_deref().map(read).transpose()?;
    let reference = files.reference.as_deref().map(read).transpose()?;
    let alignment = files.alignment.as_deref().map(read).transpose()?;
    parse_corpus(
        CorpusText {
            source: &source,
            hypothesis: hypothesis.as_deref(),
            reference: reference.as_deref(),
            alignment: alignment.as_deref(),
        },
        files.convention,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_lines() {
        let entries = parse_corpus(
            CorpusText {
                source: "a▁ b▁\nc d▁\n",
                hypothesis: Some("x▁\ny z▁\n"),
                alignment: Some("0-0 1-0\n0-1\n"),
                ..Default::default()
            },
            MarkerConvention::Suffix,
        )
        .unwrap();
        assert_eq!(entries.len(), 2);
        let r = entries[1].as_ref().unwrap();
        assert_eq!(r.id, 2);
        assert_eq!(r.source.len(), 2);
        assert_eq!(r.target().unwrap().len(), 2);
        assert_eq!(r.alignment.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn bad_lines_fail_their_record_only() {
        let entries = parse_corpus(
            CorpusText {
                source: "a▁\n▁\nb▁",
                ..Default::default()
            },
            MarkerConvention::Suffix,
        )
        .unwrap();
        assert!(entries[0].is_ok() && entries[2].is_ok());
        assert!(matches!(entries[1], Err(Error::Record { id: 2, .. })));
    }

    #[test]
    fn corpus_level_errors() {
        assert_eq!(
            parse_corpus(CorpusText::default(), MarkerConvention::Suffix).unwrap_err(),
            Error::EmptyCorpus
        );
        let err = parse_corpus(
            CorpusText {
                source: "a▁\nb▁",
                hypothesis: Some("x▁"),
                ..Default::default()
            },
            MarkerConvention::Suffix,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }
}
