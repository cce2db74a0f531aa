//! Marked subword sequences and the word/token index algebra.
//!
//! Sentences are stored in the end-of-word convention: a token carries
//! `word_final = true` when it closes a word. Every token and word index in
//! the public API is 1-based.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Word boundary marker used by sentencepiece-style vocabularies.
pub const MARKER: char = '\u{2581}';

/// Where the boundary marker sits in the input text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerConvention {
    /// `word▁` marks the last token of a word.
    #[default]
    Suffix,
    /// `▁word` marks the first token of a word.
    Prefix,
}

impl FromStr for MarkerConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suffix" => Ok(MarkerConvention::Suffix),
            "prefix" => Ok(MarkerConvention::Prefix),
            other => Err(Error::InvalidParameter(format!(
                "unknown marker convention {other:?} (expected suffix or prefix)"
            ))),
        }
    }
}

impl fmt::Display for MarkerConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerConvention::Suffix => f.write_str("suffix"),
            MarkerConvention::Prefix => f.write_str("prefix"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    word_final: bool,
}

impl Token {
    pub fn new(text: impl Into<String>, word_final: bool) -> Result<Self> {
        let text = text.into();
        if text.is_empty() || text.contains(MARKER) || text.chars().any(char::is_whitespace) {
            return Err(Error::MalformedToken {
                token: text,
                position: 0,
            });
        }
        Ok(Token { text, word_final })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_word_final(&self) -> bool {
        self.word_final
    }

    /// The token as it appears in suffix-marked text.
    pub fn marked(&self) -> String {
        if self.word_final {
            format!("{}{MARKER}", self.text)
        } else {
            self.text.clone()
        }
    }
}

impl Serialize for Token {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.marked())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.marked())
    }
}

/// Contiguous token range covered by one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WordSpan {
    pub word_index: usize,
    pub first: usize,
    pub last: usize,
}

impl WordSpan {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, token: usize) -> bool {
        self.first <= token && token <= self.last
    }
}

/// Sorted 1-based indices of word-final tokens for a sequence of `len` tokens.
///
/// The last index always equals `len`, so "next boundary at or after j" is
/// total on `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Boundaries {
    ends: Vec<usize>,
    len: usize,
}

impl Boundaries {
    pub fn new(ends: Vec<usize>, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Boundary("sequence has no tokens".into()));
        }
        if ends.first() == Some(&0) {
            return Err(Error::Boundary("boundary index 0 (indices are 1-based)".into()));
        }
        if let Some(w) = ends.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Boundary(format!(
                "boundaries not strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        match ends.last() {
            Some(&last) if last == len => Ok(Boundaries { ends, len }),
            Some(&last) => Err(Error::Boundary(format!(
                "last boundary {last} does not close the sequence of {len} tokens"
            ))),
            None => Err(Error::Boundary("no boundaries".into())),
        }
    }

    /// Boundaries for consecutive words of the given token lengths.
    pub fn from_word_lengths(lengths: &[usize]) -> Result<Self> {
        if lengths.contains(&0) {
            return Err(Error::Boundary("word of zero tokens".into()));
        }
        let ends: Vec<usize> = lengths
            .iter()
            .scan(0, |acc, &l| {
                *acc += l;
                Some(*acc)
            })
            .collect();
        let len = ends.last().copied().unwrap_or(0);
        Boundaries::new(ends, len)
    }

    /// Every token is its own word.
    pub fn singletons(len: usize) -> Result<Self> {
        Boundaries::new((1..=len).collect(), len)
    }

    pub fn token_count(&self) -> usize {
        self.len
    }

    pub fn word_count(&self) -> usize {
        self.ends.len()
    }

    pub fn ends(&self) -> &[usize] {
        &self.ends
    }

    pub fn contains(&self, token: usize) -> bool {
        self.ends.binary_search(&token).is_ok()
    }

    /// Smallest boundary `>= token`, or `None` past the end.
    pub fn next_at_or_after(&self, token: usize) -> Option<usize> {
        let pos = self.ends.partition_point(|&e| e < token);
        self.ends.get(pos).copied()
    }

    pub fn word_index_of(&self, token: usize) -> Result<usize> {
        if token == 0 || token > self.len {
            return Err(Error::index(token, self.len));
        }
        Ok(self.ends.partition_point(|&e| e < token) + 1)
    }

    pub fn word_first(&self, word: usize) -> Result<usize> {
        self.check_word(word)?;
        Ok(if word == 1 { 1 } else { self.ends[word - 2] + 1 })
    }

    pub fn word_last(&self, word: usize) -> Result<usize> {
        self.check_word(word)?;
        Ok(self.ends[word - 1])
    }

    pub fn span(&self, word: usize) -> Result<WordSpan> {
        Ok(WordSpan {
            word_index: word,
            first: self.word_first(word)?,
            last: self.word_last(word)?,
        })
    }

    pub fn spans(&self) -> Vec<WordSpan> {
        let mut first = 1;
        self.ends
            .iter()
            .enumerate()
            .map(|(k, &last)| {
                let span = WordSpan {
                    word_index: k + 1,
                    first,
                    last,
                };
                first = last + 1;
                span
            })
            .collect()
    }

    /// Number of words whose first token lies within the first `tokens` tokens.
    pub fn words_started(&self, tokens: usize) -> usize {
        if tokens == 0 {
            return 0;
        }
        (self.ends.partition_point(|&e| e < tokens) + 1).min(self.word_count())
    }

    /// Number of words fully contained in the first `tokens` tokens.
    pub fn words_completed(&self, tokens: usize) -> usize {
        self.ends.partition_point(|&e| e <= tokens)
    }

    fn check_word(&self, word: usize) -> Result<()> {
        if word == 0 || word > self.word_count() {
            return Err(Error::index(word, self.word_count()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenizedSentence {
    tokens: Vec<Token>,
    boundaries: Boundaries,
}

/// Result of [`parse_marked`]; `forced_final` is set when the last token
/// carried no marker and was closed implicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLine {
    pub sentence: TokenizedSentence,
    pub forced_final: bool,
}

pub fn parse_marked(line: &str, convention: MarkerConvention) -> Result<ParsedLine> {
    let raw: Vec<&str> = line.split_whitespace().collect();
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let malformed = |token: &str, position: usize| Error::MalformedToken {
        token: token.to_string(),
        position,
    };

    let mut tokens = Vec::with_capacity(raw.len());
    let mut forced_final = false;
    match convention {
        MarkerConvention::Suffix => {
            for (i, tok) in raw.iter().enumerate() {
                let (text, word_final) = match tok.strip_suffix(MARKER) {
                    Some(stem) => (stem, true),
                    None => (*tok, false),
                };
                if text.is_empty() || text.contains(MARKER) {
                    return Err(malformed(tok, i + 1));
                }
                tokens.push(Token {
                    text: text.to_string(),
                    word_final,
                });
            }
            if let Some(last) = tokens.last_mut() {
                if !last.word_final {
                    last.word_final = true;
                    forced_final = true;
                }
            }
        }
        MarkerConvention::Prefix => {
            let mut stems = Vec::with_capacity(raw.len());
            let mut starts = Vec::with_capacity(raw.len());
            for (i, tok) in raw.iter().enumerate() {
                let (text, starts_word) = match tok.strip_prefix(MARKER) {
                    Some(stem) => (stem, true),
                    None => (*tok, false),
                };
                if text.is_empty() || text.contains(MARKER) {
                    return Err(malformed(tok, i + 1));
                }
                stems.push(text);
                starts.push(starts_word);
            }
            for (i, text) in stems.iter().enumerate() {
                let word_final = starts.get(i + 1).copied().unwrap_or(true);
                tokens.push(Token {
                    text: text.to_string(),
                    word_final,
                });
            }
        }
    }

    Ok(ParsedLine {
        sentence: TokenizedSentence::from_tokens(tokens)?,
        forced_final,
    })
}

impl TokenizedSentence {
    /// Requires the last token to be word-final.
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        let ends = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.word_final)
            .map(|(i, _)| i + 1)
            .collect();
        let boundaries = Boundaries::new(ends, tokens.len())?;
        Ok(TokenizedSentence { tokens, boundaries })
    }

    pub fn parse(line: &str, convention: MarkerConvention) -> Result<Self> {
        parse_marked(line, convention).map(|p| p.sentence)
    }

    /// Shorthand for suffix-marked text.
    pub fn from_marked(line: &str) -> Result<Self> {
        TokenizedSentence::parse(line, MarkerConvention::Suffix)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn boundaries(&self) -> &Boundaries {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.boundaries.word_count()
    }

    pub fn word_spans(&self) -> Vec<WordSpan> {
        self.boundaries.spans()
    }

    pub fn word_index_of(&self, token: usize) -> Result<usize> {
        self.boundaries.word_index_of(token)
    }

    /// Surface form of word `word` (1-based), markers stripped.
    pub fn word_surface(&self, word: usize) -> Result<String> {
        let span = self.boundaries.span(word)?;
        Ok(self.tokens[span.first - 1..span.last]
            .iter()
            .map(Token::text)
            .collect())
    }

    /// Surface text of the first `tokens` tokens, words separated by single spaces.
    pub fn detokenize_prefix(&self, tokens: usize) -> String {
        let tokens = tokens.min(self.tokens.len());
        let mut out = String::new();
        for (i, tok) in self.tokens[..tokens].iter().enumerate() {
            out.push_str(&tok.text);
            if tok.word_final && i + 1 < tokens {
                out.push(' ');
            }
        }
        out
    }

    pub fn detokenize(&self) -> String {
        self.detokenize_prefix(self.tokens.len())
    }

    /// Re-encode with boundary markers under the given convention.
    pub fn to_marked(&self, convention: MarkerConvention) -> String {
        match convention {
            MarkerConvention::Suffix => self
                .tokens
                .iter()
                .map(Token::marked)
                .collect::<Vec<_>>()
                .join(" "),
            MarkerConvention::Prefix => {
                let mut starts_word = true;
                self.tokens
                    .iter()
                    .map(|t| {
                        let s = if starts_word {
                            format!("{MARKER}{}", t.text)
                        } else {
                            t.text.clone()
                        };
                        starts_word = t.word_final;
                        s
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        }
    }
}

impl fmt::Display for TokenizedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_marked(MarkerConvention::Suffix))
    }
}
